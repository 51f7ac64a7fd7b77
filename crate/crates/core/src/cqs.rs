//! The cluster queuing system: independent birth–death chains `ξ^k`,
//! `1 ≤ k ≤ ⌊n^a⌋`, each with birth rate 1 and death rate `k ξ^k`, started
//! empty. Simulated exactly, event by event, on its own clock.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::par;

/// Occupancy of every level plus running totals.
#[derive(Debug, Clone, PartialEq)]
pub struct CqsState {
    /// `occupancy[k]` for `k` in `1..=cutoff`; index 0 unused.
    occupancy: Vec<u64>,
    total: u64,
    weighted: u64,
    clock: f64,
}

impl CqsState {
    pub fn new(cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidConfig(
                "queue cutoff must be at least 1".into(),
            ));
        }
        Ok(CqsState {
            occupancy: vec![0; cutoff + 1],
            total: 0,
            weighted: 0,
            clock: 0.0,
        })
    }

    pub fn cutoff(&self) -> usize {
        self.occupancy.len() - 1
    }

    pub fn occupancy(&self, k: usize) -> u64 {
        self.occupancy.get(k).copied().unwrap_or(0)
    }

    /// Σ_k ξ^k.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Σ_k k ξ^k.
    pub fn weighted(&self) -> u64 {
        self.weighted
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    /// Total jump rate: one birth per level plus all deaths.
    pub fn total_rate(&self) -> f64 {
        (self.cutoff() as u64 + self.weighted) as f64
    }

    fn check(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.cutoff() {
            Err(Error::OutOfRange {
                position: k,
                n: self.cutoff(),
            })
        } else {
            Ok(())
        }
    }

    pub fn birth(&mut self, k: usize) -> Result<()> {
        self.check(k)?;
        self.occupancy[k] += 1;
        self.total += 1;
        self.weighted += k as u64;
        Ok(())
    }

    pub fn death(&mut self, k: usize) -> Result<()> {
        self.check(k)?;
        if self.occupancy[k] == 0 {
            return Err(Error::InvalidConfig(format!("level {k} is empty")));
        }
        self.occupancy[k] -= 1;
        self.total -= 1;
        self.weighted -= k as u64;
        Ok(())
    }
}

/// `⌊n^a⌋`, the number of levels.
pub fn cqs_cutoff(n: usize, a: f64) -> Result<usize> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain("cqs_cutoff", a, "0 < a < 1"));
    }
    if n < 2 {
        return Err(Error::InvalidConfig(format!(
            "n must be at least 2, got {n}"
        )));
    }
    Ok(((n as f64).powf(a).floor() as usize).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CqsTracePoint {
    pub t: f64,
    pub total: u64,
    pub weighted: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqsRun {
    pub cutoff: usize,
    pub horizon: f64,
    pub sup_total: u64,
    pub sup_weighted: u64,
    /// Time average of `ξ^k` over `[0, horizon]`, index 0 unused.
    pub time_average: Vec<f64>,
    pub events: u64,
    pub trace: Option<Vec<CqsTracePoint>>,
}

impl CqsRun {
    /// Whether `sup Σξ ≤ (log n)²` and `sup Σkξ ≤ n^a (log n)²`.
    pub fn within_bounds(&self, n: usize, a: f64) -> (bool, bool) {
        let l2 = (n as f64).ln().powi(2);
        (
            self.sup_total as f64 <= l2,
            self.sup_weighted as f64 <= (n as f64).powf(a) * l2,
        )
    }
}

/// Exact event-driven run up to time `horizon`.
pub fn simulate_cqs<R: Rng + ?Sized>(
    n: usize,
    a: f64,
    horizon: f64,
    record_trace: bool,
    rng: &mut R,
) -> Result<CqsRun> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::domain(
            "simulate_cqs",
            horizon,
            "finite horizon >= 0",
        ));
    }
    let cutoff = cqs_cutoff(n, a)?;
    let mut state = CqsState::new(cutoff)?;
    let mut area = vec![0.0; cutoff + 1];
    let mut since = vec![0.0; cutoff + 1];
    let (mut sup_total, mut sup_weighted, mut events) = (0, 0, 0u64);
    let mut trace = record_trace.then(|| {
        vec![CqsTracePoint {
            t: 0.0,
            total: 0,
            weighted: 0,
        }]
    });

    loop {
        let rate = state.total_rate();
        let dt: f64 = rng.sample::<f64, _>(Exp1) / rate;
        if state.clock + dt > horizon {
            break;
        }
        state.clock += dt;
        let t = state.clock;
        let mut pick = rng.random::<f64>() * rate;
        let (k, is_birth) = if pick < cutoff as f64 {
            ((pick as usize).min(cutoff - 1) + 1, true)
        } else {
            pick -= cutoff as f64;
            let mut chosen = None;
            let mut last = 0;
            for k in 1..=cutoff {
                let w = (k as u64 * state.occupancy[k]) as f64;
                if w == 0.0 {
                    continue;
                }
                last = k;
                if pick < w {
                    chosen = Some(k);
                    break;
                }
                pick -= w;
            }
            // rounding can leave a sliver past the last occupied level
            (chosen.unwrap_or(last), false)
        };
        area[k] += state.occupancy[k] as f64 * (t - since[k]);
        since[k] = t;
        if is_birth {
            state.birth(k)?;
        } else {
            state.death(k)?;
        }
        events += 1;
        sup_total = sup_total.max(state.total);
        sup_weighted = sup_weighted.max(state.weighted);
        if let Some(tr) = trace.as_mut() {
            tr.push(CqsTracePoint {
                t,
                total: state.total,
                weighted: state.weighted,
            });
        }
    }

    let time_average = (0..=cutoff)
        .map(|k| {
            if k == 0 || horizon == 0.0 {
                0.0
            } else {
                (area[k] + state.occupancy[k] as f64 * (horizon - since[k])) / horizon
            }
        })
        .collect();
    Ok(CqsRun {
        cutoff,
        horizon,
        sup_total,
        sup_weighted,
        time_average,
        events,
        trace,
    })
}

pub fn simulate_cqs_replicates(
    n: usize,
    a: f64,
    horizon: f64,
    reps: u64,
    seed: u64,
) -> Result<Vec<CqsRun>> {
    cqs_cutoff(n, a)?;
    par::replicate(seed, reps, |_, rng| simulate_cqs(n, a, horizon, false, rng))
        .into_iter()
        .collect()
}

/// Embedded jump chain of an excursion away from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcursionChain {
    /// A strip of levels dominated by birth rate `r`, death rate `r m`:
    /// up with probability `1/(m+1)`.
    Strip,
    /// A single level `k`: birth 1, death `k m`, up with probability
    /// `1/(1 + k m)`.
    Level(u32),
}

impl ExcursionChain {
    pub fn up_probability(&self, m: u64) -> f64 {
        match *self {
            ExcursionChain::Strip => 1.0 / (m as f64 + 1.0),
            ExcursionChain::Level(k) => 1.0 / (1.0 + k as f64 * m as f64),
        }
    }

    /// Down/up odds from state `m`.
    fn odds(&self, m: u64) -> f64 {
        match *self {
            ExcursionChain::Strip => m as f64,
            ExcursionChain::Level(k) => k as f64 * m as f64,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            ExcursionChain::Level(0) => {
                Err(Error::InvalidConfig("level must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExcursionRecord {
    pub chain: ExcursionChain,
    /// Highest state visited, at least 1.
    pub max_level: u64,
    /// Jumps of the embedded chain until it returns to 0.
    pub duration: u64,
}

/// One excursion: enter state 1, run until 0.
pub fn sample_excursion<R: Rng + ?Sized>(chain: ExcursionChain, rng: &mut R) -> ExcursionRecord {
    let (mut m, mut max_level, mut duration) = (1u64, 1u64, 1u64);
    while m > 0 {
        if rng.random::<f64>() < chain.up_probability(m) {
            m += 1;
            max_level = max_level.max(m);
        } else {
            m -= 1;
        }
        duration += 1;
    }
    ExcursionRecord {
        chain,
        max_level,
        duration,
    }
}

/// `P(M > x)` for an excursion started at 1: the probability of reaching
/// `x + 1` before 0, i.e. `1 / Σ_{y=0}^{x} Π_{m=1}^{y} odds(m)`.
/// For a strip this is `1/φ(x+1)`.
pub fn excursion_tail_exact(chain: ExcursionChain, x: u64) -> Result<f64> {
    chain.validate()?;
    let (mut sum, mut prod) = (1.0, 1.0);
    for m in 1..=x {
        prod *= chain.odds(m);
        sum += prod;
    }
    Ok(1.0 / sum)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionTail {
    pub chain: ExcursionChain,
    pub excursions: u64,
    /// `empirical[x]` estimates `P(M > x)` for `x` in `0..=x_max`.
    pub empirical: Vec<f64>,
    pub exact: Vec<f64>,
}

impl ExcursionTail {
    pub fn max_abs_error(&self) -> f64 {
        self.empirical
            .iter()
            .zip(&self.exact)
            .map(|(e, x)| (e - x).abs())
            .fold(0.0, f64::max)
    }
}

pub fn excursion_max_distribution(
    chain: ExcursionChain,
    excursions: u64,
    x_max: u64,
    seed: u64,
) -> Result<ExcursionTail> {
    chain.validate()?;
    if excursions == 0 {
        return Err(Error::InvalidConfig(
            "at least one excursion is required".into(),
        ));
    }
    let maxima = par::replicate(seed, excursions, |_, rng| {
        sample_excursion(chain, rng).max_level
    });
    let empirical = (0..=x_max)
        .map(|x| maxima.iter().filter(|&&m| m > x).count() as f64 / excursions as f64)
        .collect();
    let exact = (0..=x_max)
        .map(|x| excursion_tail_exact(chain, x))
        .collect::<Result<_>>()?;
    Ok(ExcursionTail {
        chain,
        excursions,
        empirical,
        exact,
    })
}
