//! The coupled transposition walk and random graph process.
//!
//! Each event draws `(i, j)` uniformly from `{1..n}²` with replacement. A
//! draw with `i = j` idles; it counts toward the raw event count only. Any
//! other draw applies the transposition to the permutation and adds the edge
//! `i - j` to the graph in the same step, so at every snapshot
//! `D = N_nontrivial − 2Z` holds exactly.
//!
//! Time `c·n/2` is realised as an event count: `⌊c·n/2⌋` steps in
//! [`TimeMode::Discrete`], or the value of a rate-1 Poisson process at that
//! time in [`TimeMode::ContinuousPoisson`] (independent Poisson increments
//! between consecutive snapshots).

use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::graphcouple::EvolvingMultigraph;
use crate::par;
use crate::permcycle::{CycleIndexMode, DynamicPermutation, TranspositionEffect};
use crate::stats;

/// Default cutoff exponent for "large" cycles.
pub const DEFAULT_MASS_EXPONENT: f64 = 0.55;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeMode {
    Discrete,
    #[default]
    ContinuousPoisson,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub n: usize,
    /// Run until time `horizon_c · n/2`.
    pub horizon_c: f64,
    pub time_mode: TimeMode,
    /// c-values at which to record a snapshot; empty means the horizon only.
    pub snapshots: Vec<f64>,
    pub mass_exponent: f64,
    pub seed: u64,
    pub index_mode: CycleIndexMode,
    pub record_events: bool,
}

impl WalkConfig {
    pub fn new(n: usize, horizon_c: f64) -> Self {
        WalkConfig {
            n,
            horizon_c,
            time_mode: TimeMode::default(),
            snapshots: Vec::new(),
            mass_exponent: DEFAULT_MASS_EXPONENT,
            seed: 0,
            index_mode: CycleIndexMode::default(),
            record_events: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(self.horizon_c > 0.0 && self.horizon_c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "horizon c must be positive, got {}",
                self.horizon_c
            )));
        }
        if !(self.mass_exponent > 0.0 && self.mass_exponent < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "mass exponent must lie in (0, 1), got {}",
                self.mass_exponent
            )));
        }
        if let Some(bad) = self
            .snapshots
            .iter()
            .find(|&&c| !(c >= 0.0 && c <= self.horizon_c))
        {
            return Err(Error::InvalidConfig(format!(
                "snapshot c = {bad} outside [0, {}]",
                self.horizon_c
            )));
        }
        Ok(())
    }

    /// Snapshot c-values in ascending order.
    pub fn schedule(&self) -> Vec<f64> {
        let mut s = if self.snapshots.is_empty() {
            vec![self.horizon_c]
        } else {
            self.snapshots.clone()
        };
        s.sort_by(f64::total_cmp);
        s
    }
}

/// Statistics of the coupled process at one scheduled time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotRecord {
    /// The c-value (or critical-window r-value) of the snapshot.
    pub label: f64,
    pub raw_events: u64,
    pub nontrivial_events: u64,
    /// D: distance to the identity.
    pub distance: u64,
    /// Z: fragmentations so far.
    pub fragmentations: u64,
    /// K₁.
    pub cycle_of_one: u64,
    /// L₁.
    pub largest_cycle: u64,
    /// N↑.
    pub mass_above: u64,
    pub component_count: u64,
    pub giant_size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WalkEvent {
    pub i: usize,
    pub j: usize,
    pub effect: TranspositionEffect,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    pub n: usize,
    pub records: Vec<SnapshotRecord>,
    pub events: Option<Vec<WalkEvent>>,
}

/// The walk's permutation and graph advanced in lockstep.
#[derive(Debug, Clone)]
pub struct CoupledWalk {
    perm: DynamicPermutation,
    graph: EvolvingMultigraph,
    raw_events: u64,
    nontrivial_events: u64,
    fragmentations: u64,
}

impl CoupledWalk {
    pub fn new(n: usize, mode: CycleIndexMode) -> Result<Self> {
        Ok(CoupledWalk {
            perm: DynamicPermutation::identity_with_mode(n, mode)?,
            graph: EvolvingMultigraph::new(n)?,
            raw_events: 0,
            nontrivial_events: 0,
            fragmentations: 0,
        })
    }

    pub fn n(&self) -> usize {
        self.perm.n()
    }

    pub fn permutation(&self) -> &DynamicPermutation {
        &self.perm
    }

    pub fn graph(&self) -> &EvolvingMultigraph {
        &self.graph
    }

    pub fn raw_events(&self) -> u64 {
        self.raw_events
    }

    pub fn nontrivial_events(&self) -> u64 {
        self.nontrivial_events
    }

    pub fn fragmentations(&self) -> u64 {
        self.fragmentations
    }

    /// Applies one event. `i = j` idles and adds no edge.
    pub fn step(&mut self, i: usize, j: usize) -> Result<TranspositionEffect> {
        let effect = self.perm.apply_transposition(i, j)?;
        self.raw_events += 1;
        if effect != TranspositionEffect::NoOp {
            self.graph.add_edge(i, j)?;
            self.nontrivial_events += 1;
            if effect.is_fragmentation() {
                self.fragmentations += 1;
            }
        }
        Ok(effect)
    }

    /// Draws and applies one uniform event.
    pub fn random_step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> TranspositionEffect {
        let n = self.n();
        let i = rng.random_range(1..=n);
        let j = rng.random_range(1..=n);
        self.step(i, j).expect("positions drawn in range")
    }

    pub fn snapshot(&self, label: f64, mass_exponent: f64) -> SnapshotRecord {
        SnapshotRecord {
            label,
            raw_events: self.raw_events,
            nontrivial_events: self.nontrivial_events,
            distance: self.perm.distance() as u64,
            fragmentations: self.fragmentations,
            cycle_of_one: self.perm.cycle_size_of(1).expect("element 1 exists") as u64,
            largest_cycle: self.perm.largest_cycle() as u64,
            mass_above: self.perm.mass_above(mass_exponent) as u64,
            component_count: self.graph.component_count() as u64,
            giant_size: self.graph.giant_size() as u64,
        }
    }
}

/// Event counts at which each scheduled snapshot is taken.
fn event_targets<R: Rng + ?Sized>(
    n: usize,
    schedule: &[f64],
    mode: TimeMode,
    rng: &mut R,
) -> Vec<u64> {
    let half_n = n as f64 / 2.0;
    match mode {
        TimeMode::Discrete => schedule
            .iter()
            .map(|c| (c * half_n).floor() as u64)
            .collect(),
        TimeMode::ContinuousPoisson => {
            let mut prev_c = 0.0;
            let mut total = 0u64;
            schedule
                .iter()
                .map(|&c| {
                    let rate = (c - prev_c) * half_n;
                    prev_c = c;
                    if rate > 0.0 {
                        total += Poisson::new(rate).expect("positive rate").sample(rng) as u64;
                    }
                    total
                })
                .collect()
        }
    }
}

fn run_schedule<R: Rng + ?Sized>(
    config: &WalkConfig,
    schedule: &[f64],
    labels: &[f64],
    rng: &mut R,
) -> Result<WalkTrace> {
    let mut walk = CoupledWalk::new(config.n, config.index_mode)?;
    let targets = event_targets(config.n, schedule, config.time_mode, rng);
    let mut events = config.record_events.then(Vec::new);
    let mut records = Vec::with_capacity(schedule.len());
    for (&target, &label) in targets.iter().zip(labels) {
        while walk.raw_events() < target {
            let n = walk.n();
            let i = rng.random_range(1..=n);
            let j = rng.random_range(1..=n);
            let effect = walk.step(i, j)?;
            if let Some(log) = events.as_mut() {
                log.push(WalkEvent { i, j, effect });
            }
        }
        records.push(walk.snapshot(label, config.mass_exponent));
    }
    Ok(WalkTrace {
        n: config.n,
        records,
        events,
    })
}

/// Runs the coupled process to the horizon, recording the scheduled
/// snapshots.
pub fn run<R: Rng + ?Sized>(config: &WalkConfig, rng: &mut R) -> Result<WalkTrace> {
    config.validate()?;
    let mut times = config.schedule();
    // the walk always runs to the horizon, even if no snapshot sits there
    let extra = times.last().is_some_and(|&c| c < config.horizon_c);
    if extra {
        times.push(config.horizon_c);
    }
    let mut trace = run_schedule(config, &times, &times, rng)?;
    if extra {
        trace.records.pop();
    }
    Ok(trace)
}

/// Independent replicates of [`run`], replicate `r` on stream `r` of
/// `config.seed`.
pub fn run_replicates(config: &WalkConfig, reps: u64) -> Result<Vec<WalkTrace>> {
    config.validate()?;
    par::replicate(config.seed, reps, |_, rng| run(config, rng))
        .into_iter()
        .collect()
}

/// Replays a scripted event list from the identity.
pub fn run_script(
    n: usize,
    events: &[(usize, usize)],
) -> Result<(CoupledWalk, Vec<TranspositionEffect>)> {
    let mut walk = CoupledWalk::new(n, CycleIndexMode::default())?;
    let effects = events
        .iter()
        .map(|&(i, j)| walk.step(i, j))
        .collect::<Result<Vec<_>>>()?;
    Ok((walk, effects))
}

pub const TRACE_CSV_HEADER: &str = "rep,c_or_r,N_raw,N_nontrivial,D,Z,K1,L1,N_up,components,giant";

/// Writes trace rows in the documented CSV layout (no header).
pub fn write_trace_rows<W: Write>(out: &mut W, rep: u64, trace: &WalkTrace) -> std::io::Result<()> {
    for r in &trace.records {
        writeln!(
            out,
            "{rep},{},{},{},{},{},{},{},{},{},{}",
            r.label,
            r.raw_events,
            r.nontrivial_events,
            r.distance,
            r.fragmentations,
            r.cycle_of_one,
            r.largest_cycle,
            r.mass_above,
            r.component_count,
            r.giant_size
        )?;
    }
    Ok(())
}

/// `c_n(r) = 1 − n^{−r/3}`.
pub fn critical_time(n: usize, r: f64) -> f64 {
    1.0 - (n as f64).powf(-r / 3.0)
}

/// `W_n(r) = (6/log n)^{1/2} (Z − (r/6) log n)`.
pub fn critical_statistic(n: usize, r: f64, fragmentations: u64) -> f64 {
    let ln_n = (n as f64).ln();
    (6.0 / ln_n).sqrt() * (fragmentations as f64 - r / 6.0 * ln_n)
}

/// Samples of `W_n(r)` across replicates; `samples[k][rep]` belongs to
/// `r_grid[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalWindowSamples {
    pub n: usize,
    pub r_grid: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl CriticalWindowSamples {
    pub fn at(&self, r: f64) -> Option<&[f64]> {
        self.r_grid
            .iter()
            .position(|&x| x == r)
            .map(|k| self.samples[k].as_slice())
    }
}

/// Runs `reps` continuous-time walks through the critical window and
/// evaluates `W_n(r)` at `c_n(r)·n/2` for every `r` in the grid, all within
/// a single run per replicate.
pub fn critical_window_trace(
    n: usize,
    r_grid: &[f64],
    reps: u64,
    seed: u64,
    index_mode: CycleIndexMode,
) -> Result<CriticalWindowSamples> {
    if n < 2 {
        return Err(Error::InvalidConfig("critical window needs n >= 2".into()));
    }
    if let Some(bad) = r_grid.iter().find(|&&r| !(0.0..=1.0).contains(&r)) {
        return Err(Error::InvalidConfig(format!("r = {bad} outside [0, 1]")));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let schedule: Vec<f64> = grid.iter().map(|&r| critical_time(n, r)).collect();
    let config = WalkConfig {
        horizon_c: schedule
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(f64::MIN_POSITIVE),
        index_mode,
        ..WalkConfig::new(n, 1.0)
    };
    let traces = par::replicate(seed, reps, |_, rng| {
        run_schedule(&config, &schedule, &grid, rng)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let samples = (0..grid.len())
        .map(|k| {
            traces
                .iter()
                .map(|t| critical_statistic(n, grid[k], t.records[k].fragmentations))
                .collect()
        })
        .collect();
    Ok(CriticalWindowSamples {
        n,
        r_grid: grid,
        samples,
    })
}

/// Fragmentation counts `Z_c` across independent runs.
#[derive(Debug, Clone, PartialEq)]
pub struct FragmentationCensus {
    pub n: usize,
    pub c: f64,
    pub samples: Vec<u64>,
}

impl FragmentationCensus {
    pub fn histogram(&self) -> Vec<u64> {
        stats::histogram(&self.samples)
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&z| z as f64).collect()
    }

    pub fn mean(&self) -> f64 {
        stats::mean(&self.as_f64())
    }

    pub fn variance(&self) -> f64 {
        stats::variance(&self.as_f64())
    }

    pub fn std_error(&self) -> f64 {
        stats::std_error(&self.as_f64())
    }
}

/// Empirical distribution of the fragmentation count at time `cn/2`.
pub fn fragmentation_census(
    n: usize,
    c: f64,
    reps: u64,
    seed: u64,
    time_mode: TimeMode,
) -> Result<FragmentationCensus> {
    let config = WalkConfig {
        time_mode,
        seed,
        ..WalkConfig::new(n, c)
    };
    let samples = run_replicates(&config, reps)?
        .iter()
        .map(|t| t.records[0].fragmentations)
        .collect();
    Ok(FragmentationCensus { n, c, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::par::replicate_rng;

    #[test]
    fn scripted_events() {
        let (walk, effects) = run_script(5, &[(1, 2), (3, 4), (1, 3)]).unwrap();
        assert!(effects
            .iter()
            .all(|e| matches!(e, TranspositionEffect::Coagulation { .. })));
        assert_eq!(walk.permutation().distance(), 3);
        assert_eq!(walk.fragmentations(), 0);
        assert_eq!(walk.nontrivial_events(), 3);

        let (walk, effects) = run_script(5, &[(1, 2), (3, 4), (1, 3), (1, 2)]).unwrap();
        assert!(effects[3].is_fragmentation());
        assert_eq!(walk.permutation().distance(), 2);
        assert_eq!(walk.fragmentations(), 1);
        assert_eq!(walk.nontrivial_events() - 2 * walk.fragmentations(), 2);
    }

    #[test]
    fn idle_script() {
        let (walk, _) = run_script(4, &[(2, 2), (3, 3), (1, 1)]).unwrap();
        assert_eq!(walk.permutation().distance(), 0);
        assert_eq!(walk.fragmentations(), 0);
        assert_eq!(walk.raw_events(), 3);
        assert_eq!(walk.graph().total_edges(), 0);
    }

    #[test]
    fn discrete_mode_takes_floor_steps() {
        let config = WalkConfig {
            time_mode: TimeMode::Discrete,
            snapshots: vec![0.5, 1.0, 1.5],
            ..WalkConfig::new(101, 1.5)
        };
        let trace = run(&config, &mut replicate_rng(9, 0)).unwrap();
        let raw: Vec<u64> = trace.records.iter().map(|r| r.raw_events).collect();
        assert_eq!(raw, vec![25, 50, 75]);
    }

    #[test]
    fn identity_holds_and_counts_are_monotone() {
        let config = WalkConfig {
            snapshots: vec![0.2, 0.7, 1.0, 1.8, 2.5],
            ..WalkConfig::new(300, 2.5)
        };
        for rep in 0..20 {
            let trace = run(&config, &mut replicate_rng(11, rep)).unwrap();
            let mut last_z = 0;
            for r in &trace.records {
                assert_eq!(r.distance, r.nontrivial_events - 2 * r.fragmentations);
                assert!(r.distance <= r.nontrivial_events);
                assert!(r.fragmentations >= last_z);
                last_z = r.fragmentations;
            }
        }
    }

    #[test]
    fn snapshot_beyond_horizon_rejected() {
        let config = WalkConfig {
            snapshots: vec![3.0],
            ..WalkConfig::new(10, 2.0)
        };
        assert!(config.validate().is_err());
        assert!(WalkConfig::new(10, 0.0).validate().is_err());
    }

    #[test]
    fn critical_window_origin_is_zero() {
        let s = critical_window_trace(500, &[0.0, 0.5], 10, 3, CycleIndexMode::Treap).unwrap();
        assert!(s.at(0.0).unwrap().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn trace_rows_render() {
        let config = WalkConfig {
            record_events: true,
            ..WalkConfig::new(20, 1.0)
        };
        let trace = run(&config, &mut replicate_rng(1, 0)).unwrap();
        assert_eq!(
            trace.events.as_ref().unwrap().len() as u64,
            trace.records[0].raw_events
        );
        let mut buf = Vec::new();
        write_trace_rows(&mut buf, 4, &trace).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert_eq!(
            line.trim_end().split(',').count(),
            TRACE_CSV_HEADER.split(',').count()
        );
        assert!(line.starts_with("4,1,"));
    }
}
