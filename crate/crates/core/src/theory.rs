//! Closed-form limit quantities for the transposition walk and the coupled
//! random graph, plus a Poisson Galton–Watson sampler used as an oracle.
//!
//! Every function is pure. Combinatorial quantities are evaluated in log
//! space through `ln Γ` so they stay finite for `n` in the millions.

use std::f64::consts::PI;

use num_bigint::BigUint;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Below this distance from `c = 1` the survival probability is declared zero.
const THETA_CRITICAL_EPS: f64 = 1e-12;

/// Default cap on the number of individuals in [`pgw_progeny_sample`].
pub const PGW_DEFAULT_CAP: u64 = 1_000_000;

/// Series are abandoned (and closed forms used) past this many terms.
const SERIES_MAX_TERMS: usize = 20_000_000;

fn require_positive(function: &'static str, c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(function, c, "c > 0"))
    }
}

/// Limiting mean of the subcritical fragmentation count,
/// `κ(c) = (−log(1 − c) − c) / 2` for `0 ≤ c < 1`.
pub fn kappa(c: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::domain("kappa", c, "0 <= c < 1"));
    }
    Ok((-(-c).ln_1p() - c) / 2.0)
}

/// Large deviation rate `α(c) = c − 1 − log c`.
pub fn alpha(c: f64) -> Result<f64> {
    require_positive("alpha", c)?;
    Ok(c - 1.0 - c.ln())
}

fn ln_borel(c: f64, k: u64) -> f64 {
    let kf = k as f64;
    -c.ln() + (kf - 1.0) * kf.ln() - ln_gamma(kf + 1.0) + kf * (c.ln() - c)
}

/// `β_k(c) = (1/c) k^{k−1}/k! (c e^{−c})^k`: the Borel law of the total
/// progeny of a Poisson(c) Galton–Watson tree (a defective law for `c > 1`).
pub fn borel_pmf(c: f64, k: u64) -> Result<f64> {
    require_positive("borel_pmf", c)?;
    if k == 0 {
        return Err(Error::domain("borel_pmf", 0.0, "k >= 1"));
    }
    Ok(ln_borel(c, k).exp())
}

/// A truncated positive series together with a rigorous bound on what was
/// left out.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Bound on `Σ_{k>K} k^{−s} e^{−αk}` by the integral of the envelope.
fn envelope_tail(k: f64, s: f64, alpha: f64) -> f64 {
    let mut bound = f64::INFINITY;
    if s > 1.0 {
        bound = k.powf(1.0 - s) / (s - 1.0);
    }
    if alpha > 0.0 {
        bound = bound.min(k.powf(-s) * (-alpha * k).exp() / alpha);
    }
    bound
}

/// Evaluates `Σ_k k^{−power} β_k(c)` until the Stirling envelope
/// `β_k ≤ k^{−3/2} e^{−α(c) k} / (c √(2π))` bounds the tail by `tol`.
///
/// Returns `None` if `max_terms` is reached first (only happens close to
/// `c = 1`, where the series converges polynomially).
pub fn borel_moment_series(c: f64, power: i32, tol: f64, max_terms: usize) -> Option<SeriesSum> {
    let a = c - 1.0 - c.ln();
    let s = 1.5 + power as f64;
    let envelope_scale = 1.0 / (c * (2.0 * PI).sqrt());
    let ln_x = c.ln() - c;
    let mut ln_term = ln_borel(c, 1);
    let mut sum = 0.0;
    let mut comp = 0.0;
    for k in 1..=max_terms {
        let kf = k as f64;
        if k > 1 {
            // β_{k}/β_{k−1} = (k/(k−1))^{k−2} x
            let km1 = kf - 1.0;
            ln_term += (km1 - 1.0) * (1.0 / km1).ln_1p() + ln_x;
        }
        let term = (ln_term - power as f64 * kf.ln()).exp();
        // Kahan summation
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if k % 16 == 0 || term < 1e-300 {
            let tail = envelope_scale * envelope_tail(kf, s, a);
            if tail <= tol {
                return Some(SeriesSum {
                    value: sum,
                    tail_bound: tail,
                    terms: k,
                });
            }
        }
    }
    None
}

/// `β_∞(c) = 1 − Σ_k β_k(c)`, the mass the Borel law puts on infinity.
///
/// Computed from the series; within reach of `c = 1` where the series cannot
/// be truncated the closed form (0 for `c ≤ 1`, θ(c) above) is returned.
pub fn borel_inf(c: f64) -> Result<f64> {
    require_positive("borel_inf", c)?;
    match borel_moment_series(c, 0, 1e-13, SERIES_MAX_TERMS) {
        Some(s) => Ok((1.0 - s.value).max(0.0)),
        None => theta(c),
    }
}

/// Survival probability of a Poisson(c) Galton–Watson process: zero for
/// `c ≤ 1`, otherwise the root in (0, 1) of `θ = 1 − e^{−cθ}`.
pub fn theta(c: f64) -> Result<f64> {
    require_positive("theta", c)?;
    if c <= 1.0 + THETA_CRITICAL_EPS {
        return Ok(0.0);
    }
    // h(θ) = (1 − e^{−cθ})/θ − 1 decreases from c − 1 > 0 to −e^{−c} < 0.
    let h = |t: f64| -(-c * t).exp_m1() / t - 1.0;
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Extinction probability `ρ = 1 − θ(c)`; solves `ρ = e^{−c(1−ρ)}`.
pub fn rho(c: f64) -> Result<f64> {
    Ok(1.0 - theta(c)?)
}

/// `g(c) = E Υ(c)`, the limiting number of cycles (and of graph components)
/// per vertex at time `cn/2`.
///
/// Uses the closed forms `1 − c/2` (for `c ≤ 1`) and `ρ(1 − cρ/2)` (duality,
/// for `c > 1`); [`g_components_series`] is the independent route.
pub fn g_components(c: f64) -> Result<f64> {
    require_positive("g_components", c)?;
    if c <= 1.0 {
        Ok(1.0 - c / 2.0)
    } else {
        let r = rho(c)?;
        Ok(r * (1.0 - c * r / 2.0))
    }
}

/// Direct evaluation of `Σ_k (1/c) k^{k−2}/k! (c e^{−c})^k` with a tail bound.
pub fn g_components_series(c: f64, tol: f64) -> Result<SeriesSum> {
    require_positive("g_components_series", c)?;
    borel_moment_series(c, 1, tol, SERIES_MAX_TERMS).ok_or(Error::domain(
        "g_components_series",
        c,
        "series truncation within term budget",
    ))
}

/// Limiting distance per element, `u(c) = 1 − g(c)`.
pub fn u_distance(c: f64) -> Result<f64> {
    Ok(1.0 - g_components(c)?)
}

/// Standard deviation in the supercritical central limit theorem for the
/// distance: `σ = ρ(1 + ρ(c/2 − 1))`.
pub fn sigma_clt(c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 1.0) {
        return Err(Error::domain("sigma_clt", c, "c > 1"));
    }
    let r = rho(c)?;
    Ok(r * (1.0 + r * (c / 2.0 - 1.0)))
}

fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// Expected number of tree components on exactly `k` vertices in `G(n, p)`:
/// `C(n,k) k^{k−2} p^{k−1} (1−p)^{k(n−k) + C(k,2) − k + 1}`.
pub fn expected_tree_count(n: u64, k: u64, p: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("expected_tree_count", 0.0, "n >= 1"));
    }
    if k == 0 || k > n {
        return Err(Error::domain(
            "expected_tree_count",
            k as f64,
            "1 <= k <= n",
        ));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("expected_tree_count", p, "0 <= p <= 1"));
    }
    let (nf, kf) = (n as f64, k as f64);
    let absent_exponent = kf * (nf - kf) + kf * (kf - 1.0) / 2.0 - kf + 1.0;
    let mut ln_value = ln_choose(nf, kf) + (kf - 2.0) * kf.ln();
    if k > 1 {
        if p == 0.0 {
            return Ok(0.0);
        }
        ln_value += (kf - 1.0) * p.ln();
    }
    if absent_exponent > 0.0 {
        if p == 1.0 {
            return Ok(0.0);
        }
        ln_value += absent_exponent * (-p).ln_1p();
    }
    Ok(ln_value.exp())
}

/// Asymptotic form of [`expected_tree_count`] at `p = c/n` for
/// `k = o(n^{3/4})`:
/// `n k^{−5/2} / (c √(2π)) · exp(−α(c) k + (c−1) k²/(2n) − k³/(3n²))`.
pub fn lambda_asymptotic(n: u64, k: u64, c: f64) -> Result<f64> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::domain("lambda_asymptotic", c, "0 < c <= 1"));
    }
    let (nf, kf) = (n as f64, k as f64);
    if k == 0 || kf > nf.powf(0.7) {
        return Err(Error::domain("lambda_asymptotic", kf, "1 <= k <= n^0.7"));
    }
    let a = alpha(c)?;
    let prefactor = nf * kf.powf(-2.5) / (c * (2.0 * PI).sqrt());
    let exponent = -a * kf + (c - 1.0) * kf * kf / (2.0 * nf) - kf.powi(3) / (3.0 * nf * nf);
    Ok(prefactor * exponent.exp())
}

/// Exponential tail bound on the cluster size of a vertex in `G(n, c/n)`:
/// `min(1, c^{−1} e^{−α(c) y})`.
pub fn cluster_tail_bound(c: f64, y: f64) -> Result<f64> {
    require_positive("cluster_tail_bound", c)?;
    if y.is_nan() || y <= 0.0 {
        return Err(Error::domain("cluster_tail_bound", y, "y > 0"));
    }
    Ok(((-alpha(c)? * y).exp() / c).min(1.0))
}

/// Total progeny of one Galton–Watson tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PgwSample {
    Finite(u64),
    /// The tree exceeded the sampling cap; treated as surviving.
    Infinite,
}

impl PgwSample {
    pub fn finite(self) -> Option<u64> {
        match self {
            PgwSample::Finite(t) => Some(t),
            PgwSample::Infinite => None,
        }
    }
}

/// Samples the total progeny of a Poisson(c) Galton–Watson tree, returning
/// [`PgwSample::Infinite`] once more than `cap` individuals have been born.
pub fn pgw_progeny_sample<R: Rng + ?Sized>(c: f64, cap: u64, rng: &mut R) -> Result<PgwSample> {
    require_positive("pgw_progeny_sample", c)?;
    let mut total: u64 = 1;
    let mut generation: u64 = 1;
    while generation > 0 {
        // Children of a whole generation: a sum of Poissons is Poisson.
        let lambda = c * generation as f64;
        let children = Poisson::new(lambda)
            .map_err(|_| Error::domain("pgw_progeny_sample", lambda, "finite rate"))?
            .sample(rng) as u64;
        total += children;
        if total > cap {
            return Ok(PgwSample::Infinite);
        }
        generation = children;
    }
    Ok(PgwSample::Finite(total))
}

/// `φ(x) = Σ_{k=1}^{x} (k−1)!`, exact.
pub fn phi_factorial(x: u32) -> BigUint {
    let mut sum = BigUint::from(0u32);
    let mut factorial = BigUint::from(1u32);
    for k in 1..=x {
        if k > 1 {
            factorial *= k - 1;
        }
        sum += &factorial;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    /// Fixed-point iteration θ ← 1 − e^{−cθ} from θ = 1; a different route
    /// from the bisection used by `theta`.
    fn theta_fixed_point(c: f64) -> f64 {
        let mut t = 1.0_f64;
        for _ in 0..100_000 {
            t = 1.0 - (-c * t).exp();
        }
        t
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0).unwrap(), 0.0);
        assert!(close(kappa(0.8).unwrap(), 0.404_718_956_217_050, 1e-13));
        assert!(close(kappa(0.99).unwrap(), 1.807_585_092_994_046, 1e-12));
        assert!(kappa(1.0).is_err());
        assert!(kappa(-0.1).is_err());
    }

    #[test]
    fn borel_values() {
        assert!(close(borel_pmf(0.5, 1).unwrap(), (-0.5f64).exp(), 1e-15));
        assert!(close(
            borel_pmf(2.0, 2).unwrap(),
            0.036_631_277_777_468_36,
            1e-14
        ));
        assert!(borel_pmf(0.0, 1).is_err());
        // log-space keeps huge k finite
        let p = borel_pmf(0.9, 100_000).unwrap();
        assert!(p.is_finite() && p >= 0.0);
    }

    #[test]
    fn borel_inf_values() {
        assert!(borel_inf(0.5).unwrap().abs() < 1e-10);
        assert_eq!(borel_inf(1.0).unwrap(), 0.0);
        assert!(close(borel_inf(2.0).unwrap(), 0.796_812_130_020_020, 1e-10));
    }

    #[test]
    fn theta_values() {
        assert_eq!(theta(1.0).unwrap(), 0.0);
        assert_eq!(theta(0.3).unwrap(), 0.0);
        assert!(close(theta(2.0).unwrap(), 0.796_812_130_020_02, 1e-13));
        assert!(close(theta(10.0).unwrap(), 0.999_954_579_444_653_5, 1e-13));
        for c in [1.05, 1.5, 2.5, 4.0, 7.0] {
            let t = theta(c).unwrap();
            assert!((t - 1.0 + (-c * t).exp()).abs() < 1e-12);
            assert!(close(t, theta_fixed_point(c), 1e-9), "c={c}");
        }
    }

    #[test]
    fn rho_and_duality() {
        assert_eq!(rho(1.0).unwrap(), 1.0);
        let r = rho(2.0).unwrap();
        assert!(close(r, 0.203_187_869_979_979_95, 1e-13));
        assert!(close(
            2.0 * r * (-2.0 * r).exp(),
            2.0 * (-2.0f64).exp(),
            1e-14
        ));
    }

    #[test]
    fn g_and_u_values() {
        assert_eq!(g_components(0.5).unwrap(), 0.75);
        assert!(close(
            g_components(2.0).unwrap(),
            0.161_902_559_472_978_7,
            1e-12
        ));
        assert!(close(g_components(1e-9).unwrap(), 1.0, 1e-8));
        assert_eq!(u_distance(1.0).unwrap(), 0.5);
        assert!(close(
            u_distance(2.0).unwrap(),
            0.838_097_440_527_021_3,
            1e-12
        ));
        assert!(u_distance(1.5).unwrap() < 0.75);
        let s = g_components_series(2.0, 1e-12).unwrap();
        assert!(close(s.value, 0.161_902_559_472_978_7, 1e-11));
    }

    #[test]
    fn alpha_values() {
        assert_eq!(alpha(1.0).unwrap(), 0.0);
        assert!(close(alpha(2.0).unwrap(), 0.306_852_819_440_054_7, 1e-14));
        assert!(close(alpha(0.5).unwrap(), 0.193_147_180_559_945_3, 1e-14));
    }

    #[test]
    fn sigma_values() {
        let r2 = rho(2.0).unwrap();
        assert!(close(sigma_clt(2.0).unwrap(), r2, 1e-15));
        let r3 = 1.0 - theta_fixed_point(3.0);
        assert!(close(sigma_clt(3.0).unwrap(), r3 * (1.0 + r3 / 2.0), 1e-9));
        assert!(close(
            sigma_clt(3.0).unwrap(),
            0.061_291_536_949_760_2,
            1e-12
        ));
        assert!(sigma_clt(40.0).unwrap() < 1e-15);
        assert!(sigma_clt(1.0).is_err());
    }

    #[test]
    fn tree_count_values() {
        let v = expected_tree_count(100, 1, 0.01).unwrap();
        assert!(close(v, 36.972_963_764_972_68, 1e-9));
        assert!(close(expected_tree_count(3, 1, 0.5).unwrap(), 0.75, 1e-14));
        // spanning tree: (1−p) exponent is C(n,2) − n + 1
        let (n, p) = (6u64, 0.3f64);
        let expect = 6f64.powi(4) * p.powi(5) * (1.0 - p).powi(15 - 6 + 1);
        assert!(close(expected_tree_count(n, n, p).unwrap(), expect, 1e-12));
        assert!(expected_tree_count(3, 4, 0.5).is_err());
        assert!(expected_tree_count(3, 1, 1.5).is_err());
    }

    #[test]
    fn lambda_matches_tree_count_asymptotically() {
        let n = 1_000_000u64;
        let p = -(-1.0 / n as f64).exp_m1();
        let ratio =
            expected_tree_count(n, 1000, p).unwrap() / lambda_asymptotic(n, 1000, 1.0).unwrap();
        assert!(close(ratio, 1.001_584_253_683_766, 1e-6));
        // c = 1 reduces to the critical form
        let (nf, kf) = (n as f64, 1000.0f64);
        let critical =
            nf * kf.powf(-2.5) / (2.0 * PI).sqrt() * (-kf.powi(3) / (3.0 * nf * nf)).exp();
        assert!(close(
            lambda_asymptotic(n, 1000, 1.0).unwrap(),
            critical,
            1e-15
        ));
        let mut prev = f64::INFINITY;
        for k in 1..2000 {
            let l = lambda_asymptotic(n, k, 1.0).unwrap();
            assert!(l < prev);
            prev = l;
        }
        assert!(lambda_asymptotic(100, 100, 1.0).is_err());
    }

    #[test]
    fn tail_bound_values() {
        assert_eq!(cluster_tail_bound(0.5, 1e-9).unwrap(), 1.0);
        assert!(close(
            cluster_tail_bound(0.5, 20.0).unwrap(),
            0.042_012_149_419_415_89,
            1e-14
        ));
    }

    #[test]
    fn phi_values() {
        assert_eq!(phi_factorial(0), BigUint::from(0u32));
        assert_eq!(phi_factorial(1), BigUint::from(1u32));
        assert_eq!(phi_factorial(2), BigUint::from(2u32));
        assert_eq!(phi_factorial(3), BigUint::from(4u32));
        assert_eq!(phi_factorial(4), BigUint::from(10u32));
    }

    #[test]
    fn pgw_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws: Vec<u64> = (0..100_000)
            .map(|_| {
                pgw_progeny_sample(0.5, PGW_DEFAULT_CAP, &mut rng)
                    .unwrap()
                    .finite()
                    .unwrap()
            })
            .collect();
        let ones = draws.iter().filter(|&&t| t == 1).count() as f64 / draws.len() as f64;
        assert!(close(ones, 0.607, 0.005), "{ones}");
        let mean = draws.iter().sum::<u64>() as f64 / draws.len() as f64;
        assert!(close(mean, 2.0, 0.05), "{mean}");

        let survived = (0..20_000)
            .filter(|_| pgw_progeny_sample(2.0, 10_000, &mut rng).unwrap() == PgwSample::Infinite)
            .count() as f64
            / 20_000.0;
        assert!(close(survived, theta(2.0).unwrap(), 0.01), "{survived}");
    }
}
