//! Monte-Carlo checks of the tail bounds behind the recovery guarantee.
//!
//! Each `mc_*` function counts how often an event fires over independent
//! trials (trial `t` uses `derive_seed(seed, t)`) and compares the frequency
//! with the corresponding closed-form bound. The per-trial functions are
//! public so callers can distribute trials and aggregate with
//! [`McReport::from_counts`].

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::certificate::{apply_r, injectivity_exact, sampled_operator_norm};
use crate::error::{Error, Result};
use crate::math;
use crate::norms::{spectral_norm_hopm, HopmOptions};
use crate::rng::{derive_seed, rng_from_seed};
use crate::sampling::{aspect_ratio, sample_omega};
use crate::subspace::{mu_subspace, TuckerSubspaces};
use crate::tensor::{volume, Dims, IndexTriple, Mode, Tensor3};

/// Smallest admissible trial count.
pub const MIN_TRIALS: usize = 100;

/// Restarts used for spectral norms inside Monte-Carlo trials.
pub const MC_HOPM_RESTARTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McReport {
    pub trials: usize,
    pub event_count: usize,
    pub empirical_prob: f64,
    pub paper_bound: f64,
    /// `paper_bound < 1`.
    pub bound_active: bool,
    /// Three standard errors of `empirical_prob` (normal approximation).
    pub three_sigma: f64,
}

impl McReport {
    pub fn from_counts(trials: usize, event_count: usize, paper_bound: f64) -> Self {
        let p = event_count as f64 / trials as f64;
        McReport {
            trials,
            event_count,
            empirical_prob: p,
            paper_bound,
            bound_active: paper_bound < 1.0,
            three_sigma: 3.0 * math::sqrt(p * (1.0 - p) / trials as f64),
        }
    }

    /// `empirical_prob ≤ min(1, paper_bound) + three_sigma`.
    pub fn within_bound(&self) -> bool {
        self.empirical_prob <= self.paper_bound.min(1.0) + self.three_sigma
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials < MIN_TRIALS {
        return Err(Error::Parameter(alloc::format!(
            "trials = {trials} is below the minimum of {MIN_TRIALS}"
        )));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Parameter(alloc::format!("tau = {tau} must be positive")));
    }
    Ok(())
}

/// `(τ²/2)/(1 + 2τ/3)`.
fn bernstein_rate(tau: f64) -> f64 {
    (tau * tau / 2.0) / (1.0 + 2.0 * tau / 3.0)
}

/// `μ(T)` and `r̄(T)` of the subspaces.
pub fn measured_mu_r(s: &TuckerSubspaces) -> Result<(f64, f64)> {
    let dims = s.dims();
    let mut mu: f64 = 0.0;
    for mode in Mode::ALL {
        mu = mu.max(mu_subspace(s.basis(mode), dims[mode.axis()])?);
    }
    Ok((mu, s.rbar()))
}

fn dim_sum(dims: Dims) -> f64 {
    (dims[0] + dims[1] + dims[2]) as f64
}

/// `2 r² d · exp(−(τ²/2)/(1+2τ/3) · m/(μ² r² d))`.
pub fn operator_tail_bound(dims: Dims, mu: f64, r: f64, m: usize, tau: f64) -> f64 {
    let d = dim_sum(dims);
    2.0 * r * r * d * math::exp(-bernstein_rate(tau) * m as f64 / (mu * mu * r * r * d))
}

/// `2 d1 d2 d3 · exp(−(τ²/2)/(1+2τ/3) · n1/(μ² r² d))`.
pub fn max_norm_tail_bound(dims: Dims, mu: f64, r: f64, n1: usize, tau: f64) -> f64 {
    let d = dim_sum(dims);
    2.0 * volume(dims) as f64 * math::exp(-bernstein_rate(tau) * n1 as f64 / (mu * mu * r * r * d))
}

/// One trial of [`mc_opnorm`]: `‖Q_T((N/n)P_Ω − I)Q_T‖` for a fresh
/// sample without replacement.
pub fn opnorm_trial(s: &TuckerSubspaces, n: usize, seed: u64) -> Result<f64> {
    injectivity_exact(s, &sample_omega(s.dims(), n, seed)?)
}

/// Frequency of `‖Q_T((N/n)P_Ω − I)Q_T‖ ≥ τ` for `Ω` uniform without
/// replacement, against [`operator_tail_bound`] with the measured `μ(T)`
/// and `r̄(T)`.
pub fn mc_opnorm(s: &TuckerSubspaces, n: usize, tau: f64, trials: usize, seed: u64) -> Result<McReport> {
    check_trials(trials)?;
    check_tau(tau)?;
    let (mu, r) = measured_mu_r(s)?;
    let mut count = 0;
    for t in 0..trials {
        if opnorm_trial(s, n, derive_seed(seed, t as u64))? >= tau {
            count += 1;
        }
    }
    Ok(McReport::from_counts(trials, count, operator_tail_bound(s.dims(), mu, r, n, tau)))
}

fn iid_batch(dims: Dims, n1: usize, seed: u64) -> Vec<IndexTriple> {
    let mut rng = rng_from_seed(seed);
    let total = volume(dims);
    (0..n1).map(|_| IndexTriple::from_offset(rng.random_range(0..total), dims)).collect()
}

/// One trial of [`mc_iid_ops`]: `(‖Q_T R Q_T‖, ‖Q_T R Q_T X‖_max)` for a
/// batch of `n1` iid uniform positions, with `X = probe/‖probe‖_max`.
pub fn iid_ops_trial(s: &TuckerSubspaces, probe: &Tensor3, n1: usize, seed: u64) -> Result<(f64, f64)> {
    let dims = s.dims();
    let batch = iid_batch(dims, n1, seed);
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for t in &batch {
        *counts.entry(t.offset(dims)).or_insert(0.0) += 1.0;
    }
    let points: Vec<(IndexTriple, f64)> =
        counts.into_iter().map(|(o, m)| (IndexTriple::from_offset(o, dims), m)).collect();
    let op = sampled_operator_norm(s, &points, volume(dims) as f64 / n1 as f64);
    let x = probe.scale(1.0 / probe.max_norm());
    let y = s.project_q(&apply_r(&batch, n1, dims, &s.project_q(&x)?)?)?;
    Ok((op, y.max_norm()))
}

/// Frequencies of `‖Q_T R Q_T‖ ≥ τ` and `‖Q_T R Q_T X‖_max ≥ τ` for one iid
/// batch of length `n1`, with `X = probe/‖probe‖_max` (callers pass the
/// dual witness). Bounds use the measured `μ(T)` and `r̄(T)`.
pub fn mc_iid_ops(
    s: &TuckerSubspaces,
    probe: &Tensor3,
    n1: usize,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<(McReport, McReport)> {
    check_trials(trials)?;
    check_tau(tau)?;
    s.check(probe)?;
    if n1 == 0 {
        return Err(Error::Parameter("n1 must be positive".into()));
    }
    if probe.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let (mu, r) = measured_mu_r(s)?;
    let dims = s.dims();
    let (mut op_count, mut max_count) = (0, 0);
    for t in 0..trials {
        let (op, mx) = iid_ops_trial(s, probe, n1, derive_seed(seed, t as u64))?;
        op_count += (op >= tau) as usize;
        max_count += (mx >= tau) as usize;
    }
    Ok((
        McReport::from_counts(trials, op_count, operator_tail_bound(dims, mu, r, n1, tau)),
        McReport::from_counts(trials, max_count, max_norm_tail_bound(dims, mu, r, n1, tau)),
    ))
}

fn spectral_or_zero(x: &Tensor3) -> Result<f64> {
    if x.is_zero() {
        return Ok(0.0);
    }
    let opts = HopmOptions { restarts: MC_HOPM_RESTARTS, ..HopmOptions::default() };
    Ok(spectral_norm_hopm(x, &opts)?.value)
}

/// One trial of [`mc_symmetrization`]: spectral estimates of
/// `(N/n)Σ P_i X − X` and `(N/n)Σ ε_i P_i X` on one iid sequence.
pub fn symmetrization_trial(x: &Tensor3, n: usize, seed: u64) -> Result<(f64, f64)> {
    let dims = x.dims();
    let batch = iid_batch(dims, n, seed);
    let mut rng = rng_from_seed(derive_seed(seed, u64::MAX));
    let scale = volume(dims) as f64 / n as f64;
    let mut signed = alloc::vec![0.0; volume(dims)];
    for t in &batch {
        let o = t.offset(dims);
        let eps = if rng.random::<bool>() { 1.0 } else { -1.0 };
        signed[o] += eps * scale * x.values()[o];
    }
    let centered = apply_r(&batch, n, dims, x)?.scale(-1.0);
    let rademacher = Tensor3::from_vec(dims, signed)?;
    Ok((spectral_or_zero(&centered)?, spectral_or_zero(&rademacher)?))
}

/// `4 exp(−(n t²/2)/(η² + 2ηt√N/3))`; zero when `η = 0`.
pub fn symmetrization_bernstein_term(dims: Dims, eta: f64, n: usize, t: f64) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    let vol = volume(dims) as f64;
    let denom = eta * eta + 2.0 * eta * t * math::sqrt(vol) / 3.0;
    4.0 * math::exp(-(n as f64 * t * t / 2.0) / denom)
}

/// Left side `P{‖(N/n)Σ P_i X − X‖ ≥ t}` against the right side
/// `4 P{‖(N/n)Σ ε_i P_i X‖ ≥ t/2} + 4 exp(…)` with `η = √N ‖X‖_max`, both
/// probabilities estimated on the same trials. `three_sigma` combines the
/// standard errors of both estimates.
pub fn mc_symmetrization(x: &Tensor3, n: usize, t: f64, trials: usize, seed: u64) -> Result<McReport> {
    check_trials(trials)?;
    check_tau(t)?;
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let (mut lhs, mut rhs) = (0, 0);
    for k in 0..trials {
        let (a, b) = symmetrization_trial(x, n, derive_seed(seed, k as u64))?;
        lhs += (a >= t) as usize;
        rhs += (b >= t / 2.0) as usize;
    }
    Ok(symmetrization_report(x, n, t, trials, lhs, rhs))
}

/// Builds the [`mc_symmetrization`] report from event counts.
pub fn symmetrization_report(x: &Tensor3, n: usize, t: f64, trials: usize, lhs: usize, rhs: usize) -> McReport {
    let dims = x.dims();
    let eta = math::sqrt(volume(dims) as f64) * x.max_norm();
    let p_rad = rhs as f64 / trials as f64;
    let bound = 4.0 * p_rad + symmetrization_bernstein_term(dims, eta, n, t);
    let mut report = McReport::from_counts(trials, lhs, bound);
    let p = report.empirical_prob;
    let var = p * (1.0 - p) / trials as f64 + 16.0 * p_rad * (1.0 - p_rad) / trials as f64;
    report.three_sigma = 3.0 * math::sqrt(var);
    report
}

/// `ν1 = max(d^{δ1} e n p*, (3+β)/δ1)` with `p* = max_j d_j / N`.
pub fn aspect_nu1(dims: Dims, n: usize, beta: f64, delta1: f64) -> f64 {
    let d = dim_sum(dims);
    let pstar = *dims.iter().max().expect("three dims") as f64 / volume(dims) as f64;
    (math::powf(d, delta1) * core::f64::consts::E * n as f64 * pstar).max((3.0 + beta) / delta1)
}

/// `d^{−β−1}/3`.
pub fn aspect_bound(dims: Dims, beta: f64) -> f64 {
    math::powf(dim_sum(dims), -beta - 1.0) / 3.0
}

/// Frequency of `ν_Ω ≥ ν1` for `Ω` uniform without replacement.
pub fn mc_aspect(dims: Dims, n: usize, beta: f64, delta1: f64, trials: usize, seed: u64) -> Result<McReport> {
    check_trials(trials)?;
    crate::tensor::check_dims(dims)?;
    let d = dim_sum(dims);
    if !(beta > 0.0) {
        return Err(Error::Parameter("beta must be positive".into()));
    }
    if delta1 < 1.0 / math::ln(d) - 1e-12 || delta1 > 1.0 {
        return Err(Error::Parameter(alloc::format!("delta1 = {delta1} outside [1/log d, 1]")));
    }
    let nu1 = aspect_nu1(dims, n, beta, delta1);
    let mut count = 0;
    for t in 0..trials {
        let omega = sample_omega(dims, n, derive_seed(seed, t as u64))?;
        if aspect_ratio(&omega) as f64 >= nu1 {
            count += 1;
        }
    }
    Ok(McReport::from_counts(trials, count, aspect_bound(dims, beta)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{dual_witness, OrthoDecomposition};
    use alloc::vec;
    use approx::assert_relative_eq;

    fn setup(dims: Dims, weights: Vec<f64>, seed: u64) -> (TuckerSubspaces, Tensor3) {
        let mut rng = rng_from_seed(seed);
        let d = OrthoDecomposition::random(dims, weights, &mut rng).unwrap();
        (d.subspaces(), dual_witness(&d))
    }

    #[test]
    fn report_arithmetic() {
        let r = McReport::from_counts(400, 100, 0.5);
        assert_eq!(r.empirical_prob, 0.25);
        assert!(r.bound_active);
        assert_relative_eq!(r.three_sigma, 3.0 * (0.25f64 * 0.75 / 400.0).sqrt());
        assert!(r.within_bound());
        assert!(!McReport::from_counts(100, 0, 3.0).bound_active);
    }

    #[test]
    fn trial_floor_enforced() {
        let (s, _) = setup([3, 3, 3], vec![1.0], 1);
        assert!(mc_opnorm(&s, 10, 0.5, 99, 0).is_err());
        assert!(mc_aspect([3, 3, 3], 5, 1.0, 0.5, 50, 0).is_err());
    }

    #[test]
    fn opnorm_trivial_cases() {
        let (s, _) = setup([4, 4, 4], vec![1.0], 2);
        let full = mc_opnorm(&s, 64, 1e-6, 100, 3).unwrap();
        assert_eq!(full.event_count, 0);
        let huge = mc_opnorm(&s, 10, 64.0 / 10.0 + 1.0, 100, 3).unwrap();
        assert_eq!(huge.event_count, 0);
    }

    #[test]
    fn iid_ops_large_batch_never_fires() {
        let (s, w) = setup([6, 6, 6], vec![1.0], 4);
        let (op, mx) = mc_iid_ops(&s, &w, 2160, 0.5, 100, 5).unwrap();
        assert_eq!(op.event_count, 0);
        assert_eq!(mx.event_count, 0);
        let (op, mx) = mc_iid_ops(&s, &w, 10, 217.0, 100, 5).unwrap();
        assert_eq!((op.event_count, mx.event_count), (0, 0));
    }

    #[test]
    fn symmetrization_zero_tensor() {
        let z = Tensor3::zeros([3, 3, 3]).unwrap();
        let r = mc_symmetrization(&z, 10, 0.1, 100, 1).unwrap();
        assert_eq!(r.event_count, 0);
        assert_eq!(r.paper_bound, 0.0);
    }

    #[test]
    fn aspect_bound_values() {
        assert_relative_eq!(aspect_bound([6, 6, 6], 1.0), 1.0 / 972.0);
        let r = mc_aspect([6, 6, 6], 1, 1.0, 1.0 / 18f64.ln(), 200, 1).unwrap();
        assert_eq!(r.event_count, 0);
        assert!(aspect_nu1([6, 6, 6], 1, 1.0, 1.0 / 18f64.ln()) > 1.0);
    }
}
