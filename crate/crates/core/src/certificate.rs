//! Golfing-scheme dual certificates and the two sufficient conditions for
//! exact recovery.
//!
//! For the iid batches `Ω_1, …, Ω_{n2}` of length `n1`, write
//! `R_k = I − (N/n1) Σ_{ω ∈ Ω_k} P_ω` (with multiplicity, `N = d1 d2 d3`).
//! Starting from a dual witness `W_0 = W`,
//!
//! ```text
//! W_ℓ = Q_T R_ℓ Q_T W_{ℓ−1},    G_k = Σ_{ℓ ≤ k} (I − R_ℓ) Q_T W_{ℓ−1},
//! ```
//!
//! so that `G_k` is supported on the sampled positions and
//! `Q_T G_k = W − W_k`. The certificate is accepted when
//!
//! * `‖Q_T((N/n) P_Ω − I) Q_T‖ ≤ 1/2`,
//! * `‖Q_T G − W‖_HS < (1/4)√(n/(2N))`,
//! * `‖Q_{T⊥} G‖ < 1/4`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math;
use crate::norms::{spectral_norm_digitalized, spectral_norm_hopm, HopmOptions};
use crate::rng::{gaussian_vec, rng_from_seed};
use crate::sampling::{BatchPlan, SampleSet};
use crate::subspace::{ProjectorKind, TuckerSubspaces};
use crate::tensor::{volume, Dims, IndexTriple, Mode, Tensor3};

/// Safety factor applied to the spectral estimate of `Q_{T⊥}G`.
pub const SPEC_PERP_MARGIN: f64 = 1.05;

/// Relative tolerance for `W = Q0_T W` on entry to [`build_golfing`].
pub const WITNESS_RANGE_TOL: f64 = 1e-8;

/// Largest dimension for which the digitalised upper bracket is computed.
const BRACKET_MAX_DIM: usize = 4;

/// `(N/n1) Σ_{ω ∈ batch} X(ω) e_ω`, i.e. `(I − R) X`.
fn sampled_part(batch: &[IndexTriple], n1: usize, x: &Tensor3) -> Result<Tensor3> {
    let dims = x.dims();
    let scale = volume(dims) as f64 / n1 as f64;
    let mut out = vec![0.0; volume(dims)];
    for t in batch {
        t.check(dims)?;
        let o = t.offset(dims);
        out[o] += scale * x.values()[o];
    }
    Ok(Tensor3::from_raw(dims, out))
}

/// `R X = X − (N/n1) Σ_{ω ∈ batch} X(ω) e_ω`, counting repeated positions
/// with multiplicity.
pub fn apply_r(batch: &[IndexTriple], n1: usize, dims: Dims, x: &Tensor3) -> Result<Tensor3> {
    if x.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: x.dims() });
    }
    if batch.len() != n1 || n1 == 0 {
        return Err(Error::Parameter(alloc::format!(
            "batch has {} positions, expected n1 = {n1} > 0",
            batch.len()
        )));
    }
    x.sub(&sampled_part(batch, n1, x)?)
}

/// Iterates of the golfing recursion.
#[derive(Clone, Debug)]
pub struct GolfingState {
    /// `W_0, W_1, …, W_{n2}`.
    pub residuals: Vec<Tensor3>,
    /// `G_0 = 0, G_1, …, G_{n2}`.
    pub partial: Vec<Tensor3>,
    pub plan: BatchPlan,
}

impl GolfingState {
    pub fn witness(&self) -> &Tensor3 {
        &self.residuals[0]
    }

    /// The final certificate `G_{n2}`.
    pub fn certificate(&self) -> &Tensor3 {
        self.partial.last().expect("G_0 is always stored")
    }

    /// `W_{n2}`.
    pub fn final_residual(&self) -> &Tensor3 {
        self.residuals.last().expect("W_0 is always stored")
    }

    pub fn batches(&self) -> usize {
        self.plan.n2
    }
}

/// Runs the golfing recursion over every batch of `plan`.
pub fn build_golfing(s: &TuckerSubspaces, w: &Tensor3, plan: &BatchPlan) -> Result<GolfingState> {
    let dims = s.dims();
    if w.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: w.dims() });
    }
    let q0w = s.apply(ProjectorKind::Q0, w)?;
    let residual = q0w.sub(w)?.hs_norm();
    if residual > WITNESS_RANGE_TOL * w.hs_norm().max(1.0) {
        return Err(Error::WitnessNotInRange { residual });
    }
    let mut residuals = Vec::with_capacity(plan.n2 + 1);
    let mut partial = Vec::with_capacity(plan.n2 + 1);
    residuals.push(w.clone());
    partial.push(Tensor3::zeros(dims)?);
    for batch in &plan.batches {
        if batch.len() != plan.n1 || plan.n1 == 0 {
            return Err(Error::Parameter("batch length differs from n1".into()));
        }
        let qw = s.project_q(residuals.last().expect("nonempty"))?;
        let hit = sampled_part(batch, plan.n1, &qw)?;
        let mut g = partial.last().expect("nonempty").clone();
        g.axpy(1.0, &hit)?;
        let next = s.project_q(&qw.sub(&hit)?)?;
        partial.push(g);
        residuals.push(next);
    }
    Ok(GolfingState { residuals, partial, plan: plan.clone() })
}

fn injectivity_apply(s: &TuckerSubspaces, mask: &[bool], scale: f64, x: &Tensor3) -> Result<Tensor3> {
    let qx = s.project_q(x)?;
    let mut y = Tensor3::from_raw(
        qx.dims(),
        qx.values().iter().zip(mask).map(|(v, &m)| if m { (scale - 1.0) * v } else { -v }).collect(),
    );
    y = s.project_q(&y)?;
    Ok(y)
}

/// Power-iteration estimate of `‖Q_T((N/n) P_Ω − I) Q_T‖`, the largest
/// `‖A x‖` seen over `probes` random starts in the range of `Q_T`.
///
/// Each probe stops early once `‖A x‖` changes by less than `1e-10`
/// relative. The value is a lower bound on the operator norm.
pub fn estimate_injectivity(
    s: &TuckerSubspaces,
    omega: &SampleSet,
    probes: usize,
    iters: usize,
    seed: u64,
) -> Result<f64> {
    let dims = s.dims();
    if omega.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: omega.dims() });
    }
    if probes == 0 || omega.is_empty() {
        return Err(Error::Parameter("need at least one probe and a nonempty sample".into()));
    }
    let mask = omega.mask();
    let scale = volume(dims) as f64 / omega.len() as f64;
    let mut rng = rng_from_seed(seed);
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        let mut x = s.project_q(&Tensor3::from_raw(dims, gaussian_vec(&mut rng, volume(dims))))?;
        let nx = x.hs_norm();
        if nx == 0.0 {
            break;
        }
        x = x.scale(1.0 / nx);
        let mut prev = f64::INFINITY;
        for _ in 0..iters {
            let ax = injectivity_apply(s, &mask, scale, &x)?;
            let value = ax.hs_norm();
            best = best.max(value);
            if value == 0.0 || math::abs(value - prev) <= 1e-10 * value {
                break;
            }
            prev = value;
            x = ax.scale(1.0 / value);
        }
    }
    Ok(best)
}

/// Orthonormal basis of the range of `Q_T` as rank-one tensors, returned as
/// `(mode-1 vectors, mode-2 vectors, mode-3 vectors)` column triples.
fn range_basis(s: &TuckerSubspaces) -> Vec<[Vec<f64>; 3]> {
    let p: [DMatrix<f64>; 3] = Mode::ALL.map(|m| s.basis(m).clone());
    let c: [DMatrix<f64>; 3] = Mode::ALL.map(|m| s.complement_basis(m));
    let cols = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.ncols()).map(|j| m.column(j).iter().cloned().collect()).collect()
    };
    let p = p.map(|m| cols(&m));
    let c = c.map(|m| cols(&m));
    let blocks: [[&Vec<Vec<f64>>; 3]; 4] = [
        [&p[0], &p[1], &p[2]],
        [&c[0], &p[1], &p[2]],
        [&p[0], &c[1], &p[2]],
        [&p[0], &p[1], &c[2]],
    ];
    let mut out = Vec::new();
    for [a, b, cc] in blocks {
        for x in a {
            for y in b {
                for z in cc {
                    out.push([x.clone(), y.clone(), z.clone()]);
                }
            }
        }
    }
    out
}

/// Exact `‖Q_T((N/n) P_Ω − I) Q_T‖` through an orthonormal basis `Φ` of the
/// range of `Q_T`: the norm equals the largest `|eig((N/n) Φ_Ωᵀ Φ_Ω − I)|`.
pub fn injectivity_exact(s: &TuckerSubspaces, omega: &SampleSet) -> Result<f64> {
    let dims = s.dims();
    if omega.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: omega.dims() });
    }
    if omega.is_empty() {
        return Err(Error::Parameter("sample must be nonempty".into()));
    }
    let points: Vec<(IndexTriple, f64)> = omega.indices().map(|t| (t, 1.0)).collect();
    Ok(sampled_operator_norm(s, &points, volume(dims) as f64 / omega.len() as f64))
}

/// `‖Q_T(scale · Σ_k m_k P_{ω_k} − I)Q_T‖` for distinct positions `ω_k`
/// with multiplicities `m_k`.
pub(crate) fn sampled_operator_norm(s: &TuckerSubspaces, points: &[(IndexTriple, f64)], scale: f64) -> f64 {
    let basis = range_basis(s);
    let k = basis.len();
    if k == 0 {
        return 0.0;
    }
    let phi = DMatrix::from_fn(points.len(), k, |i, j| {
        let (t, mult) = points[i];
        let [x, y, z] = &basis[j];
        math::sqrt(mult) * x[t.a - 1] * y[t.b - 1] * z[t.c - 1]
    });
    let m = phi.tr_mul(&phi) * scale - DMatrix::identity(k, k);
    let eig = m.symmetric_eigenvalues();
    eig.iter().fold(0.0, |acc: f64, &e| acc.max(math::abs(e)))
}

/// How [`check_certificate`] evaluates the injectivity condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InjectivityMethod {
    PowerIteration { probes: usize, iters: usize, seed: u64 },
    Exact,
}

impl Default for InjectivityMethod {
    fn default() -> Self {
        InjectivityMethod::PowerIteration { probes: 8, iters: 200, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateOptions {
    pub injectivity: InjectivityMethod,
    pub hopm: HopmOptions,
    pub margin: f64,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        CertificateOptions {
            injectivity: InjectivityMethod::default(),
            hopm: HopmOptions::default(),
            margin: SPEC_PERP_MARGIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CertificateReport {
    pub injectivity_tau: f64,
    pub hs_gap: f64,
    pub hs_threshold: f64,
    /// Raw spectral estimate of `Q_{T⊥}G` (a lower bound).
    pub spec_perp: f64,
    pub margin: f64,
    /// `8 ×` the digitalised value, an upper bound on `‖Q_{T⊥}G‖`; only
    /// computed when every dimension is at most 4. Informational.
    pub spec_perp_upper: Option<f64>,
    pub certified: bool,
}

impl CertificateReport {
    pub fn injectivity_ok(&self) -> bool {
        self.injectivity_tau <= 0.5
    }

    pub fn hs_ok(&self) -> bool {
        self.hs_gap < self.hs_threshold
    }

    pub fn spec_ok(&self) -> bool {
        self.spec_perp * self.margin < 0.25
    }
}

/// Evaluates both certificate conditions for the golfing output against the
/// observed set `omega` (`n = |omega|`).
pub fn check_certificate(
    state: &GolfingState,
    s: &TuckerSubspaces,
    omega: &SampleSet,
    opts: &CertificateOptions,
) -> Result<CertificateReport> {
    let dims = s.dims();
    let g = state.certificate();
    let qg = s.project_q(g)?;
    let hs_gap = qg.sub(state.witness())?.hs_norm();
    let n = omega.len() as f64;
    let hs_threshold = 0.25 * math::sqrt(n / (2.0 * volume(dims) as f64));
    let perp = g.sub(&qg)?;
    let (spec_perp, spec_perp_upper) = if perp.is_zero() {
        (0.0, Some(0.0))
    } else {
        let est = spectral_norm_hopm(&perp, &opts.hopm)?.value;
        let upper = if dims.iter().all(|&d| d <= BRACKET_MAX_DIM) {
            Some(8.0 * spectral_norm_digitalized(&perp)?)
        } else {
            None
        };
        (est, upper)
    };
    let injectivity_tau = match opts.injectivity {
        InjectivityMethod::PowerIteration { probes, iters, seed } => {
            estimate_injectivity(s, omega, probes, iters, seed)?
        }
        InjectivityMethod::Exact => injectivity_exact(s, omega)?,
    };
    let mut report = CertificateReport {
        injectivity_tau,
        hs_gap,
        hs_threshold,
        spec_perp,
        margin: opts.margin,
        spec_perp_upper,
        certified: false,
    };
    report.certified = report.injectivity_ok() && report.hs_ok() && report.spec_ok();
    Ok(report)
}

/// Smallest `n2 ≥ 1` with `n2 ≥ log(√32 N n^{−1/2}) / (−log τ)`.
pub fn required_batches(tau: f64, n: usize, dims: Dims) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Parameter(alloc::format!("tau = {tau} must lie in (0, 1)")));
    }
    if n == 0 {
        return Err(Error::Parameter("n must be positive".into()));
    }
    let arg = math::sqrt(32.0) * volume(dims) as f64 / math::sqrt(n as f64);
    let bound = math::ln(arg) / -math::ln(tau);
    Ok((math::ceil(bound).max(1.0)) as usize)
}

/// Sample-size threshold
/// `c0/δ2 · [√(q1 (1+β) N/δ1) + q1 d^{1+δ1} + q2 d^{1+δ2}]` with
/// `q1 = (β + log d)² α0² r log d`, `q2 = (1+β)(log d) μ0² r²`,
/// `d = d1 + d2 + d3`.
#[allow(clippy::too_many_arguments)]
pub fn theorem1_threshold(
    dims: Dims,
    r: usize,
    mu0: f64,
    alpha0: f64,
    beta: f64,
    delta1: f64,
    delta2: f64,
    c0: f64,
) -> Result<f64> {
    crate::tensor::check_dims(dims)?;
    let d = (dims[0] + dims[1] + dims[2]) as f64;
    let log_d = math::ln(d);
    let positive = [mu0, alpha0, beta, delta1, delta2, c0].iter().all(|&x| x > 0.0 && x.is_finite());
    if r == 0 || !positive {
        return Err(Error::Parameter("all parameters must be positive".into()));
    }
    const SLACK: f64 = 1e-12;
    for delta in [delta1, delta2] {
        if delta < 1.0 / log_d - SLACK || delta > 0.5 + SLACK {
            return Err(Error::Parameter(alloc::format!(
                "delta = {delta} outside [1/log d, 1/2] = [{}, 0.5]",
                1.0 / log_d
            )));
        }
    }
    let r = r as f64;
    let n = volume(dims) as f64;
    let q1 = (beta + log_d) * (beta + log_d) * alpha0 * alpha0 * r * log_d;
    let q2 = (1.0 + beta) * log_d * mu0 * mu0 * r * r;
    let bracket = math::sqrt(q1 * (1.0 + beta) * n / delta1)
        + q1 * math::powf(d, 1.0 + delta1)
        + q2 * math::powf(d, 1.0 + delta2);
    Ok(c0 / delta2 * bracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{dual_witness, OrthoDecomposition};
    use crate::rng::derive_seed;
    use crate::sampling::{iid_from_omega, sample_omega, split_batches};
    use crate::subspace::projector_rank;
    use approx::assert_relative_eq;

    fn instance(dims: Dims, weights: Vec<f64>, seed: u64) -> (OrthoDecomposition, TuckerSubspaces, Tensor3) {
        let mut rng = rng_from_seed(seed);
        let d = OrthoDecomposition::random(dims, weights, &mut rng).unwrap();
        let s = d.subspaces();
        let w = dual_witness(&d);
        (d, s, w)
    }

    fn plan(dims: Dims, n: usize, n1: usize, n2: usize, seed: u64) -> (SampleSet, BatchPlan) {
        let omega = sample_omega(dims, n, seed).unwrap();
        let seq = iid_from_omega(&omega, n1 * n2, derive_seed(seed, 1)).unwrap();
        let plan = split_batches(&seq, n1, n2).unwrap();
        (omega, plan)
    }

    #[test]
    fn apply_r_full_cover_vanishes() {
        let dims = [2, 3, 2];
        let x = Tensor3::from_fn(dims, |t| (t.a * 7 + t.b * 3 + t.c) as f64).unwrap();
        let batch: Vec<IndexTriple> = SampleSet::full(dims).unwrap().indices().collect();
        assert!(apply_r(&batch, 12, dims, &x).unwrap().is_zero());
        let z = Tensor3::zeros(dims).unwrap();
        assert!(apply_r(&batch[..3], 3, dims, &z).unwrap().is_zero());
        assert!(apply_r(&batch[..3], 4, dims, &z).is_err());
    }

    #[test]
    fn apply_r_counts_multiplicity() {
        let dims = [2, 2, 2];
        let x = Tensor3::from_fn(dims, |_| 1.0).unwrap();
        let t = IndexTriple::new(1, 2, 1);
        let y = apply_r(&[t, t], 2, dims, &x).unwrap();
        assert_eq!(y.get(t).unwrap(), 1.0 - 8.0);
        assert_eq!(y.get(IndexTriple::new(2, 2, 2)).unwrap(), 1.0);
    }

    #[test]
    fn apply_r_is_unbiased() {
        let dims = [2, 2, 2];
        let x = Tensor3::from_fn(dims, |t| (t.a + 2 * t.b) as f64 - 0.5 * t.c as f64).unwrap();
        let full = SampleSet::full(dims).unwrap();
        let trials = 10_000;
        let mut sum = vec![0.0; 8];
        let mut sq = vec![0.0; 8];
        for s in 0..trials {
            let seq = iid_from_omega(&full, 3, s).unwrap();
            let y = apply_r(seq.triples(), 3, dims, &x).unwrap();
            for (i, v) in y.values().iter().enumerate() {
                sum[i] += v;
                sq[i] += v * v;
            }
        }
        for i in 0..8 {
            let mean = sum[i] / trials as f64;
            let var = sq[i] / trials as f64 - mean * mean;
            assert!(mean.abs() <= 3.0 * (var / trials as f64).sqrt(), "entry {i}: mean {mean}");
        }
    }

    #[test]
    fn golfing_telescopes_and_stays_on_support() {
        let dims = [6, 5, 4];
        let (_, s, w) = instance(dims, vec![2.0, 1.0], 3);
        let (_, plan) = plan(dims, 90, 40, 4, 11);
        let state = build_golfing(&s, &w, &plan).unwrap();
        assert_eq!(state.residuals.len(), 5);
        for k in 0..=4 {
            let lhs = s.project_q(&state.partial[k]).unwrap();
            let rhs = w.sub(&state.residuals[k]).unwrap();
            assert!(lhs.sub(&rhs).unwrap().hs_norm() <= 1e-8 * w.hs_norm());
        }
        let support = plan.support(dims).unwrap().mask();
        for (v, &m) in state.certificate().values().iter().zip(&support) {
            assert!(m || *v == 0.0);
        }
        // One batch: Q_T G_1 = W − Q_T R_1 Q_T W.
        let first = build_golfing(&s, &w, &BatchPlan { n1: 40, n2: 1, batches: vec![plan.batches[0].clone()] })
            .unwrap();
        let r1 = apply_r(&plan.batches[0], 40, dims, &s.project_q(&w).unwrap()).unwrap();
        let expected = w.sub(&s.project_q(&r1).unwrap()).unwrap();
        let got = s.project_q(first.certificate()).unwrap();
        assert!(got.sub(&expected).unwrap().hs_norm() < 1e-10);
    }

    #[test]
    fn golfing_without_batches() {
        let (_, s, w) = instance([4, 4, 4], vec![1.0], 2);
        let state = build_golfing(&s, &w, &BatchPlan::empty()).unwrap();
        assert!(state.certificate().is_zero());
        assert_eq!(state.final_residual(), &w);
        let omega = SampleSet::full([4, 4, 4]).unwrap();
        let rep = check_certificate(&state, &s, &omega, &CertificateOptions::default()).unwrap();
        assert_relative_eq!(rep.hs_gap, w.hs_norm(), epsilon = 1e-12);
        assert!(!rep.certified);
    }

    #[test]
    fn golfing_rejects_out_of_range_witness() {
        let (_, s, _) = instance([4, 4, 4], vec![1.0], 2);
        let e = Tensor3::from_fn([4, 4, 4], |_| 1.0).unwrap();
        assert!(matches!(build_golfing(&s, &e, &BatchPlan::empty()), Err(Error::WitnessNotInRange { .. })));
    }

    #[test]
    fn golfing_residual_contracts() {
        let dims = [8, 8, 8];
        let (_, s, w) = instance(dims, vec![1.0], 21);
        let (_, plan) = plan(dims, 400, 300, 5, 4);
        let state = build_golfing(&s, &w, &plan).unwrap();
        let norms: Vec<f64> = state.residuals.iter().map(|r| r.hs_norm()).collect();
        for k in 1..norms.len() {
            assert!(norms[k] < 0.9 * norms[k - 1], "{norms:?}");
        }
    }

    #[test]
    fn injectivity_full_grid_is_zero() {
        let (_, s, _) = instance([4, 3, 5], vec![1.0, 0.5], 8);
        let full = SampleSet::full([4, 3, 5]).unwrap();
        assert!(estimate_injectivity(&s, &full, 2, 50, 1).unwrap() < 1e-10);
        assert!(injectivity_exact(&s, &full).unwrap() < 1e-10);
    }

    #[test]
    fn injectivity_methods_agree() {
        let dims = [6, 6, 6];
        let (_, s, _) = instance(dims, vec![1.0, 2.0], 13);
        for seed in 0..4 {
            let omega = sample_omega(dims, 120, seed).unwrap();
            let exact = injectivity_exact(&s, &omega).unwrap();
            let est = estimate_injectivity(&s, &omega, 8, 200, seed).unwrap();
            assert!(est <= exact + 1e-9);
            assert!(est >= 0.98 * exact, "{est} vs {exact}");
        }
    }

    #[test]
    fn too_few_samples_fail_injectivity() {
        let dims = [8, 8, 8];
        let (_, s, w) = instance(dims, vec![1.0, 1.0], 5);
        assert_eq!(projector_rank(&s), 8 * 4 + 6 * 4 + 6 * 4);
        let (omega, plan) = plan(dims, 5, 5, 1, 6);
        let state = build_golfing(&s, &w, &plan).unwrap();
        let rep = check_certificate(&state, &s, &omega, &CertificateOptions::default()).unwrap();
        assert!(rep.injectivity_tau >= 1.0 - 1e-9);
        assert!(!rep.certified);
    }

    #[test]
    fn full_observation_certifies() {
        let dims = [6, 6, 6];
        let (_, s, w) = instance(dims, vec![1.0], 17);
        let n = 216;
        let n2 = required_batches(0.25, n, dims).unwrap();
        let omega = SampleSet::full(dims).unwrap();
        // On the full grid the resampled sequence is iid at any length, so
        // batches may exceed n.
        let n1 = 16 * n;
        let seq = iid_from_omega(&omega, n1 * n2, 3).unwrap();
        let plan = split_batches(&seq, n1, n2).unwrap();
        let state = build_golfing(&s, &w, &plan).unwrap();
        let rep = check_certificate(&state, &s, &omega, &CertificateOptions::default()).unwrap();
        assert!(rep.certified, "{rep:?}");
    }

    #[test]
    fn bracket_is_reported_for_small_dims() {
        let dims = [4, 4, 4];
        let (_, s, w) = instance(dims, vec![1.0], 1);
        let (omega, plan) = plan(dims, 48, 24, 2, 2);
        let state = build_golfing(&s, &w, &plan).unwrap();
        let rep = check_certificate(&state, &s, &omega, &CertificateOptions::default()).unwrap();
        let upper = rep.spec_perp_upper.unwrap();
        assert!(rep.spec_perp <= upper + 1e-12);
        assert!(upper <= 8.0 * rep.spec_perp + 1e-12);
    }

    #[test]
    fn required_batches_examples() {
        // log2(√32 · 1000 / √1000) = 7.4829…
        assert_eq!(required_batches(0.5, 1000, [10, 10, 10]).unwrap(), 8);
        assert_eq!(required_batches(1e-300, 1000, [10, 10, 10]).unwrap(), 1);
        assert!(required_batches(0.0, 10, [2, 2, 2]).is_err());
        assert!(required_batches(1.0, 10, [2, 2, 2]).is_err());
        let mut prev = usize::MAX;
        for n in (1..=1000).step_by(37) {
            let k = required_batches(0.25, n, [10, 10, 10]).unwrap();
            assert!(k <= prev);
            prev = k;
        }
    }

    #[test]
    fn threshold_matches_scalar_oracle() {
        let d = 1.0 / 30f64.ln();
        let v = theorem1_threshold([10, 10, 10], 1, 1.0, 1.0, 1.0, d, d, 1.0).unwrap();
        // 50-digit evaluation of the same expression.
        assert_relative_eq!(v, 22_437.130_819_884_446, max_relative = 1e-13);
        let v2 = theorem1_threshold([10, 10, 10], 1, 1.0, 1.0, 1.0, d, d, 2.0).unwrap();
        assert_relative_eq!(v2, 2.0 * v, max_relative = 1e-15);
        let v3 = theorem1_threshold([10, 10, 10], 2, 1.0, 1.0, 1.0, d, d, 1.0).unwrap();
        assert!(v3 > v);
        assert!(theorem1_threshold([10, 10, 10], 1, 1.0, 1.0, 1.0, 0.6, d, 1.0).is_err());
        assert!(theorem1_threshold([10, 10, 10], 1, 1.0, 1.0, 1.0, 0.2, d, 1.0).is_err());
    }
}

