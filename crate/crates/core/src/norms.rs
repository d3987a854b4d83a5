//! Spectral-norm estimation, digitalised vectors, and the nuclear norm and
//! dual witness of orthogonally decomposable tensors.
//!
//! The spectral norm `‖X‖ = max ⟨X, u⊗v⊗w⟩` over unit vectors is NP-hard in
//! general. Two estimators are provided:
//!
//! * [`spectral_norm_hopm`]: alternating rank-one maximisation (higher-order
//!   power method) with restarts. Every value it reports is attained by unit
//!   vectors, so it is a certified lower bound.
//! * [`spectral_norm_digitalized`]: exact maximisation over the finite sets
//!   `B_{m,d}` of digitalised vectors, `m = ⌈log2 d⌉`. With `M` its value,
//!   `M ≤ ‖X‖ ≤ 8M`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::left_singular;
use crate::math;
use crate::rng::{derive_seed, orthonormal_columns, rng_from_seed, unit_vector, TrialRng};
use crate::subspace::{ProjectorKind, TuckerSubspaces};
use crate::tensor::{check_dims, dot, norm2, outer, Dims, Mode, Tensor3};

/// Base seed of the fixed restart list; restart `i` draws from
/// `derive_seed(HOPM_SEED, i)`.
pub const HOPM_SEED: u64 = 0x5EED_0F_70_5E57;

/// Largest `|B1|·|B2|·|B3|` that [`spectral_norm_digitalized`] will enumerate.
pub const DIGITAL_ENUMERATION_LIMIT: u128 = 100_000_000;

/// Tolerance for matching an entry against `2^{-j/2}`.
pub const DIGITAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HopmOptions {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for HopmOptions {
    fn default() -> Self {
        HopmOptions { restarts: 32, tol: 1e-12, max_iters: 500 }
    }
}

/// Best rank-one correlation found by [`spectral_norm_hopm`].
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralEstimate {
    /// `⟨X, u⊗v⊗w⟩` at the reported maximiser; never negative.
    pub value: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub restarts_used: usize,
    /// Whether the winning restart met the tolerance before `max_iters`.
    pub converged: bool,
}

/// Higher-order power method with restarts.
///
/// Restart 0 starts from the leading left singular vectors of the mode-2
/// and mode-3 unfoldings; the rest start from uniformly random unit vectors
/// drawn from a fixed seed list, so more restarts never lower the value.
pub fn spectral_norm_hopm(x: &Tensor3, opts: &HopmOptions) -> Result<SpectralEstimate> {
    if opts.restarts == 0 {
        return Err(Error::Parameter("restarts must be at least 1".into()));
    }
    if x.is_zero() {
        return Err(Error::ZeroTensor);
    }
    let dims = x.dims();
    let mut best: Option<SpectralEstimate> = None;
    for restart in 0..opts.restarts {
        let (v0, w0) = if restart == 0 {
            (leading_singular_vector(&x.unfold(Mode::Two)), leading_singular_vector(&x.unfold(Mode::Three)))
        } else {
            let mut rng = rng_from_seed(derive_seed(HOPM_SEED, restart as u64));
            (unit_vector(&mut rng, dims[1]), unit_vector(&mut rng, dims[2]))
        };
        let candidate = hopm_run(x, v0, w0, opts);
        if best.as_ref().is_none_or(|b| candidate.value > b.value) {
            best = Some(candidate);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_used = opts.restarts;
    Ok(best)
}

fn leading_singular_vector(m: &DMatrix<f64>) -> Vec<f64> {
    let (u, _) = left_singular(m);
    u.column(0).iter().cloned().collect()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn hopm_run(x: &Tensor3, mut v: Vec<f64>, mut w: Vec<f64>, opts: &HopmOptions) -> SpectralEstimate {
    let mut u = x.contract_except(Mode::One, &v, &w);
    let mut value = 0.0;
    let mut converged = false;
    for _ in 0..opts.max_iters {
        if normalize(&mut u) == 0.0 {
            break;
        }
        v = x.contract_except(Mode::Two, &u, &w);
        if normalize(&mut v) == 0.0 {
            break;
        }
        w = x.contract_except(Mode::Three, &u, &v);
        let next = normalize(&mut w);
        if next == 0.0 {
            break;
        }
        let delta = math::abs(next - value);
        value = next;
        if delta <= opts.tol * value {
            converged = true;
            break;
        }
        u = x.contract_except(Mode::One, &v, &w);
    }
    // Report the value actually attained by the returned unit vectors. `u`
    // is an unnormalised contraction when the iteration cap is hit.
    let attained = if normalize(&mut u) > 0.0 && normalize(&mut v) > 0.0 && normalize(&mut w) > 0.0 {
        x.multilinear(&u, &v, &w)
    } else {
        0.0
    };
    if attained < 0.0 {
        u.iter_mut().for_each(|a| *a = -*a);
    }
    // Rounding can push a tight estimate a few ulps past ‖X‖_HS.
    let value = math::abs(attained).min(x.hs_norm());
    SpectralEstimate { value, u, v, w, restarts_used: 1, converged }
}

/// Enumeration of `B_{m,d} = {0, ±1, ±2^{-1/2}, …, ±2^{-m/2}}^d ∩ {‖u‖ ≤ 1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DigitalSet {
    pub m: u32,
    pub d: usize,
    pub vectors: Vec<Vec<f64>>,
}

impl DigitalSet {
    pub fn enumerate(m: u32, d: usize) -> Self {
        Self::build(m, d, true)
    }

    /// The members with nonnegative entries.
    pub fn nonnegative(m: u32, d: usize) -> Self {
        Self::build(m, d, false)
    }

    fn build(m: u32, d: usize, signed: bool) -> Self {
        // Each entry is encoded by (level, sign); level 0 means the value 0,
        // level l ≥ 1 means magnitude 2^{-(l-1)/2} with squared weight 2^{-(l-1)}.
        let levels = m as usize + 2;
        let mut vectors = Vec::new();
        let mut current = vec![0.0; d];
        let budget: u64 = 1u64 << m; // squared norms are multiples of 2^{-m}
        fn rec(
            pos: usize,
            used: u64,
            budget: u64,
            m: u32,
            levels: usize,
            signed: bool,
            current: &mut Vec<f64>,
            out: &mut Vec<Vec<f64>>,
        ) {
            if pos == current.len() {
                out.push(current.clone());
                return;
            }
            for level in 0..levels {
                let (mag, cost) = if level == 0 {
                    (0.0, 0u64)
                } else {
                    let l = (level - 1) as u32;
                    (math::powf(2.0, -(l as f64) / 2.0), 1u64 << (m - l))
                };
                if used + cost > budget {
                    continue;
                }
                let signs: &[f64] = if level == 0 || !signed { &[1.0] } else { &[1.0, -1.0] };
                for &s in signs {
                    current[pos] = s * mag;
                    rec(pos + 1, used + cost, budget, m, levels, signed, current, out);
                }
            }
            current[pos] = 0.0;
        }
        rec(0, 0, budget, m, levels, signed, &mut current, &mut vectors);
        DigitalSet { m, d, vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// `max_{u ∈ B_{m,d}} uᵀa`, using sign symmetry of the set.
    fn max_correlation(nonneg: &DigitalSet, a: &[f64]) -> f64 {
        let abs_a: Vec<f64> = a.iter().map(|x| math::abs(*x)).collect();
        nonneg.vectors.iter().map(|u| dot(u, &abs_a)).fold(0.0, f64::max)
    }
}

/// Size of `B_{m,d}`, counted without materialising it.
pub fn digital_set_size(m: u32, d: usize) -> u128 {
    // count[s] = number of prefixes with squared-norm budget usage s (in units 2^{-m})
    let budget = 1usize << m;
    let mut count = vec![0u128; budget + 1];
    count[0] = 1;
    for _ in 0..d {
        let mut next = vec![0u128; budget + 1];
        for (used, &c) in count.iter().enumerate() {
            if c == 0 {
                continue;
            }
            next[used] += c;
            for l in 0..=m {
                let cost = 1usize << (m - l);
                if used + cost <= budget {
                    next[used + cost] += 2 * c;
                }
            }
        }
        count = next;
    }
    count.iter().sum()
}

/// `max ⟨u⊗v⊗w, X⟩` over `u ∈ B_{m1,d1}`, `v ∈ B_{m2,d2}`, `w ∈ B_{m3,d3}`
/// with `m_j = ⌈log2 d_j⌉`. The result `M` satisfies `M ≤ ‖X‖ ≤ 8M`.
pub fn spectral_norm_digitalized(x: &Tensor3) -> Result<f64> {
    let dims = x.dims();
    let ms = dims.map(math::ceil_log2);
    let size: u128 = (0..3).map(|j| digital_set_size(ms[j], dims[j])).product();
    if size > DIGITAL_ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge { size, limit: DIGITAL_ENUMERATION_LIMIT });
    }
    let b1 = DigitalSet::enumerate(ms[0], dims[0]);
    let b2 = DigitalSet::enumerate(ms[1], dims[1]);
    let b3 = DigitalSet::nonnegative(ms[2], dims[2]);
    let [d1, d2, d3] = dims;
    let mut best: f64 = 0.0;
    let mut slab = vec![0.0; d2 * d3];
    for u in &b1.vectors {
        // slab = X ×1 u, a d2×d3 matrix
        slab.iter_mut().for_each(|s| *s = 0.0);
        for (a, &ua) in u.iter().enumerate() {
            if ua == 0.0 {
                continue;
            }
            let base = a * d2 * d3;
            for (s, xv) in slab.iter_mut().zip(&x.values()[base..base + d2 * d3]) {
                *s += ua * xv;
            }
        }
        for v in &b2.vectors {
            let mut a3 = vec![0.0; d3];
            for (b, &vb) in v.iter().enumerate() {
                if vb == 0.0 {
                    continue;
                }
                for (t, s) in a3.iter_mut().zip(&slab[b * d3..(b + 1) * d3]) {
                    *t += vb * s;
                }
            }
            best = best.max(DigitalSet::max_correlation(&b3, &a3));
        }
    }
    debug_assert!(d1 > 0);
    Ok(best)
}

/// Monte-Carlo estimate of `C_{m,d} = min_{‖a‖=1} max_{u ∈ B_{m,d}} uᵀa`.
///
/// The minimum is taken over `sphere_samples` random directions in the
/// nonnegative orthant (the set is sign- and permutation-symmetric), a
/// deterministic family of equal-magnitude directions, and a local
/// pattern-search refinement of the best candidates. Since every candidate
/// is a feasible `a`, the estimate can only overshoot the true constant.
pub fn c_md(m: u32, d: usize, sphere_samples: usize) -> Result<f64> {
    if d == 0 {
        return Err(Error::Parameter("d must be positive".into()));
    }
    let set = DigitalSet::nonnegative(m, d);
    let eval = |a: &[f64]| DigitalSet::max_correlation(&set, a);
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    // k equal nonzero entries
    for k in 1..=d {
        let mut a = vec![0.0; d];
        a[..k].iter_mut().for_each(|x| *x = 1.0 / math::sqrt(k as f64));
        candidates.push((eval(&a), a));
    }
    let mut rng = rng_from_seed(derive_seed(HOPM_SEED ^ 0xC0FF_EE00, (m as u64) << 32 | d as u64));
    for _ in 0..sphere_samples {
        let mut a = unit_vector(&mut rng, d);
        a.iter_mut().for_each(|x| *x = math::abs(*x));
        candidates.push((eval(&a), a));
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = candidates[0].0;
    for (start_val, start) in candidates.into_iter().take(8) {
        let refined = pattern_search(start, start_val, &eval, &mut rng);
        best = best.min(refined);
    }
    Ok(best)
}

fn pattern_search(mut a: Vec<f64>, mut val: f64, eval: &impl Fn(&[f64]) -> f64, rng: &mut TrialRng) -> f64 {
    let d = a.len();
    let mut step = 0.1;
    while step > 1e-7 {
        let mut improved = false;
        for _ in 0..(4 * d + 8) {
            let dir = unit_vector(rng, d);
            let mut trial: Vec<f64> = a.iter().zip(&dir).map(|(x, y)| math::abs(x + step * y)).collect();
            if normalize(&mut trial) == 0.0 {
                continue;
            }
            let tv = eval(&trial);
            if tv < val {
                a = trial;
                val = tv;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    val
}

/// Upper bound `√(2 + 2(d−1)/(2^m − 1))` on `1/C_{m,d}`. The ratio term is
/// taken as 0 when `d = 1` (then `C = 1` for every `m`).
pub fn c_md_inverse_bound(m: u32, d: usize) -> f64 {
    let ratio = if d <= 1 { 0.0 } else { (d as f64 - 1.0) / (math::powf(2.0, m as f64) - 1.0) };
    math::sqrt(2.0 + 2.0 * ratio)
}

/// `D_j(X)`: keeps the entries with `|x| = 2^{-j/2}` and zeros the rest.
pub fn digitalize(x: &Tensor3, j: u32) -> Tensor3 {
    let level = math::powf(2.0, -(j as f64) / 2.0);
    let values = x
        .values()
        .iter()
        .map(|&v| if math::abs(math::abs(v) - level) <= DIGITAL_TOL { v } else { 0.0 })
        .collect();
    Tensor3::from_raw(x.dims(), values)
}

/// `Σ_i λ_i u_i ⊗ v_i ⊗ w_i` with orthonormal factor families and `λ_i > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoDecomposition {
    weights: Vec<f64>,
    u: DMatrix<f64>,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

const ORTHO_TOL: f64 = 1e-10;

impl OrthoDecomposition {
    pub fn new(weights: Vec<f64>, u: DMatrix<f64>, v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let r = weights.len();
        if r == 0 {
            return Err(Error::InvalidDecomposition("at least one term is required".into()));
        }
        if weights.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidDecomposition("weights must be positive and finite".into()));
        }
        for (name, f) in [("u", &u), ("v", &v), ("w", &w)] {
            if f.ncols() != r {
                return Err(Error::InvalidDecomposition(alloc::format!(
                    "factor {name} has {} columns, expected {r}",
                    f.ncols()
                )));
            }
            if r > f.nrows() {
                return Err(Error::InvalidDecomposition(alloc::format!(
                    "{r} terms exceed dimension {} of factor {name}",
                    f.nrows()
                )));
            }
            let gram = f.transpose() * f;
            if (gram - DMatrix::identity(r, r)).amax() > ORTHO_TOL {
                return Err(Error::InvalidDecomposition(alloc::format!(
                    "factor {name} is not orthonormal"
                )));
            }
        }
        check_dims([u.nrows(), v.nrows(), w.nrows()])?;
        Ok(OrthoDecomposition { weights, u, v, w })
    }

    /// Random decomposition with Haar-distributed orthonormal factors.
    pub fn random(dims: Dims, weights: Vec<f64>, rng: &mut TrialRng) -> Result<Self> {
        check_dims(dims)?;
        let r = weights.len();
        if r == 0 || dims.iter().any(|&d| r > d) {
            return Err(Error::InvalidDecomposition(alloc::format!(
                "{r} terms do not fit dimensions {dims:?}"
            )));
        }
        let u = orthonormal_columns(rng, dims[0], r);
        let v = orthonormal_columns(rng, dims[1], r);
        let w = orthonormal_columns(rng, dims[2], r);
        OrthoDecomposition::new(weights, u, v, w)
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Dims {
        [self.u.nrows(), self.v.nrows(), self.w.nrows()]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn factors(&self) -> [&DMatrix<f64>; 3] {
        [&self.u, &self.v, &self.w]
    }

    fn weighted_sum(&self, weights: impl Iterator<Item = f64>) -> Tensor3 {
        let mut acc = Tensor3::zeros(self.dims()).expect("validated dims");
        for (i, lambda) in weights.enumerate() {
            let ui: Vec<f64> = self.u.column(i).iter().cloned().collect();
            let vi: Vec<f64> = self.v.column(i).iter().cloned().collect();
            let wi: Vec<f64> = self.w.column(i).iter().cloned().collect();
            acc.axpy(lambda, &outer(&ui, &vi, &wi).expect("nonempty")).expect("same dims");
        }
        acc
    }

    pub fn to_tensor(&self) -> Tensor3 {
        self.weighted_sum(self.weights.iter().cloned())
    }

    /// Fiber spans: the factor column spaces themselves.
    pub fn subspaces(&self) -> TuckerSubspaces {
        TuckerSubspaces::from_bases([self.u.clone(), self.v.clone(), self.w.clone()])
            .expect("validated orthonormal factors")
    }
}

/// `‖X‖∗ = Σ λ_i` for an orthogonally decomposable `X`.
pub fn nuclear_norm_ortho(d: &OrthoDecomposition) -> f64 {
    d.weights.iter().sum()
}

/// `W = Σ u_i ⊗ v_i ⊗ w_i`: unit spectral norm, in the range of `Q0_T`,
/// `⟨T, W⟩ = ‖T‖∗` and `‖W‖²_HS = r`.
pub fn dual_witness(d: &OrthoDecomposition) -> Tensor3 {
    d.weighted_sum(core::iter::repeat_n(1.0, d.rank()))
}

/// Both sides of `‖Y‖∗ ≥ ‖T‖∗ + ⟨W + Q_{T⊥}W⊥, Y − T⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubgradientCheck {
    /// `‖Y‖∗`.
    pub lhs: f64,
    /// `‖T‖∗ + ⟨W + Q_{T⊥}W⊥, Y − T⟩`.
    pub rhs: f64,
    /// HOPM estimate of `‖W⊥‖`.
    pub wperp_norm: f64,
    pub holds: bool,
}

const SUBGRAD_SLACK: f64 = 1e-12;

/// Evaluates the subgradient inequality without enforcing `‖W⊥‖ ≤ 1/2`.
pub fn subgrad_inequality_evaluate(
    t: &OrthoDecomposition,
    y: &OrthoDecomposition,
    wperp: &Tensor3,
) -> Result<SubgradientCheck> {
    let dims = t.dims();
    for found in [y.dims(), wperp.dims()] {
        if found != dims {
            return Err(Error::DimensionMismatch { expected: dims, found });
        }
    }
    let s = t.subspaces();
    let mut g = dual_witness(t);
    g.axpy(1.0, &s.apply(ProjectorKind::Qperp, wperp)?)?;
    let diff = y.to_tensor().sub(&t.to_tensor())?;
    let lhs = nuclear_norm_ortho(y);
    let rhs = nuclear_norm_ortho(t) + g.inner(&diff)?;
    let wperp_norm = if wperp.is_zero() {
        0.0
    } else {
        spectral_norm_hopm(wperp, &HopmOptions::default())?.value
    };
    let holds = lhs >= rhs - SUBGRAD_SLACK * (1.0 + math::abs(lhs));
    Ok(SubgradientCheck { lhs, rhs, wperp_norm, holds })
}

/// Checks the subgradient inequality for a witness obeying `‖W⊥‖ ≤ 1/2`.
pub fn subgrad_inequality_check(
    t: &OrthoDecomposition,
    y: &OrthoDecomposition,
    wperp: &Tensor3,
) -> Result<bool> {
    let check = subgrad_inequality_evaluate(t, y, wperp)?;
    if check.wperp_norm > 0.5 + 1e-9 {
        return Err(Error::WitnessNorm { norm: check.wperp_norm });
    }
    Ok(check.holds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian;
    use crate::subspace::{fiber_subspaces, DEFAULT_RANK_TOL};
    use approx::assert_relative_eq;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i - 1] = 1.0;
        v
    }

    pub(crate) fn counterexample_u() -> Tensor3 {
        let mut u = outer(&e(2, 1), &e(2, 2), &e(2, 2)).unwrap();
        u.axpy(1.0, &outer(&e(2, 2), &e(2, 1), &e(2, 2)).unwrap()).unwrap();
        u.axpy(1.0, &outer(&e(2, 2), &e(2, 2), &e(2, 1)).unwrap()).unwrap();
        u
    }

    fn corner() -> OrthoDecomposition {
        let c = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        OrthoDecomposition::new(vec![1.0], c.clone(), c.clone(), c).unwrap()
    }

    fn all_ones() -> OrthoDecomposition {
        let h = 1.0 / 2f64.sqrt();
        let c = DMatrix::from_column_slice(2, 1, &[h, h]);
        OrthoDecomposition::new(vec![2.0 * 2f64.sqrt()], c.clone(), c.clone(), c).unwrap()
    }

    #[test]
    fn hopm_counterexample_norm() {
        let est = spectral_norm_hopm(&counterexample_u(), &HopmOptions::default()).unwrap();
        assert_relative_eq!(est.value, 2.0 / 3f64.sqrt(), epsilon = 1e-9);
        let attained = counterexample_u().multilinear(&est.u, &est.v, &est.w);
        assert_relative_eq!(attained, est.value, epsilon = 1e-14);
    }

    #[test]
    fn hopm_rank_one_is_exact() {
        let u = [1.0, -2.0, 0.5];
        let v = [0.3, 0.4];
        let w = [2.0, 0.0, 1.0, 1.0];
        let t = outer(&u, &v, &w).unwrap();
        let est = spectral_norm_hopm(&t, &HopmOptions::default()).unwrap();
        assert_relative_eq!(est.value, norm2(&u) * norm2(&v) * norm2(&w), epsilon = 1e-12);
        assert!(est.converged);
    }

    #[test]
    fn hopm_iteration_cap_returns_unit_vectors() {
        let mut rng = rng_from_seed(41);
        let x = Tensor3::from_fn([4, 6, 8], |_| gaussian(&mut rng)).unwrap();
        let est = spectral_norm_hopm(&x, &HopmOptions { restarts: 3, tol: 1e-15, max_iters: 2 }).unwrap();
        assert!(!est.converged);
        for v in [&est.u, &est.v, &est.w] {
            assert_relative_eq!(norm2(v), 1.0, epsilon = 1e-12);
        }
        assert!(est.value <= x.hs_norm());
        assert_relative_eq!(est.value, x.multilinear(&est.u, &est.v, &est.w), epsilon = 1e-12);
    }

    #[test]
    fn hopm_rejects_zero_and_no_restarts() {
        let z = Tensor3::zeros([2, 2, 2]).unwrap();
        assert_eq!(spectral_norm_hopm(&z, &HopmOptions::default()).unwrap_err(), Error::ZeroTensor);
        let opts = HopmOptions { restarts: 0, ..HopmOptions::default() };
        assert!(spectral_norm_hopm(&counterexample_u(), &opts).is_err());
    }

    #[test]
    fn digital_set_sizes_match_enumeration() {
        for d in 1..=5 {
            let m = math::ceil_log2(d);
            let set = DigitalSet::enumerate(m, d);
            assert_eq!(set.len() as u128, digital_set_size(m, d));
            for u in &set.vectors {
                assert!(dot(u, u) <= 1.0 + 1e-12);
            }
        }
        assert_eq!(DigitalSet::enumerate(1, 2).len(), 13);
        assert_eq!(DigitalSet::enumerate(2, 4).len(), 265);
    }

    #[test]
    fn digitalized_corner_spike() {
        let t = outer(&e(3, 1), &e(3, 1), &e(3, 1)).unwrap();
        assert_relative_eq!(spectral_norm_digitalized(&t).unwrap(), 1.0);
    }

    #[test]
    fn digitalized_counterexample_bracket() {
        let m = spectral_norm_digitalized(&counterexample_u()).unwrap();
        let s = 2.0 / 3f64.sqrt();
        assert!(m <= s + 1e-12);
        assert!(m >= s / 8.0);
    }

    #[test]
    fn digitalized_rejects_large_enumerations() {
        let t = Tensor3::zeros([6, 6, 6]).unwrap();
        assert!(matches!(spectral_norm_digitalized(&t), Err(Error::EnumerationTooLarge { .. })));
    }

    #[test]
    fn c_md_small_cases() {
        assert_relative_eq!(c_md(0, 1, 100).unwrap(), 1.0);
        assert_relative_eq!(c_md(3, 1, 100).unwrap(), 1.0);
        assert!(c_md(1, 2, 2000).unwrap() >= 0.5);
        let c = c_md(3, 4, 4000).unwrap();
        assert!(1.0 / c <= (2.0 + 6.0 / 7.0f64).sqrt() + 1e-3);
        assert_relative_eq!(c_md_inverse_bound(3, 4), (2.0 + 6.0 / 7.0f64).sqrt());
    }

    #[test]
    fn digitalize_keeps_only_matching_level() {
        let t = outer(&e(2, 1), &e(2, 1), &e(2, 1)).unwrap();
        assert_eq!(digitalize(&t, 0), t);
        assert!(digitalize(&t, 1).is_zero());
        let mixed = Tensor3::from_vec([1, 1, 3], vec![0.5, -0.5f64.sqrt(), 0.3]).unwrap();
        assert_eq!(digitalize(&mixed, 1).values(), &[0.0, -0.5f64.sqrt(), 0.0]);
        assert_eq!(digitalize(&mixed, 2).values(), &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn digitalize_partitions_digital_rank_one() {
        let mut rng = rng_from_seed(12);
        let x = Tensor3::from_fn([3, 2, 4], |_| gaussian(&mut rng)).unwrap();
        let b1 = DigitalSet::enumerate(2, 3);
        let b2 = DigitalSet::enumerate(1, 2);
        let b3 = DigitalSet::enumerate(2, 4);
        for (i, u) in b1.vectors.iter().enumerate().step_by(7) {
            let v = &b2.vectors[i % b2.len()];
            let w = &b3.vectors[(3 * i) % b3.len()];
            let r1 = outer(u, v, w).unwrap();
            let total: f64 = (0..=5).map(|j| digitalize(&r1, j).inner(&x).unwrap()).sum();
            assert_relative_eq!(total, r1.inner(&x).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn nuclear_norms_of_lemma_examples() {
        assert_eq!(nuclear_norm_ortho(&corner()), 1.0);
        assert_relative_eq!(nuclear_norm_ortho(&all_ones()), 2.0 * 2f64.sqrt());
        let ones = all_ones().to_tensor();
        assert!(ones.values().iter().all(|&x| (x - 1.0).abs() < 1e-14));
        let mut rng = rng_from_seed(2);
        let d = OrthoDecomposition::random([4, 4, 4], vec![3.0, 2.0], &mut rng).unwrap();
        assert_eq!(nuclear_norm_ortho(&d), 5.0);
    }

    #[test]
    fn dual_witness_properties() {
        let mut rng = rng_from_seed(5);
        let d = OrthoDecomposition::random([5, 4, 6], vec![2.5, 0.7], &mut rng).unwrap();
        let t = d.to_tensor();
        let w = dual_witness(&d);
        assert_relative_eq!(w.hs_norm(), 2f64.sqrt(), epsilon = 1e-12);
        let est = spectral_norm_hopm(&w, &HopmOptions::default()).unwrap();
        assert_relative_eq!(est.value, 1.0, epsilon = 1e-8);
        assert_relative_eq!(t.inner(&w).unwrap(), 3.2, epsilon = 1e-12);
        let s = fiber_subspaces(&t, DEFAULT_RANK_TOL).unwrap();
        let q0w = s.apply(ProjectorKind::Q0, &w).unwrap();
        assert!(q0w.sub(&w).unwrap().hs_norm() < 1e-10);
    }

    #[test]
    fn decomposition_validation() {
        let bad = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let id = DMatrix::identity(2, 2);
        assert!(OrthoDecomposition::new(vec![1.0, 1.0], bad, id.clone(), id.clone()).is_err());
        assert!(OrthoDecomposition::new(vec![1.0, -1.0], id.clone(), id.clone(), id.clone()).is_err());
        assert!(OrthoDecomposition::new(vec![], id.clone(), id.clone(), id).is_err());
    }

    #[test]
    fn subgradient_with_half_witness_holds() {
        let u = counterexample_u();
        let wperp = u.scale(0.5 / (2.0 / 3f64.sqrt()));
        assert!(subgrad_inequality_check(&corner(), &all_ones(), &wperp).unwrap());
        let c = subgrad_inequality_evaluate(&corner(), &all_ones(), &wperp).unwrap();
        assert_relative_eq!(c.rhs, 1.0 + 3.0 * 3f64.sqrt() / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn subgradient_with_unit_witness_fails() {
        let u = counterexample_u();
        let wperp = u.scale(3f64.sqrt() / 2.0);
        let c = subgrad_inequality_evaluate(&corner(), &all_ones(), &wperp).unwrap();
        assert!(!c.holds);
        assert_relative_eq!(c.rhs, 1.0 + 3.0 * 3f64.sqrt() / 2.0, epsilon = 1e-12);
        assert_relative_eq!(c.lhs, 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(
            subgrad_inequality_check(&corner(), &all_ones(), &wperp),
            Err(Error::WitnessNorm { .. })
        ));
    }

    #[test]
    fn subgradient_equality_when_y_is_t() {
        let mut rng = rng_from_seed(9);
        let t = OrthoDecomposition::random([3, 3, 3], vec![1.5, 0.5], &mut rng).unwrap();
        let w = Tensor3::from_fn([3, 3, 3], |_| gaussian(&mut rng)).unwrap();
        let n = spectral_norm_hopm(&w, &HopmOptions::default()).unwrap().value;
        let wperp = w.scale(0.4 / n);
        let c = subgrad_inequality_evaluate(&t, &t, &wperp).unwrap();
        assert!(c.holds);
        assert_relative_eq!(c.lhs, c.rhs, epsilon = 1e-12);
    }
}
