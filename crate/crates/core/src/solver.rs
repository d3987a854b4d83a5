//! Completion solvers.
//!
//! * [`complete_matricized`] minimises `Σ_j ‖X^(j)‖∗` subject to agreement
//!   on the observed entries, by ADMM with one auxiliary tensor per
//!   unfolding and singular-value soft-thresholding.
//! * [`complete_tucker_als`] fits a Tucker model of fixed multilinear rank
//!   to the observed entries by alternating least squares.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{left_singular, nuclear_norm, soft_threshold};
use crate::math;
use crate::rng::{derive_seed, gaussian, orthonormal_columns, rng_from_seed};
use crate::sampling::SampleSet;
use crate::tensor::{volume, Dims, IndexTriple, Mode, Tensor3};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub max_iters: usize,
    /// Target for primal residuals (ADMM) or the observed-entry RMS misfit
    /// (ALS), relative to the RMS of the observations.
    pub abs_tol: f64,
    /// Stopping threshold on the relative change between iterates.
    pub rel_tol: f64,
    /// Initial ADMM penalty.
    pub rho: f64,
    /// Multilinear rank for the Tucker solver.
    pub target_ranks: Option<[usize; 3]>,
    /// Random initialisations tried after the spectral one (Tucker solver).
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            max_iters: 2000,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            rho: 1.0,
            target_ranks: None,
            restarts: 4,
            seed: 0,
        }
    }
}

impl SolverParams {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || !(self.rho > 0.0) {
            return Err(Error::Parameter(
                "max_iters must be at least 1 and tolerances and rho positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult {
    pub x_hat: Tensor3,
    pub iterations: usize,
    pub converged: bool,
    /// `max_{ω ∈ Ω} |X̂(ω) − T(ω)|`.
    pub constraint_residual: f64,
    /// Per-iteration objective: `Σ_j ‖X^(j)‖∗` for ADMM, the observed-entry
    /// sum of squared residuals for ALS.
    pub objective: Vec<f64>,
}

/// Values of `t` on `omega`, in the order of `omega.offsets()`.
pub fn observe(t: &Tensor3, omega: &SampleSet) -> Result<Vec<f64>> {
    if t.dims() != omega.dims() {
        return Err(Error::DimensionMismatch { expected: omega.dims(), found: t.dims() });
    }
    Ok(omega.offsets().iter().map(|&o| t.values()[o]).collect())
}

fn check_observed(omega: &SampleSet, observed: &[f64], dims: Dims) -> Result<()> {
    if omega.dims() != dims {
        return Err(Error::DimensionMismatch { expected: dims, found: omega.dims() });
    }
    if observed.len() != omega.len() {
        return Err(Error::BufferLength { expected: omega.len(), found: observed.len() });
    }
    if let Some(i) = observed.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

fn constraint_residual(x: &Tensor3, omega: &SampleSet, observed: &[f64]) -> f64 {
    omega
        .offsets()
        .iter()
        .zip(observed)
        .map(|(&o, v)| math::abs(x.values()[o] - v))
        .fold(0.0, f64::max)
}

fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    math::sqrt(values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64)
}

fn matricized_objective(x: &Tensor3) -> f64 {
    Mode::ALL.iter().map(|&m| nuclear_norm(&x.unfold(m))).sum()
}

/// Residual balancing keeps the penalty within this factor of its start.
const RHO_SPAN: f64 = 1e4;

/// ADMM for `min Σ_j ‖X^(j)‖∗  s.t.  X(ω) = T(ω), ω ∈ Ω`.
///
/// The penalty is doubled or halved whenever the primal and dual residuals
/// differ by more than a factor of ten. Iteration stops once both residuals
/// fall below `abs_tol` times the RMS of the observations.
pub fn complete_matricized(
    omega: &SampleSet,
    observed: &[f64],
    dims: Dims,
    p: &SolverParams,
) -> Result<SolveResult> {
    p.validate()?;
    check_observed(omega, observed, dims)?;
    let len = volume(dims);
    let scale = rms(observed).max(f64::MIN_POSITIVE);
    let pin = |x: &mut Tensor3| {
        let v = x.values_mut();
        for (&o, &t) in omega.offsets().iter().zip(observed) {
            v[o] = t;
        }
    };
    let mut x = Tensor3::zeros(dims)?;
    pin(&mut x);
    if omega.len() == len {
        let objective = vec![matricized_objective(&x)];
        return Ok(SolveResult { x_hat: x, iterations: 0, converged: true, constraint_residual: 0.0, objective });
    }
    let mut duals = [Tensor3::zeros(dims)?, Tensor3::zeros(dims)?, Tensor3::zeros(dims)?];
    let mut aux = [x.clone(), x.clone(), x.clone()];
    let mut rho = p.rho;
    let mut objective = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..p.max_iters {
        iterations = it + 1;
        for (j, &mode) in Mode::ALL.iter().enumerate() {
            let mut target = x.clone();
            target.axpy(1.0 / rho, &duals[j])?;
            let (m, _) = soft_threshold(&target.unfold(mode), 1.0 / rho);
            aux[j] = Tensor3::refold(&m, mode, dims)?;
        }
        let mut next = Tensor3::zeros(dims)?;
        for j in 0..3 {
            next.axpy(1.0 / 3.0, &aux[j])?;
            next.axpy(-1.0 / (3.0 * rho), &duals[j])?;
        }
        pin(&mut next);
        let mut primal_sq = 0.0;
        for j in 0..3 {
            let gap = next.sub(&aux[j])?;
            primal_sq += gap.hs_norm() * gap.hs_norm();
            duals[j].axpy(rho, &gap)?;
        }
        let dual = rho * math::sqrt(3.0) * next.sub(&x)?.hs_norm();
        let primal = math::sqrt(primal_sq);
        x = next;
        objective.push(matricized_objective(&x));
        let tol = p.abs_tol * scale * math::sqrt(len as f64);
        if primal <= tol && dual <= tol {
            converged = true;
            break;
        }
        if primal > 10.0 * dual && rho < RHO_SPAN * p.rho {
            rho *= 2.0;
        } else if dual > 10.0 * primal && rho > p.rho / RHO_SPAN {
            rho /= 2.0;
        }
    }
    let constraint_residual = constraint_residual(&x, omega, observed);
    Ok(SolveResult { x_hat: x, iterations, converged, constraint_residual, objective })
}

/// Tucker model `G ×1 A ×2 B ×3 C`.
#[derive(Clone, Debug)]
struct Tucker {
    core: Tensor3,
    factors: [DMatrix<f64>; 3],
}

impl Tucker {
    fn to_tensor(&self) -> Tensor3 {
        let mut x = self.core.clone();
        for (m, f) in Mode::ALL.iter().zip(&self.factors) {
            x = x.mode_multiply(f, *m).expect("conforming factor");
        }
        x
    }

    fn value(&self, t: IndexTriple) -> f64 {
        let [a, b, c] = &self.factors;
        let [r1, r2, r3] = self.core.dims();
        let mut s = 0.0;
        for p in 0..r1 {
            let ap = a[(t.a - 1, p)];
            if ap == 0.0 {
                continue;
            }
            for q in 0..r2 {
                let bq = b[(t.b - 1, q)];
                for r in 0..r3 {
                    s += self.core.at(p, q, r) * ap * bq * c[(t.c - 1, r)];
                }
            }
        }
        s
    }

    fn sse(&self, triples: &[IndexTriple], observed: &[f64]) -> f64 {
        triples.iter().zip(observed).map(|(&t, v)| (self.value(t) - v) * (self.value(t) - v)).sum()
    }

    /// Least-squares update of every row of factor `mode`.
    fn update_factor(&mut self, mode: Mode, triples: &[IndexTriple], observed: &[f64]) {
        let j = mode.axis();
        // H = core multiplied by every factor except `mode`.
        let mut h = self.core.clone();
        for (m, f) in Mode::ALL.iter().zip(&self.factors) {
            if *m != mode {
                h = h.mode_multiply(f, *m).expect("conforming factor");
            }
        }
        let rank = self.core.dims()[j];
        let rows = self.factors[j].nrows();
        let mut gram = vec![DMatrix::<f64>::zeros(rank, rank); rows];
        let mut rhs = vec![DVector::<f64>::zeros(rank); rows];
        let mut feature = DVector::<f64>::zeros(rank);
        for (&t, &v) in triples.iter().zip(observed) {
            let idx = [t.a - 1, t.b - 1, t.c - 1];
            for p in 0..rank {
                let mut at = idx;
                at[j] = p;
                feature[p] = h.at(at[0], at[1], at[2]);
            }
            let row = idx[j];
            gram[row].ger(1.0, &feature, &feature, 1.0);
            rhs[row].axpy(v, &feature, 1.0);
        }
        for row in 0..rows {
            if rhs[row].iter().all(|&x| x == 0.0) && gram[row].iter().all(|&x| x == 0.0) {
                continue;
            }
            if let Some(sol) = ridge_solve(&gram[row], &rhs[row]) {
                self.factors[j].row_mut(row).copy_from(&sol.transpose());
            }
        }
    }

    /// Least-squares update of the core.
    fn update_core(&mut self, triples: &[IndexTriple], observed: &[f64]) {
        let [r1, r2, r3] = self.core.dims();
        let k = r1 * r2 * r3;
        let [a, b, c] = &self.factors;
        let mut gram = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        let mut feature = DVector::<f64>::zeros(k);
        for (&t, &v) in triples.iter().zip(observed) {
            for p in 0..r1 {
                for q in 0..r2 {
                    let apbq = a[(t.a - 1, p)] * b[(t.b - 1, q)];
                    for r in 0..r3 {
                        feature[(p * r2 + q) * r3 + r] = apbq * c[(t.c - 1, r)];
                    }
                }
            }
            gram.ger(1.0, &feature, &feature, 1.0);
            rhs.axpy(v, &feature, 1.0);
        }
        if let Some(sol) = ridge_solve(&gram, &rhs) {
            self.core = Tensor3::from_raw([r1, r2, r3], sol.iter().cloned().collect());
        }
    }

    /// Re-orthonormalises the factors, absorbing the triangular parts into
    /// the core.
    fn normalize(&mut self) {
        for (j, &mode) in Mode::ALL.iter().enumerate() {
            let qr = self.factors[j].clone().qr();
            let r = qr.r();
            self.factors[j] = qr.q();
            self.core = self.core.mode_multiply(&r, mode).expect("square triangular factor");
        }
    }
}

fn ridge_solve(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let n = gram.nrows();
    let trace: f64 = (0..n).map(|i| gram[(i, i)]).sum();
    let ridge = 1e-13 * (trace / n as f64).max(f64::MIN_POSITIVE);
    let mut g = gram.clone();
    for i in 0..n {
        g[(i, i)] += ridge;
    }
    g.cholesky().map(|c| c.solve(rhs))
}

fn spectral_start(x0: &Tensor3, ranks: [usize; 3]) -> Tucker {
    let factors = Mode::ALL.map(|m| {
        let j = m.axis();
        let (u, _) = left_singular(&x0.unfold(m));
        let mut f = DMatrix::zeros(u.nrows(), ranks[j]);
        for col in 0..ranks[j].min(u.ncols()) {
            f.set_column(col, &u.column(col));
        }
        f
    });
    let mut core = x0.clone();
    for (m, f) in Mode::ALL.iter().zip(&factors) {
        core = core.mode_multiply(&f.transpose(), *m).expect("conforming factor");
    }
    Tucker { core, factors }
}

fn random_start(dims: Dims, ranks: [usize; 3], seed: u64, scale: f64) -> Tucker {
    let mut rng = rng_from_seed(seed);
    let factors = [0, 1, 2].map(|j| orthonormal_columns(&mut rng, dims[j], ranks[j]));
    let core = Tensor3::from_raw(ranks, (0..volume(ranks)).map(|_| scale * gaussian(&mut rng)).collect());
    Tucker { core, factors }
}

struct AlsRun {
    model: Tucker,
    sse: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn als_run(mut model: Tucker, triples: &[IndexTriple], observed: &[f64], p: &SolverParams) -> AlsRun {
    let target = {
        let r = p.abs_tol * rms(observed);
        r * r * observed.len() as f64
    };
    let mut prev = model.sse(triples, observed);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..p.max_iters {
        iterations = it + 1;
        for mode in Mode::ALL {
            model.update_factor(mode, triples, observed);
        }
        model.normalize();
        model.update_core(triples, observed);
        let sse = model.sse(triples, observed);
        trace.push(sse);
        if sse <= target {
            converged = true;
            break;
        }
        if prev - sse <= p.rel_tol * p.rel_tol * prev {
            break;
        }
        prev = sse;
    }
    let sse = model.sse(triples, observed);
    AlsRun { model, sse, iterations, converged, trace }
}

/// Alternating least squares for a Tucker model of rank `target_ranks`
/// fitted to the observed entries.
///
/// The first start is the truncated HOSVD of the zero-filled observations
/// rescaled by `N/n`; `restarts` random orthonormal starts follow. The fit
/// with the smallest observed-entry residual is returned. Random starts are
/// skipped once a fit reaches the tolerance.
pub fn complete_tucker_als(
    omega: &SampleSet,
    observed: &[f64],
    dims: Dims,
    p: &SolverParams,
) -> Result<SolveResult> {
    p.validate()?;
    check_observed(omega, observed, dims)?;
    let ranks = p.target_ranks.ok_or_else(|| Error::Parameter("target_ranks is required".into()))?;
    for (j, &r) in ranks.iter().enumerate() {
        if r == 0 || r > dims[j] {
            return Err(Error::RankTooLarge { mode: j + 1, rank: r, dim: dims[j] });
        }
    }
    let triples: Vec<IndexTriple> = omega.indices().collect();
    let mut x0 = vec![0.0; volume(dims)];
    let fill = volume(dims) as f64 / omega.len().max(1) as f64;
    for (&o, &v) in omega.offsets().iter().zip(observed) {
        x0[o] = fill * v;
    }
    let x0 = Tensor3::from_raw(dims, x0);
    let mut best = als_run(spectral_start(&x0, ranks), &triples, observed, p);
    if !best.converged {
        let scale = rms(observed) * math::sqrt(volume(dims) as f64 / volume(ranks) as f64);
        for k in 0..p.restarts {
            let start = random_start(dims, ranks, derive_seed(p.seed, k as u64), scale.max(1e-300));
            let run = als_run(start, &triples, observed, p);
            let better = run.sse < best.sse;
            if better {
                best = run;
            }
            if best.converged {
                break;
            }
        }
    }
    let x_hat = best.model.to_tensor();
    let constraint_residual = constraint_residual(&x_hat, omega, observed);
    Ok(SolveResult {
        x_hat,
        iterations: best.iterations,
        converged: best.converged,
        constraint_residual,
        objective: best.trace,
    })
}

/// `‖X̂ − T‖_HS / ‖T‖_HS`.
pub fn relative_error(x_hat: &Tensor3, t: &Tensor3) -> Result<f64> {
    if t.is_zero() {
        return Err(Error::ZeroTensor);
    }
    Ok(x_hat.sub(t)?.hs_norm() / t.hs_norm())
}
