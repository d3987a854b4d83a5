//! Experiment commands. Each returns the full CSV text; nothing here touches
//! the filesystem.
//!
//! Grid cells are enumerated in a fixed order, cell `k` runs from
//! `derive_seed(config.seed, k)`, and rows are collected in grid order, so
//! the output does not depend on the rayon thread count.

use rayon::prelude::*;
use tenscert_core::concentration::{aspect_nu1, MIN_TRIALS};
use tenscert_core::rng::{derive_seed, rng_from_seed};
use tenscert_core::{
    build_golfing, check_certificate, coherence_profile, complete_matricized, complete_tucker_als, dual_witness,
    iid_from_omega, mc_aspect, mc_iid_ops, mc_opnorm, mc_symmetrization, nuclear_norm_ortho, observe,
    relative_error, required_batches, sample_omega, spectral_norm_digitalized, spectral_norm_hopm, split_batches,
    theorem1_threshold, volume, CertificateOptions, CertificateReport, Dims, Error, HopmOptions, InjectivityMethod,
    McReport, OrthoDecomposition, SampleSet, SolverParams, Tensor3, TuckerSubspaces,
};

use crate::config::{ExperimentConfig, Injectivity, Lemma};
use crate::error::{HarnessError, Result};
use crate::format::fmt_f64;

pub const CERTIFY_HEADER: &str = "d1,d2,d3,r,n,trial,seed,n1,n2,certified,injectivity_tau,hs_gap,hs_threshold,spec_perp,spec_perp_upper,theorem1_threshold";
pub const SWEEP_HEADER: &str = "d1,d2,d3,r,n,trial,seed,certified,injectivity_tau,hs_gap,hs_threshold,spec_perp,als_rel_err,matricized_rel_err";
pub const MC_HEADER: &str = "lemma,event,d1,d2,d3,r,n,param,trials,seed,event_count,empirical_prob,paper_bound,bound_active,three_sigma";
pub const NORMS_HEADER: &str = "quantity,value";

/// One sampled problem: a random orthogonally decomposable tensor and Ω.
pub struct Instance {
    pub decomposition: OrthoDecomposition,
    pub tensor: Tensor3,
    pub subspaces: TuckerSubspaces,
    pub witness: Tensor3,
    pub omega: SampleSet,
}

impl Instance {
    pub fn generate(dims: Dims, weights: Vec<f64>, n: usize, seed: u64) -> Result<Self> {
        let mut rng = rng_from_seed(derive_seed(seed, 0));
        let decomposition = OrthoDecomposition::random(dims, weights, &mut rng)?;
        let omega = sample_omega(dims, n, derive_seed(seed, 1))?;
        Ok(Instance {
            tensor: decomposition.to_tensor(),
            subspaces: decomposition.subspaces(),
            witness: dual_witness(&decomposition),
            decomposition,
            omega,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub dims: Dims,
    pub r: usize,
    pub n: usize,
    pub trial: usize,
    pub seed: u64,
}

fn grid(cfg: &ExperimentConfig) -> Result<Vec<Cell>> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for &dims in &cfg.dims {
        for n in cfg.n_grid.resolve(dims) {
            if n > volume(dims) {
                return Err(HarnessError::Config(format!("n = {n} exceeds d1*d2*d3 = {} for {dims:?}", volume(dims))));
            }
        }
        for &r in &cfg.ranks {
            for n in cfg.n_grid.resolve(dims) {
                for trial in 0..cfg.trials {
                    let seed = derive_seed(cfg.seed, cells.len() as u64);
                    cells.push(Cell { dims, r, n, trial, seed });
                }
            }
        }
    }
    Ok(cells)
}

/// `(n1, n2)`: `n2 = required_batches(τ, n, dims)` and `n1 = ⌊n/n2⌋`
/// unless overridden. When Ω is the whole grid the resampled sequence is
/// exactly iid at any length, and `n1` defaults to `full_grid_factor · N`.
pub fn batch_policy(cfg: &ExperimentConfig, dims: Dims, n: usize) -> Result<(usize, usize)> {
    let n2 = match cfg.n2 {
        Some(n2) => n2,
        None => required_batches(cfg.tau, n, dims)?,
    };
    let n1 = match cfg.n1 {
        Some(n1) => n1,
        None if n == volume(dims) => cfg.full_grid_factor * n,
        None => (n / n2).max(1),
    };
    Ok((n1, n2))
}

fn certificate_options(cfg: &ExperimentConfig, seed: u64) -> CertificateOptions {
    let injectivity = match cfg.injectivity {
        Injectivity::Exact => InjectivityMethod::Exact,
        Injectivity::Power => InjectivityMethod::PowerIteration { probes: 8, iters: 200, seed },
    };
    CertificateOptions {
        injectivity,
        hopm: HopmOptions { restarts: cfg.hopm_restarts, ..HopmOptions::default() },
        ..CertificateOptions::default()
    }
}

fn certify_instance(cfg: &ExperimentConfig, inst: &Instance, cell: &Cell) -> Result<(usize, usize, CertificateReport)> {
    let (n1, n2) = batch_policy(cfg, cell.dims, cell.n)?;
    let seq = iid_from_omega(&inst.omega, n1 * n2, derive_seed(cell.seed, 2))?;
    let plan = split_batches(&seq, n1, n2)?;
    let golf = build_golfing(&inst.subspaces, &inst.witness, &plan)?;
    let report = check_certificate(&golf, &inst.subspaces, &inst.omega, &certificate_options(cfg, derive_seed(cell.seed, 3)))?;
    Ok((n1, n2, report))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifyRow {
    pub cell: Cell,
    pub n1: usize,
    pub n2: usize,
    pub report: CertificateReport,
    pub threshold: f64,
}

pub fn certify_rows(cfg: &ExperimentConfig) -> Result<Vec<CertifyRow>> {
    grid(cfg)?
        .par_iter()
        .map(|cell| {
            let inst = Instance::generate(cell.dims, cfg.weights.weights(cell.r), cell.n, cell.seed)?;
            let (n1, n2, report) = certify_instance(cfg, &inst, cell)?;
            let coh = coherence_profile(&inst.subspaces, &inst.witness)?;
            let log_d = ((cell.dims[0] + cell.dims[1] + cell.dims[2]) as f64).ln();
            let threshold = theorem1_threshold(
                cell.dims,
                cell.r,
                coh.mu,
                coh.alpha,
                cfg.beta,
                cfg.delta1.unwrap_or(1.0 / log_d),
                cfg.delta2.unwrap_or(1.0 / log_d),
                cfg.c0,
            )?;
            Ok(CertifyRow { cell: *cell, n1, n2, report, threshold })
        })
        .collect()
}

fn dims_prefix(cell: &Cell) -> String {
    let [d1, d2, d3] = cell.dims;
    format!("{d1},{d2},{d3},{},{},{},{}", cell.r, cell.n, cell.trial, cell.seed)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn render(cfg: &ExperimentConfig, header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out = cfg.echo();
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn render_certify(cfg: &ExperimentConfig, rows: &[CertifyRow]) -> String {
    render(
        cfg,
        CERTIFY_HEADER,
        rows.iter().map(|row| {
            let r = &row.report;
            format!(
                "{},{},{},{},{},{},{},{},{},{}",
                dims_prefix(&row.cell),
                row.n1,
                row.n2,
                r.certified,
                fmt_f64(r.injectivity_tau),
                fmt_f64(r.hs_gap),
                fmt_f64(r.hs_threshold),
                fmt_f64(r.spec_perp),
                opt(r.spec_perp_upper),
                fmt_f64(row.threshold)
            )
        }),
    )
}

/// Per `(n, trial)`: sample an instance, run the golfing scheme and check
/// the certificate.
pub fn cmd_certify(cfg: &ExperimentConfig) -> Result<String> {
    Ok(render_certify(cfg, &certify_rows(cfg)?))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub report: CertificateReport,
    pub als_rel_err: f64,
    pub matricized_rel_err: Option<f64>,
}

fn solver_params(cfg: &ExperimentConfig, seed: u64) -> SolverParams {
    SolverParams {
        max_iters: cfg.max_iters,
        abs_tol: cfg.abs_tol,
        rel_tol: cfg.rel_tol,
        rho: cfg.rho,
        target_ranks: None,
        restarts: cfg.als_restarts,
        seed,
    }
}

pub fn sweep_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    grid(cfg)?
        .par_iter()
        .map(|cell| {
            let inst = Instance::generate(cell.dims, cfg.weights.weights(cell.r), cell.n, cell.seed)?;
            let (_, _, report) = certify_instance(cfg, &inst, cell)?;
            let observed = observe(&inst.tensor, &inst.omega)?;
            let params = solver_params(cfg, derive_seed(cell.seed, 4));
            let als = complete_tucker_als(
                &inst.omega,
                &observed,
                cell.dims,
                &SolverParams { target_ranks: Some([cell.r; 3]), ..params },
            )?;
            let als_rel_err = relative_error(&als.x_hat, &inst.tensor)?;
            let matricized_rel_err = if cfg.matricized {
                let m = complete_matricized(&inst.omega, &observed, cell.dims, &params)?;
                Some(relative_error(&m.x_hat, &inst.tensor)?)
            } else {
                None
            };
            Ok(SweepRow { cell: *cell, report, als_rel_err, matricized_rel_err })
        })
        .collect()
}

pub fn render_sweep(cfg: &ExperimentConfig, rows: &[SweepRow]) -> String {
    render(
        cfg,
        SWEEP_HEADER,
        rows.iter().map(|row| {
            let r = &row.report;
            format!(
                "{},{},{},{},{},{},{},{}",
                dims_prefix(&row.cell),
                r.certified,
                fmt_f64(r.injectivity_tau),
                fmt_f64(r.hs_gap),
                fmt_f64(r.hs_threshold),
                fmt_f64(r.spec_perp),
                fmt_f64(row.als_rel_err),
                opt(row.matricized_rel_err)
            )
        }),
    )
}

/// Per `(dims, r, n, trial)`: certificate outcome plus the relative errors of
/// the Tucker ALS and matricized ADMM solvers on the same instance.
pub fn cmd_phase_sweep(cfg: &ExperimentConfig) -> Result<String> {
    Ok(render_sweep(cfg, &sweep_rows(cfg)?))
}

/// Certification rate per `(dims, r, n)`, in grid order.
pub fn success_rates(rows: &[SweepRow]) -> Vec<(Dims, usize, usize, f64)> {
    let mut out: Vec<(Dims, usize, usize, usize, usize)> = Vec::new();
    for row in rows {
        let c = &row.cell;
        match out.last_mut() {
            Some(last) if (last.0, last.1, last.2) == (c.dims, c.r, c.n) => {
                last.3 += row.report.certified as usize;
                last.4 += 1;
            }
            _ => out.push((c.dims, c.r, c.n, row.report.certified as usize, 1)),
        }
    }
    out.into_iter().map(|(d, r, n, k, t)| (d, r, n, k as f64 / t as f64)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct McRow {
    pub lemma: Lemma,
    pub event: &'static str,
    pub dims: Dims,
    pub r: usize,
    pub n: usize,
    /// `τ`, `t`, or `ν1` for the aspect-ratio check.
    pub param: f64,
    pub seed: u64,
    pub report: McReport,
}

struct McCell {
    dims: Dims,
    r: usize,
    n: usize,
    tau: f64,
    seed: u64,
}

pub fn montecarlo_rows(cfg: &ExperimentConfig, lemma: Lemma) -> Result<Vec<McRow>> {
    cfg.validate()?;
    if cfg.mc_trials < MIN_TRIALS {
        return Err(HarnessError::Config(format!(
            "mc_trials = {} is below the minimum of {MIN_TRIALS}",
            cfg.mc_trials
        )));
    }
    if lemma != Lemma::Aspbd && cfg.mc_tau.is_empty() {
        return Err(HarnessError::Config("mc_tau empty".into()));
    }
    let mut cells = Vec::new();
    for &dims in &cfg.dims {
        let ranks: &[usize] = if lemma == Lemma::Aspbd { &[0] } else { &cfg.ranks };
        let taus: &[f64] = if lemma == Lemma::Aspbd { &[0.0] } else { &cfg.mc_tau };
        for &r in ranks {
            for n in cfg.n_grid.resolve(dims) {
                for &tau in taus {
                    let seed = derive_seed(cfg.seed, cells.len() as u64);
                    cells.push(McCell { dims, r, n, tau, seed });
                }
            }
        }
    }
    let trials = cfg.mc_trials;
    let per_cell: Vec<Vec<McRow>> = cells
        .par_iter()
        .map(|c| {
            let row = |event, param, report| McRow { lemma, event, dims: c.dims, r: c.r, n: c.n, param, seed: c.seed, report };
            if lemma == Lemma::Aspbd {
                let log_d = ((c.dims[0] + c.dims[1] + c.dims[2]) as f64).ln();
                let delta1 = cfg.delta1.unwrap_or(1.0 / log_d);
                let report = mc_aspect(c.dims, c.n, cfg.beta, delta1, trials, c.seed)?;
                return Ok(vec![row("aspect", aspect_nu1(c.dims, c.n, cfg.beta, delta1), report)]);
            }
            let mut rng = rng_from_seed(derive_seed(c.seed, 0));
            let d = OrthoDecomposition::random(c.dims, cfg.weights.weights(c.r), &mut rng)?;
            let s = d.subspaces();
            let mc_seed = derive_seed(c.seed, 1);
            Ok(match lemma {
                Lemma::OpNorm => vec![row("opnorm", c.tau, mc_opnorm(&s, c.n, c.tau, trials, mc_seed)?)],
                Lemma::Iid => {
                    let (op, mx) = mc_iid_ops(&s, &dual_witness(&d), c.n, c.tau, trials, mc_seed)?;
                    vec![row("op", c.tau, op), row("max", c.tau, mx)]
                }
                Lemma::Sym => vec![row("sym", c.tau, mc_symmetrization(&dual_witness(&d), c.n, c.tau, trials, mc_seed)?)],
                Lemma::Aspbd => unreachable!(),
            })
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

pub fn render_montecarlo(cfg: &ExperimentConfig, rows: &[McRow]) -> String {
    render(
        cfg,
        MC_HEADER,
        rows.iter().map(|row| {
            let r = &row.report;
            format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                row.lemma.name(),
                row.event,
                row.dims[0],
                row.dims[1],
                row.dims[2],
                row.r,
                row.n,
                fmt_f64(row.param),
                r.trials,
                row.seed,
                r.event_count,
                fmt_f64(r.empirical_prob),
                fmt_f64(r.paper_bound),
                r.bound_active,
                fmt_f64(r.three_sigma)
            )
        }),
    )
}

/// One report row per parameter cell (two for `iid`: operator and max-norm
/// events). The selector comes from `lemma` in the config.
pub fn cmd_montecarlo(cfg: &ExperimentConfig) -> Result<String> {
    let lemma = cfg.lemma.ok_or_else(|| {
        HarnessError::Config(format!("no lemma selected; valid selectors: {}", Lemma::NAMES.join(", ")))
    })?;
    Ok(render_montecarlo(cfg, &montecarlo_rows(cfg, lemma)?))
}

/// Norm summary of `t`. The digitalized bracket is included when the
/// enumeration is feasible, the nuclear norm only when `ortho` is given
/// (it must reproduce `t`).
pub fn cmd_norms(t: &Tensor3, ortho: Option<&OrthoDecomposition>) -> Result<String> {
    let mut rows = vec![("max", t.max_norm()), ("hs", t.hs_norm())];
    let spectral = match spectral_norm_hopm(t, &HopmOptions::default()) {
        Ok(est) => est.value,
        Err(Error::ZeroTensor) => 0.0,
        Err(e) => return Err(e.into()),
    };
    rows.push(("spectral_hopm", spectral));
    match spectral_norm_digitalized(t) {
        Ok(v) => {
            rows.push(("digitalized_lower", v));
            rows.push(("digitalized_upper", 8.0 * v));
        }
        Err(Error::EnumerationTooLarge { .. }) => {}
        Err(e) => return Err(e.into()),
    }
    if let Some(d) = ortho {
        let gap = d.to_tensor().sub(t)?.hs_norm();
        if gap > 1e-9 * t.hs_norm().max(1.0) {
            return Err(HarnessError::Config(format!(
                "orthogonal decomposition does not reproduce the tensor (HS distance {gap:e})"
            )));
        }
        rows.push(("nuclear", nuclear_norm_ortho(d)));
    }
    let mut out = String::from(NORMS_HEADER);
    out.push('\n');
    for (name, v) in rows {
        out.push_str(&format!("{name},{}\n", fmt_f64(v)));
    }
    Ok(out)
}
