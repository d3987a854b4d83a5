//! Experiment configuration.
//!
//! The file format is flat `key = value` text, one pair per line, with `#`
//! comments. Values are layered: defaults, then the config file, then
//! command-line flags. [`ExperimentConfig::echo`] renders the effective
//! configuration as the `# config:` line that heads every CSV.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use tenscert_core::{volume, Dims};

use crate::error::{HarnessError, Result};

/// Sample sizes, either absolute or as fractions of `d1·d2·d3`.
#[derive(Clone, Debug, PartialEq)]
pub enum NGrid {
    Counts(Vec<usize>),
    Fractions(Vec<f64>),
}

impl NGrid {
    pub fn is_empty(&self) -> bool {
        match self {
            NGrid::Counts(v) => v.is_empty(),
            NGrid::Fractions(v) => v.is_empty(),
        }
    }

    /// Absolute sizes for `dims`; fractions round to the nearest integer,
    /// clamped to at least 1.
    pub fn resolve(&self, dims: Dims) -> Vec<usize> {
        let total = volume(dims) as f64;
        match self {
            NGrid::Counts(v) => v.clone(),
            NGrid::Fractions(v) => v.iter().map(|f| ((f * total).round() as usize).max(1)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightProfile {
    /// Every weight 1.
    Equal,
    /// `λ_i = q^{i−1}`.
    Geometric(f64),
    /// Explicit weights; rank `r` uses the first `r`.
    List(Vec<f64>),
}

impl WeightProfile {
    pub fn weights(&self, r: usize) -> Vec<f64> {
        match self {
            WeightProfile::Equal => vec![1.0; r],
            WeightProfile::Geometric(q) => (0..r).map(|i| q.powi(i as i32)).collect(),
            WeightProfile::List(v) => v[..r].to_vec(),
        }
    }
}

impl fmt::Display for WeightProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightProfile::Equal => write!(f, "equal"),
            WeightProfile::Geometric(q) => write!(f, "geometric:{q}"),
            WeightProfile::List(v) => write!(f, "{}", join(v)),
        }
    }
}

/// Which concentration statement `montecarlo` checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lemma {
    OpNorm,
    Iid,
    Sym,
    Aspbd,
}

impl Lemma {
    pub const NAMES: [&'static str; 4] = ["opnorm", "iid", "sym", "aspbd"];

    pub fn name(self) -> &'static str {
        match self {
            Lemma::OpNorm => "opnorm",
            Lemma::Iid => "iid",
            Lemma::Sym => "sym",
            Lemma::Aspbd => "aspbd",
        }
    }
}

impl FromStr for Lemma {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "opnorm" => Ok(Lemma::OpNorm),
            "iid" => Ok(Lemma::Iid),
            "sym" => Ok(Lemma::Sym),
            "aspbd" => Ok(Lemma::Aspbd),
            _ => Err(format!("unknown lemma {s:?}; valid selectors: {}", Lemma::NAMES.join(", "))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Injectivity {
    Exact,
    Power,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<Dims>,
    pub ranks: Vec<usize>,
    pub weights: WeightProfile,
    pub n_grid: NGrid,
    pub trials: usize,
    pub seed: u64,

    /// Contraction target used to choose the batch count.
    pub tau: f64,
    pub n1: Option<usize>,
    pub n2: Option<usize>,
    /// Batch length, as a multiple of `d1·d2·d3`, when Ω is the full grid
    /// and `n1` is not set.
    pub full_grid_factor: usize,
    pub injectivity: Injectivity,
    pub hopm_restarts: usize,

    pub max_iters: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub rho: f64,
    pub als_restarts: usize,
    pub matricized: bool,

    pub beta: f64,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub c0: f64,

    pub lemma: Option<Lemma>,
    pub mc_trials: usize,
    /// Thresholds `τ` (or `t` for `sym`) for the Monte-Carlo cells.
    pub mc_tau: Vec<f64>,

    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            dims: vec![[8, 8, 8]],
            ranks: vec![1],
            weights: WeightProfile::Equal,
            n_grid: NGrid::Fractions(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8]),
            trials: 20,
            seed: 0,
            tau: 0.25,
            n1: None,
            n2: None,
            full_grid_factor: 16,
            injectivity: Injectivity::Exact,
            hopm_restarts: 32,
            max_iters: 2000,
            abs_tol: 1e-8,
            rel_tol: 1e-8,
            rho: 1.0,
            als_restarts: 4,
            matricized: true,
            beta: 1.0,
            delta1: None,
            delta2: None,
            c0: 1.0,
            lemma: None,
            mc_trials: 1000,
            mc_tau: vec![0.5],
            out: None,
        }
    }
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| format!("cannot parse {:?}", t.trim())))
        .collect()
}

fn scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse {value:?}"))
}

fn optional<T: FromStr>(value: &str) -> std::result::Result<Option<T>, String> {
    if value == "auto" {
        Ok(None)
    } else {
        scalar(value).map(Some)
    }
}

fn show_opt<T: fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), |x| x.to_string())
}

fn parse_dims(value: &str) -> std::result::Result<Vec<Dims>, String> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|item| {
            let parts: Vec<usize> = item
                .trim()
                .split('x')
                .map(|p| p.trim().parse().map_err(|_| format!("bad dimensions {:?}, expected d1xd2xd3", item.trim())))
                .collect::<std::result::Result<_, _>>()?;
            match parts[..] {
                [a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
                _ => Err(format!("bad dimensions {:?}, expected d1xd2xd3", item.trim())),
            }
        })
        .collect()
}

fn parse_weights(value: &str) -> std::result::Result<WeightProfile, String> {
    if value == "equal" {
        return Ok(WeightProfile::Equal);
    }
    if let Some(q) = value.strip_prefix("geometric:") {
        return scalar(q.trim()).map(WeightProfile::Geometric);
    }
    list(value).map(WeightProfile::List)
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found {value:?}")),
    }
}

impl ExperimentConfig {
    /// Sets one key. `out` is accepted here too.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let value = value.trim();
        match key {
            "dims" => self.dims = parse_dims(value)?,
            "ranks" => self.ranks = list(value)?,
            "weights" => self.weights = parse_weights(value)?,
            "n" => self.n_grid = NGrid::Counts(list(value)?),
            "n_frac" => self.n_grid = NGrid::Fractions(list(value)?),
            "trials" => self.trials = scalar(value)?,
            "seed" => self.seed = scalar(value)?,
            "tau" => self.tau = scalar(value)?,
            "n1" => self.n1 = optional(value)?,
            "n2" => self.n2 = optional(value)?,
            "full_grid_factor" => self.full_grid_factor = scalar(value)?,
            "injectivity" => {
                self.injectivity = match value {
                    "exact" => Injectivity::Exact,
                    "power" => Injectivity::Power,
                    _ => return Err(format!("injectivity must be exact or power, found {value:?}")),
                }
            }
            "hopm_restarts" => self.hopm_restarts = scalar(value)?,
            "max_iters" => self.max_iters = scalar(value)?,
            "abs_tol" => self.abs_tol = scalar(value)?,
            "rel_tol" => self.rel_tol = scalar(value)?,
            "rho" => self.rho = scalar(value)?,
            "als_restarts" => self.als_restarts = scalar(value)?,
            "matricized" => self.matricized = parse_bool(value)?,
            "beta" => self.beta = scalar(value)?,
            "delta1" => self.delta1 = optional(value)?,
            "delta2" => self.delta2 = optional(value)?,
            "c0" => self.c0 = scalar(value)?,
            "lemma" => self.lemma = if value == "none" { None } else { Some(value.parse()?) },
            "mc_trials" => self.mc_trials = scalar(value)?,
            "mc_tau" => self.mc_tau = list(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies the `key = value` lines of `text` on top of `self`.
    pub fn apply_text(&mut self, source_name: &str, text: &str) -> Result<()> {
        let mut seen = std::collections::HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| HarnessError::parse(source_name, line, format!("expected key = value, found {body:?}")))?;
            let key = key.trim();
            if let Some(prev) = seen.insert(key.to_string(), line) {
                return Err(HarnessError::parse(source_name, line, format!("duplicate key {key:?} (first set on line {prev})")));
            }
            self.set(key, value).map_err(|msg| HarnessError::parse(source_name, line, format!("{key}: {msg}")))?;
        }
        Ok(())
    }

    pub fn from_text(source_name: &str, text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        cfg.apply_text(source_name, text)?;
        Ok(cfg)
    }

    /// Checks the settings every command relies on.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.n_grid.is_empty() {
            return bad("n grid empty");
        }
        match &self.n_grid {
            NGrid::Counts(v) => {
                if v.contains(&0) {
                    return bad("n grid entries must be positive");
                }
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("n grid must be strictly ascending");
                }
            }
            NGrid::Fractions(v) => {
                if v.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
                    return bad("n_frac entries must be positive");
                }
                if v.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("n grid must be strictly ascending");
                }
            }
        }
        if self.dims.is_empty() {
            return bad("dims empty");
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return bad("ranks must be a nonempty list of positive integers");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad("tau must lie in (0, 1)");
        }
        if self.n1 == Some(0) || self.n2 == Some(0) || self.full_grid_factor == 0 {
            return bad("n1, n2 and full_grid_factor must be positive");
        }
        if self.hopm_restarts == 0 {
            return bad("hopm_restarts must be positive");
        }
        let max_rank = *self.ranks.iter().max().unwrap_or(&0);
        match &self.weights {
            WeightProfile::List(v) if v.len() < max_rank => {
                return Err(HarnessError::Config(format!(
                    "weights lists {} values but the largest rank is {max_rank}",
                    v.len()
                )))
            }
            WeightProfile::List(v) if v.iter().any(|w| !(*w > 0.0)) => return bad("weights must be positive"),
            WeightProfile::Geometric(q) if !(*q > 0.0) => return bad("geometric ratio must be positive"),
            _ => {}
        }
        for d in &self.dims {
            if d.iter().any(|&x| x < max_rank) {
                return Err(HarnessError::Config(format!("rank {max_rank} exceeds a dimension of {d:?}")));
            }
        }
        Ok(())
    }

    /// Effective configuration as a single CSV comment line (without newline).
    pub fn echo(&self) -> String {
        let n = match &self.n_grid {
            NGrid::Counts(v) => format!("n={}", join(v)),
            NGrid::Fractions(v) => format!("n_frac={}", join(v)),
        };
        let dims: Vec<String> = self.dims.iter().map(|d| format!("{}x{}x{}", d[0], d[1], d[2])).collect();
        let injectivity = match self.injectivity {
            Injectivity::Exact => "exact",
            Injectivity::Power => "power",
        };
        let pairs = [
            format!("dims={}", dims.join(",")),
            format!("ranks={}", join(&self.ranks)),
            format!("weights={}", self.weights),
            n,
            format!("trials={}", self.trials),
            format!("seed={}", self.seed),
            format!("tau={}", self.tau),
            format!("n1={}", show_opt(&self.n1)),
            format!("n2={}", show_opt(&self.n2)),
            format!("full_grid_factor={}", self.full_grid_factor),
            format!("injectivity={injectivity}"),
            format!("hopm_restarts={}", self.hopm_restarts),
            format!("max_iters={}", self.max_iters),
            format!("abs_tol={}", self.abs_tol),
            format!("rel_tol={}", self.rel_tol),
            format!("rho={}", self.rho),
            format!("als_restarts={}", self.als_restarts),
            format!("matricized={}", self.matricized),
            format!("beta={}", self.beta),
            format!("delta1={}", show_opt(&self.delta1)),
            format!("delta2={}", show_opt(&self.delta2)),
            format!("c0={}", self.c0),
            format!("lemma={}", self.lemma.map_or("none", Lemma::name)),
            format!("mc_trials={}", self.mc_trials),
            format!("mc_tau={}", join(&self.mc_tau)),
        ];
        format!("# config: {}", pairs.join("; "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_with_comments() {
        let text = "# sweep\ndims = 8x8x8, 10x10x10\nranks=1,2\n\nn_frac = 0.1,0.5 # half\nweights = geometric:0.5\nn2 = 3\n";
        let cfg = ExperimentConfig::from_text("c", text).unwrap();
        assert_eq!(cfg.dims, vec![[8, 8, 8], [10, 10, 10]]);
        assert_eq!(cfg.ranks, vec![1, 2]);
        assert_eq!(cfg.n_grid, NGrid::Fractions(vec![0.1, 0.5]));
        assert_eq!(cfg.weights.weights(3), vec![1.0, 0.5, 0.25]);
        assert_eq!(cfg.n2, Some(3));
        assert_eq!(cfg.n1, None);
        cfg.validate().unwrap();
    }

    #[test]
    fn errors_are_line_precise() {
        let err = ExperimentConfig::from_text("c.cfg", "seed = 1\n\ntrials = many\n").unwrap_err();
        assert_eq!(err.to_string(), "c.cfg:3: trials: cannot parse \"many\"");
        let err = ExperimentConfig::from_text("c.cfg", "bogus = 1\n").unwrap_err();
        assert_eq!(err.to_string(), "c.cfg:1: bogus: unknown key \"bogus\"");
        let err = ExperimentConfig::from_text("c.cfg", "seed 1\n").unwrap_err();
        assert!(err.to_string().starts_with("c.cfg:1: expected key = value"));
        let err = ExperimentConfig::from_text("c.cfg", "seed=1\nseed=2\n").unwrap_err();
        assert!(err.to_string().starts_with("c.cfg:2: duplicate key"));
        let err = ExperimentConfig::from_text("c.cfg", "dims = 3x3\n").unwrap_err();
        assert!(err.to_string().starts_with("c.cfg:1: dims:"));
    }

    #[test]
    fn empty_n_grid_rejected() {
        let cfg = ExperimentConfig::from_text("c", "n =\n").unwrap();
        assert_eq!(cfg.validate().unwrap_err().to_string(), "config: n grid empty");
        let cfg = ExperimentConfig::from_text("c", "n = 30, 20\n").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "dims=6x6x6\nranks=2\nweights=3,1\nn=10,40\nn1=7\nlemma=iid\nmc_tau=0.25,0.5\nmatricized=false\n";
        let cfg = ExperimentConfig::from_text("c", text).unwrap();
        let echo = cfg.echo();
        let body = echo.strip_prefix("# config: ").unwrap().replace("; ", "\n");
        assert_eq!(ExperimentConfig::from_text("echo", &body).unwrap(), cfg);
    }

    #[test]
    fn unknown_lemma_lists_selectors() {
        let err = "nonsense".parse::<Lemma>().unwrap_err();
        assert_eq!(err, "unknown lemma \"nonsense\"; valid selectors: opnorm, iid, sym, aspbd");
    }

    #[test]
    fn fractions_resolve() {
        let g = NGrid::Fractions(vec![0.001, 0.5, 1.0]);
        assert_eq!(g.resolve([10, 10, 10]), vec![1, 500, 1000]);
    }
}
