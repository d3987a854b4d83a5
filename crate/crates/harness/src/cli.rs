use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use crate::format::{parse_ortho, parse_tensor, read_file, write_file};

#[derive(Debug, Parser)]
#[command(name = "tenscert", version, about = "Tensor completion certificates, sweeps and Monte-Carlo checks")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads (rayon default when absent).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Golfing certificate per (n, trial).
    Certify,
    /// Certificate outcome and solver errors over a (dims, r, n, trial) grid.
    PhaseSweep,
    /// Monte-Carlo check of one concentration bound.
    Montecarlo {
        /// opnorm, iid, sym or aspbd (defaults to `lemma` from the config).
        selector: Option<String>,
    },
    /// Norms of a tensor file.
    Norms {
        tensor: PathBuf,
        /// Orthogonal decomposition sidecar; enables the nuclear norm.
        #[arg(long)]
        ortho: Option<PathBuf>,
    },
}

impl Cli {
    /// Defaults, then the config file, then `--set`, then the dedicated flags.
    pub fn effective_config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_text(&path.display().to_string(), &read_file(path)?)?;
        }
        for item in &self.overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| HarnessError::Config(format!("--set expects KEY=VALUE, found {item:?}")))?;
            cfg.set(key.trim(), value).map_err(|msg| HarnessError::Config(format!("--set {}: {msg}", key.trim())))?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Command::Montecarlo { selector: Some(s) } = &self.command {
            cfg.lemma = Some(s.parse().map_err(HarnessError::Config)?);
        }
        Ok(cfg)
    }

    /// Runs the command and returns the output text.
    pub fn execute(&self) -> Result<String> {
        if let Command::Norms { tensor, ortho } = &self.command {
            let t = parse_tensor(&tensor.display().to_string(), &read_file(tensor)?)?;
            let d = match ortho {
                Some(p) => Some(parse_ortho(&p.display().to_string(), &read_file(p)?)?),
                None => None,
            };
            return commands::cmd_norms(&t, d.as_ref());
        }
        let cfg = self.effective_config()?;
        let work = || match &self.command {
            Command::Certify => commands::cmd_certify(&cfg),
            Command::PhaseSweep => commands::cmd_phase_sweep(&cfg),
            Command::Montecarlo { .. } => commands::cmd_montecarlo(&cfg),
            Command::Norms { .. } => unreachable!(),
        };
        match self.threads {
            Some(k) => rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
                .install(work),
            None => work(),
        }
    }

    /// Executes and writes to `--out` (or the config's `out`), else stdout.
    pub fn run(&self) -> Result<()> {
        let text = self.execute()?;
        let out = match &self.command {
            Command::Norms { .. } => self.out.clone(),
            _ => self.effective_config()?.out,
        };
        match out {
            Some(path) => write_file(&path, &text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}
