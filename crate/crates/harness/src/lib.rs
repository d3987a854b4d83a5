//! Experiment driver for `tenscert-core`: text formats for tensors, sample
//! sets and orthogonal decompositions, flat key=value configuration, and the
//! `certify`, `phase-sweep`, `montecarlo` and `norms` commands. Every command
//! is a pure function of its configuration and emits CSV.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

pub use cli::{Cli, Command};
pub use commands::{cmd_certify, cmd_montecarlo, cmd_norms, cmd_phase_sweep};
pub use config::{ExperimentConfig, Injectivity, Lemma, NGrid, WeightProfile};
pub use error::{HarnessError, Result};
