//! Third-order tensor completion by nuclear-norm minimisation: tensor norms
//! and projections, coherence, golfing-scheme dual certificates, completion
//! solvers, and Monte-Carlo checks of the supporting concentration bounds.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the experiment driver live in the `tenscert` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod certificate;
pub mod concentration;
mod error;
mod linalg;
mod math;

pub mod norms;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod subspace;
pub mod tensor;

pub use certificate::{
    apply_r, build_golfing, check_certificate, estimate_injectivity, injectivity_exact, required_batches,
    theorem1_threshold, CertificateOptions, CertificateReport, GolfingState, InjectivityMethod,
};
pub use concentration::{mc_aspect, mc_iid_ops, mc_opnorm, mc_symmetrization, McReport};
pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use norms::{
    c_md, digitalize, dual_witness, nuclear_norm_ortho, spectral_norm_digitalized, spectral_norm_hopm,
    subgrad_inequality_check, subgrad_inequality_evaluate, DigitalSet, HopmOptions, OrthoDecomposition,
    SpectralEstimate, SubgradientCheck,
};
pub use sampling::{
    aspect_ratio, block_aspect, iid_from_omega, sample_omega, split_batches, BatchPlan, IidSequence,
    SampleSet,
};
pub use solver::{
    complete_matricized, complete_tucker_als, observe, relative_error, SolveResult, SolverParams,
};
pub use subspace::{
    coherence_profile, fiber_subspaces, mu_subspace, projector_rank, rbar, CoherenceProfile,
    ProjectorKind, TuckerSubspaces, DEFAULT_RANK_TOL,
};
pub use tensor::{from_factors, outer, volume, Dims, FactorTriple, IndexTriple, Mode, Norms, Tensor3};
