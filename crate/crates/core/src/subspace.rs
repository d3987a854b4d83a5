//! Fiber spans, Tucker ranks, coherence, and the composite Q-projectors.
//!
//! For a tensor `T` with mode-`j` fiber span `L_j(T)`, write `P_j` for the
//! orthogonal projector onto `L_j(T)` and `P⊥_j = I − P_j`. The composite
//! projectors are tensor products of these, one factor per mode:
//!
//! | kind      | mode 1 | mode 2 | mode 3 |
//! |-----------|--------|--------|--------|
//! | `Q0`      | P      | P      | P      |
//! | `Q1`      | P⊥     | P      | P      |
//! | `Q2`      | P      | P⊥     | P      |
//! | `Q3`      | P      | P      | P⊥     |
//! | `Q0perp`  | P⊥     | P⊥     | P⊥     |
//! | `Q1perp`  | P      | P⊥     | P⊥     |
//! | `Q2perp`  | P⊥     | P      | P⊥     |
//! | `Q3perp`  | P⊥     | P⊥     | P      |
//!
//! `Q = Q0 + Q1 + Q2 + Q3` and `Qperp = Q0perp + … + Q3perp`. Projectors are
//! applied matrix-free through mode multiplications.
//!
//! The minimal CP rank of `T` is known to lie in `[r̄(T), r̄(T)²]`; nothing
//! here computes CP ranks.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::left_singular;
use crate::math;
use crate::tensor::{check_dims, volume, Dims, Mode, Tensor3};

/// Default relative singular-value cutoff used to detect fiber-span ranks.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const ORTHONORMAL_TOL: f64 = 1e-10;

/// Orthonormal bases of the three fiber spans of a tensor.
#[derive(Clone, Debug)]
pub struct TuckerSubspaces {
    dims: Dims,
    bases: [DMatrix<f64>; 3],
    projectors: [DMatrix<f64>; 3],
    complements: [DMatrix<f64>; 3],
    rank_tol: f64,
}

impl TuckerSubspaces {
    /// Wraps explicit bases; each must have orthonormal columns.
    pub fn from_bases(bases: [DMatrix<f64>; 3]) -> Result<Self> {
        Self::with_tol(bases, DEFAULT_RANK_TOL)
    }

    fn with_tol(bases: [DMatrix<f64>; 3], rank_tol: f64) -> Result<Self> {
        let dims = [bases[0].nrows(), bases[1].nrows(), bases[2].nrows()];
        check_dims(dims)?;
        for (j, u) in bases.iter().enumerate() {
            let r = u.ncols();
            if r > u.nrows() {
                return Err(Error::RankTooLarge { mode: j + 1, rank: r, dim: u.nrows() });
            }
            let gram = u.transpose() * u;
            if (gram - DMatrix::identity(r, r)).amax() > ORTHONORMAL_TOL {
                return Err(Error::InvalidDecomposition(alloc::format!(
                    "basis for mode {} is not orthonormal",
                    j + 1
                )));
            }
        }
        let projectors = [0, 1, 2].map(|j| &bases[j] * bases[j].transpose());
        let complements = [0, 1, 2].map(|j| DMatrix::identity(dims[j], dims[j]) - &projectors[j]);
        Ok(TuckerSubspaces { dims, bases, projectors, complements, rank_tol })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn ranks(&self) -> [usize; 3] {
        [self.bases[0].ncols(), self.bases[1].ncols(), self.bases[2].ncols()]
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn basis(&self, mode: Mode) -> &DMatrix<f64> {
        &self.bases[mode.axis()]
    }

    /// `P_j = U_j U_jᵀ`.
    pub fn projector(&self, mode: Mode) -> &DMatrix<f64> {
        &self.projectors[mode.axis()]
    }

    /// `P⊥_j = I − U_j U_jᵀ`.
    pub fn complement(&self, mode: Mode) -> &DMatrix<f64> {
        &self.complements[mode.axis()]
    }

    /// Orthonormal basis of the orthogonal complement of `L_j`.
    pub fn complement_basis(&self, mode: Mode) -> DMatrix<f64> {
        let j = mode.axis();
        let k = self.dims[j] - self.bases[j].ncols();
        if k == 0 {
            return DMatrix::zeros(self.dims[j], 0);
        }
        let eig = self.complements[j].clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..self.dims[j]).collect();
        order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
        let cols: Vec<_> = order[..k].iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect();
        DMatrix::from_columns(&cols)
    }

    /// `r̄` for these ranks and extents.
    pub fn rbar(&self) -> f64 {
        rbar(self.ranks(), self.dims)
    }

    pub(crate) fn check(&self, x: &Tensor3) -> Result<()> {
        if x.dims() != self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, found: x.dims() });
        }
        Ok(())
    }

    /// Applies `M1 ⊗ M2 ⊗ M3` where each `M_j` is `P_j` (`false`) or
    /// `P⊥_j` (`true`).
    fn apply_pattern(&self, perp: [bool; 3], x: &Tensor3) -> Tensor3 {
        let mut out = x.clone();
        // mode 3 first: its multiply is the cheapest on contiguous storage
        for mode in [Mode::Three, Mode::Two, Mode::One] {
            let j = mode.axis();
            let m = if perp[j] { &self.complements[j] } else { &self.projectors[j] };
            out = out.mode_multiply(m, mode).expect("projector is square in its mode");
        }
        out
    }

    /// `Q_T X` via the grouping `(I⊗P2⊗P3) + (P1⊗P2⊥⊗P3) + (P1⊗P2⊗P3⊥)`.
    pub fn project_q(&self, x: &Tensor3) -> Result<Tensor3> {
        self.check(x)?;
        let [p1, p2, p3] = &self.projectors;
        let y = x.mode_multiply(p3, Mode::Three)?;
        let z = y.mode_multiply(p2, Mode::Two)?;
        let mut inner = y.sub(&z)?;
        inner.axpy(1.0, &x.sub(&y)?.mode_multiply(p2, Mode::Two)?)?;
        let mut out = inner.mode_multiply(p1, Mode::One)?;
        out.axpy(1.0, &z)?;
        Ok(out)
    }

    /// Applies one of the named projectors.
    pub fn apply(&self, kind: ProjectorKind, x: &Tensor3) -> Result<Tensor3> {
        self.check(x)?;
        match kind.pattern() {
            Some(p) => Ok(self.apply_pattern(p, x)),
            None if kind == ProjectorKind::Q => self.project_q(x),
            None => {
                let mut acc = Tensor3::zeros(self.dims)?;
                for part in ProjectorKind::QPERP_PARTS {
                    acc.axpy(1.0, &self.apply_pattern(part.pattern().unwrap(), x))?;
                }
                Ok(acc)
            }
        }
    }
}

/// The ten named composite projectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProjectorKind {
    Q0,
    Q1,
    Q2,
    Q3,
    Q,
    Qperp,
    Q0perp,
    Q1perp,
    Q2perp,
    Q3perp,
}

impl ProjectorKind {
    pub const ALL: [ProjectorKind; 10] = [
        ProjectorKind::Q0,
        ProjectorKind::Q1,
        ProjectorKind::Q2,
        ProjectorKind::Q3,
        ProjectorKind::Q,
        ProjectorKind::Qperp,
        ProjectorKind::Q0perp,
        ProjectorKind::Q1perp,
        ProjectorKind::Q2perp,
        ProjectorKind::Q3perp,
    ];

    pub const Q_PARTS: [ProjectorKind; 4] =
        [ProjectorKind::Q0, ProjectorKind::Q1, ProjectorKind::Q2, ProjectorKind::Q3];

    pub const QPERP_PARTS: [ProjectorKind; 4] = [
        ProjectorKind::Q0perp,
        ProjectorKind::Q1perp,
        ProjectorKind::Q2perp,
        ProjectorKind::Q3perp,
    ];

    /// Per-mode complement flags for the eight elementary projectors;
    /// `None` for the two sums.
    pub fn pattern(self) -> Option<[bool; 3]> {
        use ProjectorKind::*;
        match self {
            Q0 => Some([false, false, false]),
            Q1 => Some([true, false, false]),
            Q2 => Some([false, true, false]),
            Q3 => Some([false, false, true]),
            Q0perp => Some([true, true, true]),
            Q1perp => Some([false, true, true]),
            Q2perp => Some([true, false, true]),
            Q3perp => Some([true, true, false]),
            Q | Qperp => None,
        }
    }
}

/// Orthonormal bases of the fiber spans of `x`. Singular values of each
/// unfolding below `rank_tol · σ_max` are discarded.
pub fn fiber_subspaces(x: &Tensor3, rank_tol: f64) -> Result<TuckerSubspaces> {
    if x.is_zero() {
        return Err(Error::ZeroTensor);
    }
    if !(0.0..1.0).contains(&rank_tol) {
        return Err(Error::Parameter(alloc::format!("rank_tol {rank_tol} not in [0, 1)")));
    }
    let bases = Mode::ALL.map(|mode| leading_left_singular(&x.unfold(mode), rank_tol));
    TuckerSubspaces::with_tol(bases, rank_tol)
}

fn leading_left_singular(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let (u, sv) = left_singular(m);
    let smax = sv.first().copied().unwrap_or(0.0);
    let cols: Vec<_> =
        (0..sv.len()).filter(|&i| sv[i] > rank_tol * smax).map(|i| u.column(i).into_owned()).collect();
    let mut basis = DMatrix::from_columns(&cols);
    // Re-orthonormalise to wash out the SVD's rounding.
    if basis.ncols() > 0 {
        basis = basis.qr().q();
    }
    basis
}

/// `r̄ = √((r1 r2 d3 + r1 r3 d2 + r2 r3 d1) / (d1 + d2 + d3))`.
pub fn rbar(ranks: [usize; 3], dims: Dims) -> f64 {
    let [r1, r2, r3] = ranks.map(|r| r as f64);
    let [d1, d2, d3] = dims.map(|d| d as f64);
    math::sqrt((r1 * r2 * d3 + r1 * r3 * d2 + r2 * r3 * d1) / (d1 + d2 + d3))
}

/// Dimension of the range of `Q_T`: `d1 r2 r3 + (d2 − r2) r1 r3 + (d3 − r3) r1 r2`.
pub fn projector_rank(s: &TuckerSubspaces) -> usize {
    let [r1, r2, r3] = s.ranks();
    let [d1, d2, d3] = s.dims();
    d1 * r2 * r3 + (d2 - r2) * r1 * r3 + (d3 - r3) * r1 * r2
}

/// Coherence `μ(U) = (k/r) max_i ‖P_U e_i‖²` of the column span of `u`
/// inside `R^k`, `k = ambient_dim`.
pub fn mu_subspace(u: &DMatrix<f64>, ambient_dim: usize) -> Result<f64> {
    let r = u.ncols();
    if r == 0 || u.nrows() != ambient_dim {
        return Err(Error::Shape(alloc::format!(
            "basis is {}×{}, ambient dimension {}",
            u.nrows(),
            r,
            ambient_dim
        )));
    }
    let max_row = u.row_iter().map(|row| row.norm_squared()).fold(0.0, f64::max);
    Ok(ambient_dim as f64 / r as f64 * max_row)
}

/// Coherence measures of a tensor with fiber spans `s` and dual witness `w`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceProfile {
    pub mu: f64,
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub rbar: f64,
}

/// `μ = max_j μ(L_j)`, `α = √(d1d2d3/r̄)·‖W‖_max`, `α̃ = √(d1d2d3)·‖W‖_max/‖W‖_HS`.
pub fn coherence_profile(s: &TuckerSubspaces, w: &Tensor3) -> Result<CoherenceProfile> {
    s.check(w)?;
    let dims = s.dims();
    let mut mu: f64 = 0.0;
    for mode in Mode::ALL {
        mu = mu.max(mu_subspace(s.basis(mode), dims[mode.axis()])?);
    }
    let rbar = s.rbar();
    let vol = volume(dims) as f64;
    let wmax = w.max_norm();
    let whs = w.hs_norm();
    if whs == 0.0 {
        return Err(Error::ZeroTensor);
    }
    Ok(CoherenceProfile {
        mu,
        alpha: math::sqrt(vol / rbar) * wmax,
        alpha_tilde: math::sqrt(vol) * wmax / whs,
        rbar,
    })
}
