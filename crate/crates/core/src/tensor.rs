//! Dense third-order tensors and the elementary algebra on them.
//!
//! Entries are stored in canonical order: index `(a, b, c)` with `c` varying
//! fastest, then `b`, then `a`. Unfoldings, file formats and sample offsets
//! all derive from this order.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::math;

/// Tensor extents `(d1, d2, d3)`.
pub type Dims = [usize; 3];

pub(crate) fn check_dims(dims: Dims) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidDims(dims));
    }
    Ok(())
}

/// Number of entries `d1·d2·d3`.
#[inline]
pub fn volume(dims: Dims) -> usize {
    dims[0] * dims[1] * dims[2]
}

/// One of the three tensor modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based axis position.
    #[inline]
    pub fn axis(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    /// The other two axes, in canonical order.
    #[inline]
    pub fn others(self) -> (usize, usize) {
        match self {
            Mode::One => (1, 2),
            Mode::Two => (0, 2),
            Mode::Three => (0, 1),
        }
    }
}

impl TryFrom<usize> for Mode {
    type Error = Error;

    fn try_from(value: usize) -> Result<Self> {
        match value {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            3 => Ok(Mode::Three),
            other => Err(Error::InvalidMode(other)),
        }
    }
}

/// A 1-based coordinate triple `(a, b, c)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTriple {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

impl IndexTriple {
    pub const fn new(a: usize, b: usize, c: usize) -> Self {
        IndexTriple { a, b, c }
    }

    pub fn in_range(&self, dims: Dims) -> bool {
        (1..=dims[0]).contains(&self.a)
            && (1..=dims[1]).contains(&self.b)
            && (1..=dims[2]).contains(&self.c)
    }

    pub fn check(&self, dims: Dims) -> Result<()> {
        if self.in_range(dims) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { a: self.a, b: self.b, c: self.c, dims })
        }
    }

    /// Position in canonical storage order. The triple must be in range.
    #[inline]
    pub fn offset(&self, dims: Dims) -> usize {
        ((self.a - 1) * dims[1] + (self.b - 1)) * dims[2] + (self.c - 1)
    }

    /// Inverse of [`IndexTriple::offset`].
    #[inline]
    pub fn from_offset(offset: usize, dims: Dims) -> Self {
        let c = offset % dims[2];
        let rest = offset / dims[2];
        let b = rest % dims[1];
        let a = rest / dims[1];
        IndexTriple { a: a + 1, b: b + 1, c: c + 1 }
    }
}

impl fmt::Display for IndexTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.a, self.b, self.c)
    }
}

/// Factor matrices `[A, B, C]` sharing a column count `r ≥ 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorTriple {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
}

impl FactorTriple {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> Result<Self> {
        let r = a.ncols();
        if r == 0 || b.ncols() != r || c.ncols() != r {
            return Err(Error::Shape(alloc::format!(
                "factor column counts {}, {}, {} must agree and be positive",
                a.ncols(),
                b.ncols(),
                c.ncols()
            )));
        }
        check_dims([a.nrows(), b.nrows(), c.nrows()])?;
        Ok(FactorTriple { a, b, c })
    }

    pub fn rank(&self) -> usize {
        self.a.ncols()
    }

    pub fn dims(&self) -> Dims {
        [self.a.nrows(), self.b.nrows(), self.c.nrows()]
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
}

/// Extreme entry and Hilbert–Schmidt norms of a tensor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub hs: f64,
    pub max: f64,
}

/// Dense `d1 × d2 × d3` real tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: Dims,
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: Dims) -> Result<Self> {
        check_dims(dims)?;
        Ok(Tensor3 { dims, values: vec![0.0; volume(dims)] })
    }

    /// Builds a tensor from values in canonical order.
    pub fn from_vec(dims: Dims, values: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        if values.len() != volume(dims) {
            return Err(Error::BufferLength { expected: volume(dims), found: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Tensor3 { dims, values })
    }

    pub fn from_fn(dims: Dims, mut f: impl FnMut(IndexTriple) -> f64) -> Result<Self> {
        check_dims(dims)?;
        let values = (0..volume(dims)).map(|o| f(IndexTriple::from_offset(o, dims))).collect();
        Tensor3::from_vec(dims, values)
    }

    /// The standard basis tensor `e_a ⊗ e_b ⊗ e_c`.
    pub fn basis(dims: Dims, at: IndexTriple) -> Result<Self> {
        at.check(dims)?;
        let mut t = Tensor3::zeros(dims)?;
        t.values[at.offset(dims)] = 1.0;
        Ok(t)
    }

    // Internal constructor for buffers already known to be valid.
    pub(crate) fn from_raw(dims: Dims, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), volume(dims));
        Tensor3 { dims, values }
    }

    #[inline]
    pub fn dims(&self) -> Dims {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entries in canonical order.
    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, at: IndexTriple) -> Result<f64> {
        at.check(self.dims)?;
        Ok(self.values[at.offset(self.dims)])
    }

    /// Zero-based accessor.
    #[inline]
    pub(crate) fn at(&self, a: usize, b: usize, c: usize) -> f64 {
        self.values[(a * self.dims[1] + b) * self.dims[2] + c]
    }

    pub fn set(&mut self, at: IndexTriple, value: f64) -> Result<()> {
        at.check(self.dims)?;
        if !value.is_finite() {
            return Err(Error::NonFinite(at.offset(self.dims)));
        }
        let o = at.offset(self.dims);
        self.values[o] = value;
        Ok(())
    }

    fn same_dims(&self, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.dims, found: other.dims });
        }
        Ok(())
    }

    /// `⟨X, Y⟩ = Σ X(a,b,c) Y(a,b,c)`.
    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        self.same_dims(other)?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norms(&self) -> Norms {
        Norms { hs: self.hs_norm(), max: self.max_norm() }
    }

    pub fn hs_norm(&self) -> f64 {
        math::sqrt(dot(&self.values, &self.values))
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, &v| f64::max(m, math::abs(v)))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.same_dims(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x + y).collect();
        Ok(Tensor3::from_raw(self.dims, values))
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.same_dims(other)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| x - y).collect();
        Ok(Tensor3::from_raw(self.dims, values))
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        Tensor3::from_raw(self.dims, self.values.iter().map(|x| s * x).collect())
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: f64, other: &Tensor3) -> Result<()> {
        self.same_dims(other)?;
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += s * y;
        }
        Ok(())
    }

    /// Mode-`j` unfolding: a `d_j × (∏_{k≠j} d_k)` matrix whose columns are the
    /// mode-`j` fibers. Columns are ordered by the remaining two indices in
    /// canonical order (the later index varies fastest).
    pub fn unfold(&self, mode: Mode) -> DMatrix<f64> {
        let [d1, d2, d3] = self.dims;
        match mode {
            Mode::One => DMatrix::from_fn(d1, d2 * d3, |a, col| self.values[a * d2 * d3 + col]),
            Mode::Two => DMatrix::from_fn(d2, d1 * d3, |b, col| {
                let (a, c) = (col / d3, col % d3);
                self.at(a, b, c)
            }),
            Mode::Three => DMatrix::from_fn(d3, d1 * d2, |c, col| {
                let (a, b) = (col / d2, col % d2);
                self.at(a, b, c)
            }),
        }
    }

    /// Inverse of [`Tensor3::unfold`].
    pub fn refold(matrix: &DMatrix<f64>, mode: Mode, dims: Dims) -> Result<Tensor3> {
        check_dims(dims)?;
        let axis = mode.axis();
        let expected = (dims[axis], volume(dims) / dims[axis]);
        if matrix.shape() != expected {
            return Err(Error::Shape(alloc::format!(
                "unfolding has shape {:?}, expected {:?}",
                matrix.shape(),
                expected
            )));
        }
        let [_, d2, d3] = dims;
        let mut values = vec![0.0; volume(dims)];
        for (o, slot) in values.iter_mut().enumerate() {
            let c = o % d3;
            let b = (o / d3) % d2;
            let a = o / (d2 * d3);
            *slot = match mode {
                Mode::One => matrix[(a, b * d3 + c)],
                Mode::Two => matrix[(b, a * d3 + c)],
                Mode::Three => matrix[(c, a * d2 + b)],
            };
        }
        Tensor3::from_vec(dims, values)
    }

    /// Marginal multiplication `M ×_j X`. `M` must have `d_j` columns; the
    /// result replaces extent `d_j` by the row count of `M`.
    pub fn mode_multiply(&self, m: &DMatrix<f64>, mode: Mode) -> Result<Tensor3> {
        let axis = mode.axis();
        if m.ncols() != self.dims[axis] || m.nrows() == 0 {
            return Err(Error::Shape(alloc::format!(
                "matrix is {}×{}, mode {} extent is {}",
                m.nrows(),
                m.ncols(),
                axis + 1,
                self.dims[axis]
            )));
        }
        let mut out_dims = self.dims;
        out_dims[axis] = m.nrows();
        let [d1, d2, d3] = self.dims;
        let [e1, e2, e3] = out_dims;
        let mut out = vec![0.0; volume(out_dims)];
        match mode {
            Mode::One => {
                let stride = d2 * d3;
                for i in 0..e1 {
                    let row = &mut out[i * stride..(i + 1) * stride];
                    for k in 0..d1 {
                        let w = m[(i, k)];
                        if w == 0.0 {
                            continue;
                        }
                        let src = &self.values[k * stride..(k + 1) * stride];
                        for (o, s) in row.iter_mut().zip(src) {
                            *o += w * s;
                        }
                    }
                }
            }
            Mode::Two => {
                for a in 0..d1 {
                    for i in 0..e2 {
                        let dst = (a * e2 + i) * e3;
                        for k in 0..d2 {
                            let w = m[(i, k)];
                            if w == 0.0 {
                                continue;
                            }
                            let src = (a * d2 + k) * d3;
                            for c in 0..d3 {
                                out[dst + c] += w * self.values[src + c];
                            }
                        }
                    }
                }
            }
            Mode::Three => {
                for ab in 0..d1 * d2 {
                    let src = &self.values[ab * d3..(ab + 1) * d3];
                    let dst = &mut out[ab * e3..(ab + 1) * e3];
                    for (i, o) in dst.iter_mut().enumerate() {
                        *o = (0..d3).map(|k| m[(i, k)] * src[k]).sum();
                    }
                }
            }
        }
        Ok(Tensor3::from_raw(out_dims, out))
    }

    /// Contracts every mode except `mode` against the given vectors, e.g. for
    /// `Mode::One` returns `X(·, v, w)`.
    pub fn contract_except(&self, mode: Mode, x: &[f64], y: &[f64]) -> Vec<f64> {
        let [d1, d2, d3] = self.dims;
        match mode {
            Mode::One => (0..d1)
                .map(|a| {
                    let mut s = 0.0;
                    for b in 0..d2 {
                        let base = (a * d2 + b) * d3;
                        s += x[b] * dot(&self.values[base..base + d3], y);
                    }
                    s
                })
                .collect(),
            Mode::Two => {
                let mut out = vec![0.0; d2];
                for a in 0..d1 {
                    if x[a] == 0.0 {
                        continue;
                    }
                    for (b, o) in out.iter_mut().enumerate() {
                        let base = (a * d2 + b) * d3;
                        *o += x[a] * dot(&self.values[base..base + d3], y);
                    }
                }
                out
            }
            Mode::Three => {
                let mut out = vec![0.0; d3];
                for a in 0..d1 {
                    for b in 0..d2 {
                        let w = x[a] * y[b];
                        if w == 0.0 {
                            continue;
                        }
                        let base = (a * d2 + b) * d3;
                        for (o, v) in out.iter_mut().zip(&self.values[base..base + d3]) {
                            *o += w * v;
                        }
                    }
                }
                out
            }
        }
    }

    /// `⟨X, u ⊗ v ⊗ w⟩`.
    pub fn multilinear(&self, u: &[f64], v: &[f64], w: &[f64]) -> f64 {
        dot(&self.contract_except(Mode::Three, u, v), w)
    }
}

/// Rank-one tensor `u ⊗ v ⊗ w` with entries `u_a v_b w_c`.
pub fn outer(u: &[f64], v: &[f64], w: &[f64]) -> Result<Tensor3> {
    let dims = [u.len(), v.len(), w.len()];
    check_dims(dims)?;
    let mut values = Vec::with_capacity(volume(dims));
    for &x in u {
        for &y in v {
            let xy = x * y;
            values.extend(w.iter().map(|&z| xy * z));
        }
    }
    Tensor3::from_vec(dims, values)
}

/// `[A, B, C] = Σ_k a_k ⊗ b_k ⊗ c_k`.
pub fn from_factors(f: &FactorTriple) -> Tensor3 {
    let dims = f.dims();
    let [d1, d2, d3] = dims;
    let mut values = vec![0.0; volume(dims)];
    for k in 0..f.rank() {
        for a in 0..d1 {
            let x = f.a[(a, k)];
            if x == 0.0 {
                continue;
            }
            for b in 0..d2 {
                let xy = x * f.b[(b, k)];
                if xy == 0.0 {
                    continue;
                }
                let base = (a * d2 + b) * d3;
                for c in 0..d3 {
                    values[base + c] += xy * f.c[(c, k)];
                }
            }
        }
    }
    Tensor3::from_raw(dims, values)
}

#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    math::sqrt(dot(x, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn e(d: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; d];
        v[i - 1] = 1.0;
        v
    }

    fn lcg_tensor(dims: Dims, seed: u64) -> Tensor3 {
        let mut s = seed;
        Tensor3::from_fn(dims, |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .unwrap()
    }

    #[test]
    fn basis_tensors_with_disjoint_support_are_orthogonal() {
        let x = outer(&e(2, 1), &e(2, 2), &e(2, 1)).unwrap();
        let y = outer(&e(2, 1), &e(2, 1), &e(2, 1)).unwrap();
        assert_eq!(x.inner(&y).unwrap(), 0.0);
    }

    #[test]
    fn inner_rejects_mismatched_dims() {
        let x = Tensor3::zeros([2, 2, 2]).unwrap();
        let y = Tensor3::zeros([2, 2, 3]).unwrap();
        assert!(matches!(x.inner(&y), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn norms_of_simple_tensors() {
        let ones = outer(&[1.0, 1.0], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        let n = ones.norms();
        assert_relative_eq!(n.hs, 8f64.sqrt(), epsilon = 1e-15);
        assert_eq!(n.max, 1.0);
        let z = Tensor3::zeros([3, 1, 2]).unwrap().norms();
        assert_eq!((z.hs, z.max), (0.0, 0.0));
    }

    #[test]
    fn outer_places_single_entry() {
        let t = outer(&e(2, 1), &e(2, 1), &e(2, 1)).unwrap();
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn canonical_order_has_last_index_fastest() {
        let t = Tensor3::from_fn([2, 3, 4], |i| (100 * i.a + 10 * i.b + i.c) as f64).unwrap();
        assert_eq!(t.values()[0], 111.0);
        assert_eq!(t.values()[1], 112.0);
        assert_eq!(t.values()[4], 121.0);
        assert_eq!(t.values()[12], 211.0);
        assert_eq!(t.get(IndexTriple::new(2, 3, 4)).unwrap(), 234.0);
        assert!(t.get(IndexTriple::new(0, 1, 1)).is_err());
        assert!(t.get(IndexTriple::new(3, 1, 1)).is_err());
    }

    #[test]
    fn from_vec_rejects_bad_buffers() {
        assert!(matches!(
            Tensor3::from_vec([2, 2, 2], vec![0.0; 7]),
            Err(Error::BufferLength { .. })
        ));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert_eq!(Tensor3::from_vec([2, 2, 2], v), Err(Error::NonFinite(3)));
        assert_eq!(Tensor3::zeros([2, 0, 2]), Err(Error::InvalidDims([2, 0, 2])));
    }

    #[test]
    fn unfold_columns_are_fibers() {
        let t = lcg_tensor([2, 3, 4], 5);
        let m2 = t.unfold(Mode::Two);
        assert_eq!(m2.shape(), (3, 8));
        // column (a, c) = (1, 2) zero-based → index 1*4+2
        for b in 0..3 {
            assert_eq!(m2[(b, 6)], t.at(1, b, 2));
        }
        let m3 = t.unfold(Mode::Three);
        for c in 0..4 {
            assert_eq!(m3[(c, 3 + 2)], t.at(1, 2, c));
        }
    }

    #[test]
    fn unfold_refold_round_trip_is_exact() {
        let t = lcg_tensor([3, 4, 5], 9);
        for mode in Mode::ALL {
            let back = Tensor3::refold(&t.unfold(mode), mode, t.dims()).unwrap();
            assert_eq!(back, t);
            assert_relative_eq!(t.unfold(mode).norm(), t.hs_norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_one_unfolds_to_rank_one() {
        let t = outer(&[1.0, 2.0, -1.0], &[0.5, 3.0], &[1.0, 1.0, 2.0, -4.0]).unwrap();
        for mode in Mode::ALL {
            let sv = t.unfold(mode).singular_values();
            assert!(sv[0] > 1.0);
            assert!(sv.iter().skip(1).all(|&s| s < 1e-12));
        }
    }

    #[test]
    fn mode_multiply_identity_and_zero() {
        let t = lcg_tensor([3, 2, 4], 1);
        for mode in Mode::ALL {
            let d = t.dims()[mode.axis()];
            assert_eq!(t.mode_multiply(&DMatrix::identity(d, d), mode).unwrap(), t);
            assert!(t.mode_multiply(&DMatrix::zeros(d, d), mode).unwrap().is_zero());
        }
        assert!(t.mode_multiply(&DMatrix::identity(5, 5), Mode::One).is_err());
    }

    #[test]
    fn mode_multiply_acts_on_factor() {
        let a = DMatrix::from_fn(3, 2, |i, j| (i + 2 * j) as f64 - 1.5);
        let b = DMatrix::from_fn(4, 2, |i, j| 0.3 * i as f64 - j as f64);
        let c = DMatrix::from_fn(2, 2, |i, j| 1.0 + (i * j) as f64);
        let m = DMatrix::from_fn(5, 3, |i, j| (i as f64 - j as f64) * 0.25);
        let x = from_factors(&FactorTriple::new(a.clone(), b.clone(), c.clone()).unwrap());
        let lhs = x.mode_multiply(&m, Mode::One).unwrap();
        let rhs = from_factors(&FactorTriple::new(&m * a, b, c).unwrap());
        assert_eq!(lhs.dims(), [5, 4, 2]);
        for (l, r) in lhs.values().iter().zip(rhs.values()) {
            assert_relative_eq!(l, r, epsilon = 1e-12);
        }
    }

    #[test]
    fn factor_triple_rejects_mismatched_columns() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(2, 1);
        assert!(FactorTriple::new(a.clone(), b, a.clone()).is_err());
        assert!(FactorTriple::new(DMatrix::zeros(2, 0), DMatrix::zeros(2, 0), DMatrix::zeros(2, 0)).is_err());
    }

    #[test]
    fn contractions_match_multilinear_form() {
        let t = lcg_tensor([3, 4, 2], 3);
        let u = [0.2, -1.0, 0.5];
        let v = [1.0, 0.0, 0.3, -0.7];
        let w = [0.6, 0.8];
        let full = t.inner(&outer(&u, &v, &w).unwrap()).unwrap();
        assert_relative_eq!(t.multilinear(&u, &v, &w), full, epsilon = 1e-12);
        assert_relative_eq!(dot(&t.contract_except(Mode::One, &v, &w), &u), full, epsilon = 1e-12);
        assert_relative_eq!(dot(&t.contract_except(Mode::Two, &u, &w), &v), full, epsilon = 1e-12);
    }
}
