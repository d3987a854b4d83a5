//! Seeded randomness.
//!
//! Every stochastic routine takes an explicit `u64` seed and drives a
//! ChaCha8 stream (a counter-based generator with a platform-independent
//! output sequence). Independent trials use `derive_seed(master, t)`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::tensor::norm2;

/// Generator used throughout the crate.
pub type TrialRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finalizer applied to `master ⊕ golden·(t+1)`.
pub fn derive_seed(master: u64, t: u64) -> u64 {
    let mut z = master ^ t.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| gaussian(rng)).collect()
}

/// Uniform point on the unit sphere of `R^len`.
pub fn unit_vector(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    loop {
        let mut v = gaussian_vec(rng, len);
        let n = norm2(&v);
        if n > 1e-300 {
            v.iter_mut().for_each(|x| *x /= n);
            return v;
        }
    }
}

/// Haar-distributed `rows × cols` matrix with orthonormal columns.
pub fn orthonormal_columns(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    debug_assert!(cols <= rows);
    let g = DMatrix::from_fn(rows, cols, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    // Sign-fix against R's diagonal so the distribution is Haar.
    let r = qr.r();
    for j in 0..cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
