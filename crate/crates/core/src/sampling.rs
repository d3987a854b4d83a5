//! Observation sets, the iid resampling of an observed set, batch splitting,
//! and aspect ratios of index sets.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tensor::{check_dims, volume, Dims, IndexTriple};

/// A set of distinct grid positions, stored as sorted canonical offsets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleSet {
    dims: Dims,
    offsets: Vec<usize>,
}

impl SampleSet {
    /// Builds a set from 1-based triples; duplicates and out-of-range
    /// triples are rejected.
    pub fn from_indices(dims: Dims, indices: &[IndexTriple]) -> Result<Self> {
        check_dims(dims)?;
        let mut offsets = Vec::with_capacity(indices.len());
        for t in indices {
            t.check(dims)?;
            offsets.push(t.offset(dims));
        }
        offsets.sort_unstable();
        if let Some(w) = offsets.windows(2).find(|w| w[0] == w[1]) {
            let t = IndexTriple::from_offset(w[0], dims);
            return Err(Error::Shape(alloc::format!("duplicate index ({t})")));
        }
        Ok(SampleSet { dims, offsets })
    }

    pub(crate) fn from_sorted_offsets(dims: Dims, offsets: Vec<usize>) -> Self {
        debug_assert!(offsets.windows(2).all(|w| w[0] < w[1]));
        SampleSet { dims, offsets }
    }

    /// Every position of the grid.
    pub fn full(dims: Dims) -> Result<Self> {
        check_dims(dims)?;
        Ok(SampleSet { dims, offsets: (0..volume(dims)).collect() })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> impl Iterator<Item = IndexTriple> + '_ {
        self.offsets.iter().map(move |&o| IndexTriple::from_offset(o, self.dims))
    }

    pub fn contains(&self, t: IndexTriple) -> bool {
        t.in_range(self.dims) && self.offsets.binary_search(&t.offset(self.dims)).is_ok()
    }

    /// Indicator mask over canonical offsets.
    pub fn mask(&self) -> Vec<bool> {
        let mut m = vec![false; volume(self.dims)];
        for &o in &self.offsets {
            m[o] = true;
        }
        m
    }
}

/// Uniformly random `n`-subset of the grid, drawn without replacement.
pub fn sample_omega(dims: Dims, n: usize, seed: u64) -> Result<SampleSet> {
    check_dims(dims)?;
    let total = volume(dims);
    if n == 0 || n > total {
        return Err(Error::SampleSize { n, total });
    }
    let mut rng = rng_from_seed(seed);
    let mut chosen = if 4 * n < total {
        // Partial Fisher–Yates over a virtual identity permutation.
        let mut swaps: BTreeMap<usize, usize> = BTreeMap::new();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let j = rng.random_range(i..total);
            let vi = *swaps.get(&i).unwrap_or(&i);
            let vj = *swaps.get(&j).unwrap_or(&j);
            swaps.insert(j, vi);
            out.push(vj);
        }
        out
    } else {
        let mut perm: Vec<usize> = (0..total).collect();
        for i in 0..n {
            let j = rng.random_range(i..total);
            perm.swap(i, j);
        }
        perm.truncate(n);
        perm
    };
    chosen.sort_unstable();
    Ok(SampleSet::from_sorted_offsets(dims, chosen))
}

/// An iid-uniform sequence of grid positions built from an observed set.
#[derive(Clone, Debug, PartialEq)]
pub struct IidSequence {
    triples: Vec<IndexTriple>,
    source: SampleSet,
}

impl IidSequence {
    pub fn triples(&self) -> &[IndexTriple] {
        &self.triples
    }

    pub fn source(&self) -> &SampleSet {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Resamples `omega` into a sequence of `n` positions that is iid uniform on
/// the grid whenever `omega` itself is a uniform subset.
///
/// Step `i` draws from the already-used set `S` with probability `|S|/N`
/// and otherwise takes a fresh element of `omega ∖ S`. Once `omega` is
/// exhausted every draw comes from `S`.
pub fn iid_from_omega(omega: &SampleSet, n: usize, seed: u64) -> Result<IidSequence> {
    if omega.is_empty() {
        return Err(Error::SampleSize { n: 0, total: volume(omega.dims) });
    }
    if n == 0 {
        return Err(Error::Parameter("sequence length must be at least 1".into()));
    }
    let dims = omega.dims;
    let total = volume(dims) as f64;
    let mut rng = rng_from_seed(seed);
    // pool[..used] is S, pool[used..] is omega ∖ S.
    let mut pool: Vec<usize> = omega.offsets.clone();
    let mut used = 0usize;
    let mut triples = Vec::with_capacity(n);
    for _ in 0..n {
        let from_s = used > 0 && (used == pool.len() || rng.random::<f64>() < used as f64 / total);
        let offset = if from_s {
            pool[rng.random_range(0..used)]
        } else {
            let j = rng.random_range(used..pool.len());
            pool.swap(used, j);
            used += 1;
            pool[used - 1]
        };
        triples.push(IndexTriple::from_offset(offset, dims));
    }
    Ok(IidSequence { triples, source: omega.clone() })
}

/// `n2` contiguous batches of length `n1` taken from the front of a sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchPlan {
    pub n1: usize,
    pub n2: usize,
    pub batches: Vec<Vec<IndexTriple>>,
}

impl BatchPlan {
    /// A plan with no batches.
    pub fn empty() -> Self {
        BatchPlan { n1: 0, n2: 0, batches: Vec::new() }
    }

    /// Distinct positions used by the batches.
    pub fn support(&self, dims: Dims) -> Result<SampleSet> {
        let mut offsets: Vec<usize> =
            self.batches.iter().flatten().map(|t| t.offset(dims)).collect();
        offsets.sort_unstable();
        offsets.dedup();
        check_dims(dims)?;
        Ok(SampleSet::from_sorted_offsets(dims, offsets))
    }
}

pub fn split_batches(seq: &IidSequence, n1: usize, n2: usize) -> Result<BatchPlan> {
    let needed = n1.checked_mul(n2).ok_or_else(|| Error::Parameter("n1·n2 overflows".into()))?;
    if needed > seq.len() {
        return Err(Error::InsufficientLength { needed, available: seq.len() });
    }
    let batches = (0..n2).map(|k| seq.triples[k * n1..(k + 1) * n1].to_vec()).collect();
    Ok(BatchPlan { n1, n2, batches })
}

/// Largest number of points of `omega` on a single fiber, over all modes.
pub fn aspect_ratio(omega: &SampleSet) -> usize {
    let [d1, d2, d3] = omega.dims;
    let mut f1 = vec![0usize; d2 * d3];
    let mut f2 = vec![0usize; d1 * d3];
    let mut f3 = vec![0usize; d1 * d2];
    for &o in &omega.offsets {
        let c = o % d3;
        let b = (o / d3) % d2;
        let a = o / (d2 * d3);
        f1[b * d3 + c] += 1;
        f2[a * d3 + c] += 1;
        f3[a * d2 + b] += 1;
    }
    f1.into_iter().chain(f2).chain(f3).max().unwrap_or(0)
}

/// Smallest integer `ν` with `|A| ≤ ν|B||C|`, `|B| ≤ ν|A||C|` and
/// `|C| ≤ ν|A||B|`.
pub fn block_aspect(a: usize, b: usize, c: usize) -> Result<usize> {
    if a == 0 || b == 0 || c == 0 {
        return Err(Error::Parameter("block sizes must be positive".into()));
    }
    let ceil_div = |x: usize, y: usize| x.div_ceil(y);
    Ok(ceil_div(a, b * c).max(ceil_div(b, a * c)).max(ceil_div(c, a * b)))
}
