//! Pairwise distances, minimum Euclidean distance (MED) and the greedy
//! worst-codeword elimination that selects the valid codebook.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::crps::Scheme;
use crate::signal::CodewordMatrix;
use crate::{CMatrix, Cplx, Error, Result};

/// Relative tolerance under which two distances count as tied.
pub const TIE_RTOL: f64 = 1e-9;

/// Symmetric matrix of squared Frobenius distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds from a symmetric distance function; only `i < j` is queried.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let mut data = vec![0.0; n * n];
        data.par_chunks_mut(n.max(1)).enumerate().for_each(|(i, row)| {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = match i.cmp(&j) {
                    std::cmp::Ordering::Less => f(i, j),
                    std::cmp::Ordering::Greater => f(j, i),
                    std::cmp::Ordering::Equal => 0.0,
                };
            }
        });
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// `‖A − B‖_F²` summed elementwise.
pub fn frobenius_dist_sq(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum()
}

/// Exact pairwise squared distances between arbitrary matrices.
pub fn distance_matrix(matrices: &[&CMatrix]) -> DistanceMatrix {
    DistanceMatrix::from_fn(matrices.len(), |i, j| frobenius_dist_sq(matrices[i], matrices[j]))
}

/// Per-row squared distances between structured codewords.
///
/// Row `l` of a codeword is `g_l · Φ_{c_l}`, so
/// `‖g Φ_a − h Φ_b‖² = |g|² R_aa + |h|² R_bb − 2 Re(conj(g) h R_ab)`
/// with `R` the waveform Gram matrix. This lets row-scaled distance
/// matrices be formed without touching the samples.
pub struct RowDistances<'a> {
    codewords: Vec<&'a CodewordMatrix>,
    gram: Vec<Vec<Cplx>>,
}

impl<'a> RowDistances<'a> {
    pub fn new(codewords: Vec<&'a CodewordMatrix>, gram: Vec<Vec<Cplx>>) -> Self {
        Self { codewords, gram }
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// `Σ_l weights[l] · ‖X_i[l,:] − X_j[l,:]‖²`.
    #[inline]
    pub fn weighted(&self, i: usize, j: usize, weights: &[f64]) -> f64 {
        let (a, b) = (self.codewords[i], self.codewords[j]);
        let mut acc = 0.0;
        for (l, w) in weights.iter().enumerate() {
            let (ca, cb) = (a.row_freqs[l], b.row_freqs[l]);
            let (ga, gb) = (a.row_gain(l), b.row_gain(l));
            let d = ga.norm_sqr() * self.gram[ca][ca].re + gb.norm_sqr() * self.gram[cb][cb].re
                - 2.0 * (ga.conj() * gb * self.gram[ca][cb]).re;
            acc += w * d;
        }
        acc
    }

    pub fn matrix(&self, weights: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(self.len(), |i, j| self.weighted(i, j, weights))
    }

    /// MED of the whole set under row weights, without materializing a matrix.
    pub fn min_weighted(&self, weights: &[f64]) -> f64 {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                (i + 1..self.len())
                    .map(|j| self.weighted(i, j, weights))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }
}

/// Minimum distance over `members` and the lexicographically smallest pair
/// (by position in `members`) achieving it within [`TIE_RTOL`].
pub fn med(dm: &DistanceMatrix, members: &[usize]) -> Result<(f64, (usize, usize))> {
    if members.len() < 2 {
        return Err(Error::TooFewMembers {
            need: 2,
            got: members.len(),
        });
    }
    let mut best = f64::INFINITY;
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            best = best.min(dm.get(i, j));
        }
    }
    let cut = best + TIE_RTOL * best.abs();
    for (a, &i) in members.iter().enumerate() {
        for (b, &j) in members.iter().enumerate().skip(a + 1) {
            if dm.get(i, j) <= cut {
                return Ok((best, (a, b)));
            }
        }
    }
    unreachable!("minimum is attained by some pair")
}

/// Result of [`greedy_prune`].
#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    /// Surviving indices, ascending.
    pub survivors: Vec<usize>,
    /// MED before each elimination, then after the last one.
    pub med_trace: Vec<f64>,
    /// Eliminated indices in order of removal.
    pub eliminated: Vec<usize>,
}

impl PruneOutcome {
    pub fn med(&self) -> f64 {
        *self.med_trace.last().expect("trace is never empty")
    }
}

/// Removes codewords one at a time until `target` remain.
///
/// Each step takes the MED pair; the endpoint whose nearest other survivor
/// (partner excluded) is closer gets eliminated. Ties on the pair go to the
/// smallest `(i, j)`, ties on the second distance remove the larger index.
pub fn greedy_prune(dm: &DistanceMatrix, target: usize) -> Result<PruneOutcome> {
    let n = dm.len();
    if target < 2 {
        return Err(Error::TooFewMembers { need: 2, got: target });
    }
    if target > n {
        return Err(Error::TooFewMembers { need: target, got: n });
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let mut med_trace = Vec::with_capacity(n - target + 1);
    let mut eliminated = Vec::with_capacity(n - target);

    while alive.len() > target {
        let (value, (a, b)) = med(dm, &alive)?;
        med_trace.push(value);
        let (i, j) = (alive[a], alive[b]);
        let second = |p: usize, partner: usize| {
            alive
                .iter()
                .filter(|&&k| k != p && k != partner)
                .map(|&k| dm.get(p, k))
                .fold(f64::INFINITY, f64::min)
        };
        let (si, sj) = (second(i, j), second(j, i));
        // i < j; i goes only when j's neighbourhood is clearly roomier
        let drop = if sj > si + TIE_RTOL * si.abs() { a } else { b };
        eliminated.push(alive.remove(drop));
    }
    med_trace.push(med(dm, &alive)?.0);
    Ok(PruneOutcome {
        survivors: alive,
        med_trace,
        eliminated,
    })
}

/// A valid codeword set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// Global codeword indices, strictly increasing; position = bit label.
    pub member_ids: Vec<usize>,
    /// Squared MED over members in the transmitted (possibly pre-scaled) domain.
    pub med: f64,
    pub provenance: Scheme,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }
}
