//! Canonical enumeration of frequency subsets, antenna allocations and
//! composite codewords, plus the natural-binary bit labelling.

use std::collections::HashSet;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::params::{DerivedParams, SystemParams, MAX_CODEWORDS};
use crate::signal::{synthesize_codeword, CodewordMatrix};
use crate::{Error, Result};

/// All `K`-subsets of `0..M`, each ascending, in lexicographic order.
pub fn enumerate_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut combo: Vec<usize> = (0..k).collect();
    loop {
        out.push(combo.clone());
        // rightmost position that can still advance
        let Some(pos) = (0..k).rev().find(|&i| combo[i] < m - k + i) else {
            return out;
        };
        combo[pos] += 1;
        for i in pos + 1..k {
            combo[i] = combo[i - 1] + 1;
        }
    }
}

/// All slot maps in `{0..K}^{L_R}` using every slot exactly `L_R/K` times,
/// in lexicographic order.
pub fn enumerate_allocations(l_r: usize, k: usize) -> Vec<Vec<usize>> {
    let l_k = l_r / k;
    let mut remaining = vec![l_k; k];
    let mut current = Vec::with_capacity(l_r);
    let mut out = Vec::new();
    fn recurse(rem: &mut [usize], cur: &mut Vec<usize>, len: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for s in 0..rem.len() {
            if rem[s] > 0 {
                rem[s] -= 1;
                cur.push(s);
                recurse(rem, cur, len, out);
                cur.pop();
                rem[s] += 1;
            }
        }
    }
    recurse(&mut remaining, &mut current, l_r, &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodewordId {
    pub global_index: usize,
    pub subset_index: usize,
    pub allocation_index: usize,
}

#[derive(Debug, Clone)]
pub struct CodewordEntry {
    pub id: CodewordId,
    pub freq_subset: Vec<usize>,
    pub allocation: Vec<usize>,
    pub codeword: CodewordMatrix,
}

/// Every codeword of a configuration, ordered by global index
/// `subset_index · |P| + allocation_index`.
#[derive(Debug, Clone)]
pub struct CodewordTable {
    pub entries: Vec<CodewordEntry>,
}

impl CodewordTable {
    pub fn build(params: &SystemParams, derived: &DerivedParams) -> Result<Self> {
        if derived.total_codewords > MAX_CODEWORDS {
            return Err(Error::param(
                "M/K/L_R",
                format!(
                    "{} codewords exceed the table limit of {MAX_CODEWORDS}",
                    derived.total_codewords
                ),
            ));
        }
        let subsets = enumerate_subsets(params.num_freqs, params.num_active);
        let allocations = enumerate_allocations(params.tx_antennas, params.num_active);
        debug_assert_eq!(
            (subsets.len() * allocations.len()) as u64,
            derived.total_codewords
        );

        let mut entries = Vec::with_capacity(subsets.len() * allocations.len());
        for (si, subset) in subsets.iter().enumerate() {
            for (ai, alloc) in allocations.iter().enumerate() {
                entries.push(CodewordEntry {
                    id: CodewordId {
                        global_index: si * allocations.len() + ai,
                        subset_index: si,
                        allocation_index: ai,
                    },
                    freq_subset: subset.clone(),
                    allocation: alloc.clone(),
                    codeword: synthesize_codeword(subset, alloc, params, derived)?,
                });
            }
        }

        // Matrices are distinct iff their per-antenna frequency strings are.
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.codeword.row_freqs.as_slice()) {
                return Err(Error::Codeword(format!(
                    "codeword {} duplicates an earlier one",
                    e.id.global_index
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn codeword(&self, global_index: usize) -> &CodewordMatrix {
        &self.entries[global_index].codeword
    }

    /// Audit CSV: `global_index,subset_index,allocation_index,subset,allocation`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["global_index", "subset_index", "allocation_index", "subset", "allocation"])?;
        for e in &self.entries {
            w.write_record([
                e.id.global_index.to_string(),
                e.id.subset_index.to_string(),
                e.id.allocation_index.to_string(),
                join(&e.freq_subset, " "),
                join(&e.allocation, ""),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn join(v: &[usize], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Most-significant-bit-first word to its natural binary rank.
pub fn bits_to_rank(bits: &[bool]) -> Result<u64> {
    if bits.len() > 63 {
        return Err(Error::Rank {
            rank: u64::MAX,
            bits: bits.len() as u32,
        });
    }
    Ok(bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64))
}

/// Rank to a `bits`-long MSB-first word.
pub fn rank_to_bits(rank: u64, bits: u32) -> Result<Vec<bool>> {
    if bits > 63 || rank >= 1u64 << bits {
        return Err(Error::Rank { rank, bits });
    }
    Ok((0..bits).rev().map(|i| (rank >> i) & 1 == 1).collect())
}
