//! Constellation randomization pre-scaling (CRPS).
//!
//! A set of `D` random per-antenna complex gains is drawn once per scenario.
//! Each candidate scales the rows of every codeword; the candidate that
//! leaves the largest minimum distance over the active set is kept and
//! shared with the receiver. Candidate 0 is always the all-ones vector, so
//! selection can never lower the MED.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, substream, StreamTag};
use crate::codebook::{distance_matrix, greedy_prune, Codebook, DistanceMatrix, RowDistances};
use crate::enumeration::CodewordTable;
use crate::params::{DerivedParams, SystemParams};
use crate::signal::{waveform_gram, CodewordMatrix};
use crate::{CMatrix, Cplx, Error, Result};

/// The transmission schemes compared in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// First `2^B` codewords in canonical order, no pre-scaling.
    Baseline,
    /// Greedy pruning only.
    CodebookOnly,
    /// Pre-scaling chosen over the baseline set.
    CrpsOnly,
    /// Greedy pruning, then pre-scaling over the survivors.
    CodebookThenCrps,
    /// Pre-scaling over every codeword, then pruning in the scaled domain.
    CrpsThenCodebook,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Baseline,
        Scheme::CodebookOnly,
        Scheme::CrpsOnly,
        Scheme::CodebookThenCrps,
        Scheme::CrpsThenCodebook,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Baseline => "baseline",
            Scheme::CodebookOnly => "codebook_only",
            Scheme::CrpsOnly => "crps_only",
            Scheme::CodebookThenCrps => "codebook_then_crps",
            Scheme::CrpsThenCodebook => "crps_then_codebook",
        }
    }

    pub fn uses_crps(self) -> bool {
        matches!(
            self,
            Scheme::CrpsOnly | Scheme::CodebookThenCrps | Scheme::CrpsThenCodebook
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s.trim())
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

/// One pre-scaling candidate `α_d`, normalized so `Σ|α_l|² = L_R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TpsFactor {
    pub d_index: usize,
    pub alpha: Vec<Cplx>,
}

impl TpsFactor {
    pub fn identity(l_r: usize) -> Self {
        Self {
            d_index: 0,
            alpha: vec![Cplx::new(1.0, 0.0); l_r],
        }
    }

    /// `|α_l|²`, the factor each row's squared distance is multiplied by.
    pub fn power_weights(&self) -> Vec<f64> {
        self.alpha.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn energy(&self) -> f64 {
        self.alpha.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Draws `D` candidates; candidate 0 is the identity, the rest are iid
/// `CN(0, 1)` vectors rescaled to total power `L_R`.
pub fn generate_tps<R: Rng + ?Sized>(count: usize, l_r: usize, rng: &mut R) -> Vec<TpsFactor> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(TpsFactor::identity(l_r));
    for d_index in 1..count {
        let raw: Vec<Cplx> = (0..l_r).map(|_| complex_gaussian(rng)).collect();
        let power: f64 = raw.iter().map(|a| a.norm_sqr()).sum();
        let scale = (l_r as f64 / power).sqrt();
        out.push(TpsFactor {
            d_index,
            alpha: raw.into_iter().map(|a| a * scale).collect(),
        });
    }
    out
}

/// Candidate set for a scenario, drawn from its dedicated stream.
pub fn scenario_tps(params: &SystemParams) -> Vec<TpsFactor> {
    let mut rng = substream(params.master_seed, 0, StreamTag::Tps);
    generate_tps(params.tps_candidates, params.tx_antennas, &mut rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TpsSelection {
    pub factor: TpsFactor,
    /// MED of the member set with the identity factor.
    pub med_before: f64,
    pub med_after: f64,
    /// MED under each candidate, by `d_index`.
    pub candidate_meds: Vec<f64>,
}

fn select_over(candidates: &[TpsFactor], rows: &RowDistances<'_>) -> Result<TpsSelection> {
    if rows.len() < 2 {
        return Err(Error::TooFewMembers {
            need: 2,
            got: rows.len(),
        });
    }
    let first = candidates
        .first()
        .ok_or_else(|| Error::param("D", "no pre-scaling candidates"))?;
    let l_r = first.alpha.len();
    let candidate_meds: Vec<f64> = candidates
        .iter()
        .map(|c| rows.min_weighted(&c.power_weights()))
        .collect();
    let mut best = 0;
    for (d, &v) in candidate_meds.iter().enumerate() {
        if v > candidate_meds[best] {
            best = d;
        }
    }
    Ok(TpsSelection {
        factor: candidates[best].clone(),
        med_before: rows.min_weighted(&vec![1.0; l_r]),
        med_after: candidate_meds[best],
        candidate_meds,
    })
}

/// Picks the candidate maximizing the MED of `members` after row scaling.
/// Ties go to the smallest `d_index`.
pub fn select_tps(
    candidates: &[TpsFactor],
    members: &[&CodewordMatrix],
    num_freqs: usize,
) -> Result<TpsSelection> {
    let samples = members.first().map_or(0, |m| m.matrix.ncols());
    let rows = RowDistances::new(members.to_vec(), waveform_gram(num_freqs, samples));
    select_over(candidates, &rows)
}

/// Options that change how a scheme is designed.
#[derive(Debug, Clone, Default)]
pub struct DesignOptions {
    /// Prune on distances between `H·A·X` images for this fixed channel
    /// instead of transmit-domain distances.
    pub design_channel: Option<CMatrix>,
}

impl DesignOptions {
    /// Channel-aware design with a channel drawn from the scenario seed.
    pub fn channel_aware(params: &SystemParams) -> Self {
        let mut rng = substream(params.master_seed, 0, StreamTag::DesignChannel);
        Self {
            design_channel: Some(crate::channel::draw_channel(
                params.rx_antennas,
                params.tx_antennas,
                &mut rng,
            )),
        }
    }
}

/// A designed scheme: the active codebook and its pre-scaling factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeDesign {
    pub scheme: Scheme,
    pub codebook: Codebook,
    /// Present exactly when the scheme uses CRPS.
    pub tps: Option<TpsFactor>,
    /// Number of greedy eliminations performed.
    pub eliminated: usize,
}

impl SchemeDesign {
    /// Transmitted matrices, pre-scaling applied, in bit-label order.
    pub fn transmit_matrices(&self, table: &CodewordTable) -> Vec<CodewordMatrix> {
        self.codebook
            .member_ids
            .iter()
            .map(|&g| match &self.tps {
                Some(t) => table.codeword(g).row_scaled(&t.alpha),
                None => table.codeword(g).clone(),
            })
            .collect()
    }
}

/// Designs one scheme from the full codeword table.
pub fn build_scheme(
    scheme: Scheme,
    table: &CodewordTable,
    params: &SystemParams,
    derived: &DerivedParams,
    candidates: &[TpsFactor],
    options: &DesignOptions,
) -> Result<SchemeDesign> {
    let target = derived.codebook_size();
    let l_r = params.tx_antennas;
    let gram = waveform_gram(params.num_freqs, derived.samples_per_pulse);
    let all: Vec<&CodewordMatrix> = table.entries.iter().map(|e| &e.codeword).collect();
    let ones = vec![1.0; l_r];

    let rows_for = |ids: &[usize]| {
        RowDistances::new(ids.iter().map(|&g| all[g]).collect(), gram.clone())
    };
    let prune = |alpha: Option<&TpsFactor>| -> Result<(Vec<usize>, usize)> {
        let dm: DistanceMatrix = match &options.design_channel {
            Some(h) => {
                let images: Vec<CMatrix> = all
                    .iter()
                    .map(|c| match alpha {
                        Some(t) => h.dot(&c.row_scaled(&t.alpha).matrix),
                        None => h.dot(&c.matrix),
                    })
                    .collect();
                distance_matrix(&images.iter().collect::<Vec<_>>())
            }
            None => {
                let w = alpha.map_or_else(|| ones.clone(), TpsFactor::power_weights);
                RowDistances::new(all.clone(), gram.clone()).matrix(&w)
            }
        };
        let out = greedy_prune(&dm, target)?;
        Ok((out.survivors, out.eliminated.len()))
    };

    let baseline: Vec<usize> = (0..target).collect();
    let (member_ids, tps, eliminated) = match scheme {
        Scheme::Baseline => (baseline, None, 0),
        Scheme::CodebookOnly => {
            let (ids, q) = prune(None)?;
            (ids, None, q)
        }
        Scheme::CrpsOnly => {
            let sel = select_over(candidates, &rows_for(&baseline))?;
            (baseline, Some(sel.factor), 0)
        }
        Scheme::CodebookThenCrps => {
            let (ids, q) = prune(None)?;
            let sel = select_over(candidates, &rows_for(&ids))?;
            (ids, Some(sel.factor), q)
        }
        Scheme::CrpsThenCodebook => {
            let every: Vec<usize> = (0..all.len()).collect();
            let sel = select_over(candidates, &rows_for(&every))?;
            let (ids, q) = prune(Some(&sel.factor))?;
            (ids, Some(sel.factor), q)
        }
    };

    let weights = tps.as_ref().map_or_else(|| ones.clone(), TpsFactor::power_weights);
    let med = rows_for(&member_ids).min_weighted(&weights);
    Ok(SchemeDesign {
        scheme,
        codebook: Codebook {
            member_ids,
            med,
            provenance: scheme,
        },
        tps,
        eliminated,
    })
}
