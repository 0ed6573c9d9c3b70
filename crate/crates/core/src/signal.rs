//! Steering weights, sampled baseband waveforms and codeword matrices.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::params::{DerivedParams, SystemParams, SPEED_OF_LIGHT};
use crate::{CMatrix, Cplx, Error, Result};

/// Per-antenna beam steering weights `w_l`.
pub fn steering(params: &SystemParams, derived: &DerivedParams) -> Vec<Cplx> {
    let d = derived.antenna_spacing_m;
    (0..params.tx_antennas)
        .map(|l| {
            let phase =
                2.0 * PI * params.carrier_hz * l as f64 * d * params.theta.sin() / SPEED_OF_LIGHT;
            Cplx::from_polar(1.0, phase)
        })
        .collect()
}

/// Down-converted, sampled waveform for frequency index `c`:
/// `exp(j 2π c i / M)` for `i = 0..L_T`.
pub fn waveform(c: usize, num_freqs: usize, samples: usize) -> Result<Vec<Cplx>> {
    if c >= num_freqs {
        return Err(Error::FreqIndex {
            index: c,
            m: num_freqs,
        });
    }
    // reduce c*i mod M first so the phase stays exact on the period
    Ok((0..samples)
        .map(|i| Cplx::from_polar(1.0, 2.0 * PI * ((c * i) % num_freqs) as f64 / num_freqs as f64))
        .collect())
}

/// Matrix of waveform inner products `R[a][b] = Σ_t conj(Φ_a[t]) Φ_b[t]`.
pub fn waveform_gram(num_freqs: usize, samples: usize) -> Vec<Vec<Cplx>> {
    let waves: Vec<Vec<Cplx>> = (0..num_freqs)
        .map(|c| waveform(c, num_freqs, samples).expect("index in range"))
        .collect();
    waves
        .iter()
        .map(|a| {
            waves
                .iter()
                .map(|b| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum())
                .collect()
        })
        .collect()
}

/// A synthesized `L_R × L_T` codeword.
///
/// Row `l` is `norm_scale · w_l · Φ_{row_freqs[l]}`, so the row gain is
/// recoverable as `matrix[[l, 0]]` (every waveform starts at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct CodewordMatrix {
    pub matrix: CMatrix,
    pub norm_scale: f64,
    /// Frequency index transmitted by each antenna.
    pub row_freqs: Vec<usize>,
}

impl CodewordMatrix {
    /// Complex gain applied to row `l` (steering weight times scale).
    pub fn row_gain(&self, l: usize) -> Cplx {
        self.matrix[[l, 0]]
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Copy with every row multiplied by `alpha[l]`.
    pub fn row_scaled(&self, alpha: &[Cplx]) -> CodewordMatrix {
        let mut matrix = self.matrix.clone();
        for (mut row, a) in matrix.rows_mut().into_iter().zip(alpha) {
            row.mapv_inplace(|z| z * a);
        }
        CodewordMatrix {
            matrix,
            norm_scale: self.norm_scale,
            row_freqs: self.row_freqs.clone(),
        }
    }
}

/// Builds the codeword for one frequency subset and antenna allocation.
///
/// `allocation[l]` is the slot (index into `freq_subset`) used by antenna `l`.
pub fn synthesize_codeword(
    freq_subset: &[usize],
    allocation: &[usize],
    params: &SystemParams,
    derived: &DerivedParams,
) -> Result<CodewordMatrix> {
    let k = params.num_active;
    let l_r = params.tx_antennas;
    if freq_subset.len() != k {
        return Err(Error::Codeword(format!(
            "expected {k} frequencies, got {}",
            freq_subset.len()
        )));
    }
    if freq_subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Codeword(format!(
            "frequency subset {freq_subset:?} must be strictly increasing"
        )));
    }
    if allocation.len() != l_r {
        return Err(Error::Codeword(format!(
            "allocation has {} entries for {l_r} antennas",
            allocation.len()
        )));
    }
    let mut per_slot = vec![0usize; k];
    for &s in allocation {
        if s >= k {
            return Err(Error::Codeword(format!("slot {s} out of range 0..{k}")));
        }
        per_slot[s] += 1;
    }
    if per_slot.iter().any(|&n| n != derived.antennas_per_freq) {
        return Err(Error::Codeword(format!(
            "unbalanced allocation {allocation:?}: slot counts {per_slot:?}"
        )));
    }

    let samples = derived.samples_per_pulse;
    let waves = freq_subset
        .iter()
        .map(|&c| waveform(c, params.num_freqs, samples))
        .collect::<Result<Vec<_>>>()?;
    let w = steering(params, derived);
    let norm_scale = 1.0 / (l_r as f64).sqrt();

    let matrix = Array2::from_shape_fn((l_r, samples), |(l, i)| {
        w[l] * waves[allocation[l]][i] * norm_scale
    });
    Ok(CodewordMatrix {
        matrix,
        norm_scale,
        row_freqs: allocation.iter().map(|&s| freq_subset[s]).collect(),
    })
}
