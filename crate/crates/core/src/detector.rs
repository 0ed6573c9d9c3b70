//! Maximum-likelihood detection with perfect CSI.
//!
//! Two paths compute the same exhaustive minimum over
//! `‖Y − H·A·X_i‖_F²`:
//!
//! - [`detect`] forms every hypothesis image explicitly and sums residuals.
//! - [`GramDetector`] expands the residual as
//!   `‖Y‖² − 2 Re⟨H X_i, Y⟩ + ‖H X_i‖²`, using that each codeword row is a
//!   gain times one of `M` waveforms. Image energies depend only on `H` and
//!   are reused across every SNR of a trial.

use crate::crps::TpsFactor;
use crate::signal::{waveform, waveform_gram, CodewordMatrix};
use crate::{CMatrix, Cplx, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionResult {
    pub decoded_rank: usize,
    pub metric: f64,
}

fn check_dims(y: &CMatrix, h: &CMatrix, x: &CMatrix) -> Result<()> {
    if h.ncols() != x.nrows() || y.nrows() != h.nrows() || y.ncols() != x.ncols() {
        return Err(Error::Dimension(format!(
            "Y {:?}, H {:?}, X {:?}",
            y.dim(),
            h.dim(),
            x.dim()
        )));
    }
    Ok(())
}

/// Exhaustive ML over `members` (in bit-label order), scaled by `tps` if given.
pub fn detect(
    y: &CMatrix,
    h: &CMatrix,
    members: &[CodewordMatrix],
    tps: Option<&TpsFactor>,
) -> Result<DetectionResult> {
    let images = members
        .iter()
        .map(|m| {
            check_dims(y, h, &m.matrix)?;
            Ok(match tps {
                Some(t) => h.dot(&m.row_scaled(&t.alpha).matrix),
                None => h.dot(&m.matrix),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    detect_images(y, &images)
}

/// Exhaustive ML given precomputed hypothesis images `H·A·X_i`.
pub fn detect_images(y: &CMatrix, images: &[CMatrix]) -> Result<DetectionResult> {
    let mut best: Option<DetectionResult> = None;
    for (rank, img) in images.iter().enumerate() {
        if img.dim() != y.dim() {
            return Err(Error::Dimension(format!(
                "image {:?} vs Y {:?}",
                img.dim(),
                y.dim()
            )));
        }
        let metric: f64 = y.iter().zip(img).map(|(a, b)| (a - b).norm_sqr()).sum();
        if best.is_none_or(|b| metric < b.metric) {
            best = Some(DetectionResult {
                decoded_rank: rank,
                metric,
            });
        }
    }
    best.ok_or_else(|| Error::TooFewMembers { need: 1, got: 0 })
}

/// Fast ML detector for structured codewords.
#[derive(Debug, Clone)]
pub struct GramDetector {
    num_freqs: usize,
    rx: usize,
    tx: usize,
    samples: usize,
    /// `conj(Φ_c[t])`, row-major `M × L_T`.
    conj_waves: Vec<Cplx>,
    /// `R[a][b] = Σ_t conj(Φ_a[t]) Φ_b[t]`, flattened.
    gram: Vec<Cplx>,
    /// Per hypothesis: frequency of each antenna row.
    freqs: Vec<Vec<usize>>,
    /// Per hypothesis: complex gain of each row.
    gains: Vec<Vec<Cplx>>,
}

/// Per-channel state: image energies `‖H X_i‖²` and `H` itself.
#[derive(Debug, Clone)]
pub struct PreparedChannel {
    h: CMatrix,
    energies: Vec<f64>,
}

impl PreparedChannel {
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

impl GramDetector {
    /// `transmitted` are the matrices actually sent (pre-scaling applied).
    pub fn new(transmitted: &[CodewordMatrix], num_freqs: usize, rx: usize) -> Result<Self> {
        let first = transmitted
            .first()
            .ok_or(Error::TooFewMembers { need: 1, got: 0 })?;
        let (tx, samples) = first.matrix.dim();
        let mut conj_waves = Vec::with_capacity(num_freqs * samples);
        for c in 0..num_freqs {
            conj_waves.extend(waveform(c, num_freqs, samples)?.iter().map(|z| z.conj()));
        }
        let gram = waveform_gram(num_freqs, samples).into_iter().flatten().collect();
        let mut freqs = Vec::with_capacity(transmitted.len());
        let mut gains = Vec::with_capacity(transmitted.len());
        for m in transmitted {
            if m.matrix.dim() != (tx, samples) || m.row_freqs.len() != tx {
                return Err(Error::Dimension("hypotheses differ in shape".into()));
            }
            if let Some(&c) = m.row_freqs.iter().find(|&&c| c >= num_freqs) {
                return Err(Error::FreqIndex { index: c, m: num_freqs });
            }
            freqs.push(m.row_freqs.clone());
            gains.push((0..tx).map(|l| m.row_gain(l)).collect());
        }
        Ok(Self {
            num_freqs,
            rx,
            tx,
            samples,
            conj_waves,
            gram,
            freqs,
            gains,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Computes image energies for one channel realization.
    pub fn prepare(&self, h: &CMatrix) -> Result<PreparedChannel> {
        if h.dim() != (self.rx, self.tx) {
            return Err(Error::Dimension(format!(
                "channel {:?}, expected {:?}",
                h.dim(),
                (self.rx, self.tx)
            )));
        }
        let tx = self.tx;
        // G = H^H H
        let mut g = vec![Cplx::new(0.0, 0.0); tx * tx];
        for l in 0..tx {
            for m in l..tx {
                let v: Cplx = h.column(l).iter().zip(h.column(m)).map(|(a, b)| a.conj() * b).sum();
                g[l * tx + m] = v;
                g[m * tx + l] = v.conj();
            }
        }
        let nf = self.num_freqs;
        let energies = self
            .freqs
            .iter()
            .zip(&self.gains)
            .map(|(f, gain)| {
                let mut e = 0.0;
                for l in 0..tx {
                    let gl = gain[l].conj();
                    e += gain[l].norm_sqr() * g[l * tx + l].re * self.gram[f[l] * nf + f[l]].re;
                    for m in l + 1..tx {
                        e += 2.0 * (gl * gain[m] * g[l * tx + m] * self.gram[f[l] * nf + f[m]]).re;
                    }
                }
                e
            })
            .collect();
        Ok(PreparedChannel {
            h: h.clone(),
            energies,
        })
    }

    /// Detects one received block against a prepared channel.
    pub fn detect(&self, prepared: &PreparedChannel, y: &CMatrix) -> Result<DetectionResult> {
        if y.dim() != (self.rx, self.samples) {
            return Err(Error::Dimension(format!(
                "Y {:?}, expected {:?}",
                y.dim(),
                (self.rx, self.samples)
            )));
        }
        let (nf, tx, ns) = (self.num_freqs, self.tx, self.samples);
        // Z[r][c] = Σ_t conj(Φ_c[t]) Y[r,t]
        let mut z = vec![Cplx::new(0.0, 0.0); self.rx * nf];
        for (r, row) in y.rows().into_iter().enumerate() {
            for c in 0..nf {
                let w = &self.conj_waves[c * ns..(c + 1) * ns];
                z[r * nf + c] = row.iter().zip(w).map(|(a, b)| a * b).sum();
            }
        }
        // U[l][c] = Σ_r conj(H[r,l]) Z[r][c]
        let h = &prepared.h;
        let mut u = vec![Cplx::new(0.0, 0.0); tx * nf];
        for l in 0..tx {
            for c in 0..nf {
                u[l * nf + c] = (0..self.rx).map(|r| h[[r, l]].conj() * z[r * nf + c]).sum();
            }
        }
        let y_energy: f64 = y.iter().map(|v| v.norm_sqr()).sum();

        let mut best = DetectionResult {
            decoded_rank: 0,
            metric: f64::INFINITY,
        };
        for (rank, ((f, gain), e)) in self
            .freqs
            .iter()
            .zip(&self.gains)
            .zip(&prepared.energies)
            .enumerate()
        {
            let corr: f64 = (0..tx).map(|l| (gain[l].conj() * u[l * nf + f[l]]).re).sum();
            let metric = y_energy - 2.0 * corr + e;
            if metric < best.metric {
                best = DetectionResult {
                    decoded_rank: rank,
                    metric,
                };
            }
        }
        Ok(best)
    }
}
