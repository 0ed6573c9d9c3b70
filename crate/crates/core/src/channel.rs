//! Rayleigh flat fading, AWGN and the counter-derived random streams that
//! make every Monte Carlo trial reproducible on its own.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{CMatrix, Cplx, Error, Result};

/// Independent purposes a trial draws randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamTag {
    Bits = 0,
    Channel = 1,
    Noise = 2,
    Tps = 3,
    DesignChannel = 4,
}

/// Random stream keyed by `(master_seed, trial, tag)`.
pub fn substream(master_seed: u64, trial: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    key[16..24].copy_from_slice(&(tag as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// One `CN(0, 1)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Cplx {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Cplx::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    // row-major fill keeps the draw order independent of ndarray internals
    let data: Vec<Cplx> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    Array2::from_shape_vec((rows, cols), data).expect("shape matches length")
}

/// `L_C × L_R` matrix of iid `CN(0, 1)` fading coefficients.
pub fn draw_channel<R: Rng + ?Sized>(rx: usize, tx: usize, rng: &mut R) -> CMatrix {
    gaussian_matrix(rx, tx, rng)
}

/// Unit-variance complex noise; scale by `sqrt(sigma2)` before use.
pub fn draw_unit_noise<R: Rng + ?Sized>(rx: usize, samples: usize, rng: &mut R) -> CMatrix {
    gaussian_matrix(rx, samples, rng)
}

/// Noise variance per complex entry for a given SNR in dB.
///
/// Codewords carry unit power per sample and fading has unit variance, so
/// the mean received signal power per entry is 1 and `SNR = 1 / σ²`.
pub fn snr_to_sigma2(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// `Y = H·X + sqrt(σ²)·N`.
pub fn receive_with_noise(x: &CMatrix, h: &CMatrix, sigma2: f64, unit_noise: &CMatrix) -> Result<CMatrix> {
    if h.ncols() != x.nrows() {
        return Err(Error::Dimension(format!(
            "channel is {}x{} but codeword has {} rows",
            h.nrows(),
            h.ncols(),
            x.nrows()
        )));
    }
    if unit_noise.dim() != (h.nrows(), x.ncols()) {
        return Err(Error::Dimension(format!(
            "noise is {:?}, expected {:?}",
            unit_noise.dim(),
            (h.nrows(), x.ncols())
        )));
    }
    let scale = sigma2.sqrt();
    let mut y = h.dot(x);
    if scale > 0.0 {
        y.zip_mut_with(unit_noise, |a, n| *a += n * scale);
    }
    Ok(y)
}

/// `Y = H·X + N` with fresh noise from `rng`.
pub fn receive<R: Rng + ?Sized>(x: &CMatrix, h: &CMatrix, sigma2: f64, rng: &mut R) -> Result<CMatrix> {
    let noise = draw_unit_noise(h.nrows(), x.ncols(), rng);
    receive_with_noise(x, h, sigma2, &noise)
}
