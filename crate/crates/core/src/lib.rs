//! Index-modulation joint radar-communication (IM-JRC) simulator.
//!
//! A multi-carrier MIMO radar pulse carries data by the choice of which `K`
//! of `M` carriers are active and how the `L_R` transmit antennas are split
//! between them. This crate enumerates those codewords, designs max-min
//! distance codebooks by greedy elimination, applies constellation
//! randomization pre-scaling (random per-antenna complex gains chosen to
//! maximise the minimum distance), and measures bit error rate with an
//! exhaustive maximum-likelihood receiver over Rayleigh fading.
//!
//! The modules follow the processing chain:
//!
//! - [`params`]: scenario parameters and derived counts
//! - [`signal`]: steering weights, sampled waveforms, codeword matrices
//! - [`enumeration`]: canonical codeword indexing and bit labels
//! - [`codebook`]: distance matrices, MED, greedy pruning
//! - [`crps`]: pre-scaling factors and the five transmission schemes
//! - [`channel`]: Rayleigh fading, AWGN and per-trial random streams
//! - [`detector`]: ML detection (reference and Gram fast path)
//! - [`sim`]: Monte Carlo BER engine and SNR-gain measurement
//! - [`cli`]: configuration files, complexity model and result files

pub mod channel;
pub mod cli;
pub mod codebook;
pub mod crps;
pub mod detector;
pub mod enumeration;
mod error;
pub mod params;
pub mod signal;
pub mod sim;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type Cplx = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = ndarray::Array2<Cplx>;
