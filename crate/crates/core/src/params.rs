//! Scenario parameters and the quantities derived from them.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Speed of light used for the antenna spacing, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Largest codeword count for which full tables are materialized.
pub const MAX_CODEWORDS: u64 = 1_000_000;

/// Validated scenario parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Number of available carrier frequencies `M`.
    pub num_freqs: usize,
    /// Frequencies active per pulse `K`.
    pub num_active: usize,
    /// Transmit antennas `L_R`.
    pub tx_antennas: usize,
    /// Receive antennas `L_C`.
    pub rx_antennas: usize,
    /// Initial carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Carrier step, Hz.
    pub freq_step_hz: f64,
    /// Beam pointing angle, radians.
    pub theta: f64,
    /// Pulse width, s.
    pub pulse_width_s: f64,
    /// Pulse repetition interval, s.
    pub pri_s: f64,
    /// Number of pre-scaling candidates `D`.
    pub tps_candidates: usize,
    pub master_seed: u64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            num_freqs: 7,
            num_active: 2,
            tx_antennas: 6,
            rx_antennas: 4,
            carrier_hz: 1.9e9,
            freq_step_hz: 10e6,
            theta: std::f64::consts::FRAC_PI_4,
            pulse_width_s: 1e-6,
            pri_s: 2e-6,
            tps_candidates: 100,
            master_seed: 0x1A_2B_3C_4D,
        }
    }
}

/// Quantities computed from [`SystemParams`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// Antennas per active frequency `L_K = L_R / K`.
    pub antennas_per_freq: usize,
    /// Sampling period `T_s = 1 / (M Δf)`, s.
    pub sample_period_s: f64,
    /// Samples per pulse `L_T`.
    pub samples_per_pulse: usize,
    /// Number of frequency subsets `|ζ|`.
    pub num_subsets: u64,
    /// Number of antenna allocations `|P|`.
    pub num_allocations: u64,
    /// `|ζ|·|P|`.
    pub total_codewords: u64,
    /// Bits per pulse `B`.
    pub bits_per_pulse: u32,
    /// Codewords to eliminate `Q = |ζ||P| - 2^B`.
    pub num_eliminated: u64,
    /// Antenna spacing `d = 10 c / f_c`, m.
    pub antenna_spacing_m: f64,
}

impl DerivedParams {
    /// Size of the valid codeword set, `2^B`.
    pub fn codebook_size(&self) -> usize {
        1usize << self.bits_per_pulse
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if self.num_active < 1 {
            return Err(Error::param("K", "must be at least 1"));
        }
        if self.num_freqs < self.num_active {
            return Err(Error::param(
                "M",
                format!("M = {} is smaller than K = {}", self.num_freqs, self.num_active),
            ));
        }
        if !self.tx_antennas.is_multiple_of(self.num_active) {
            return Err(Error::NotDivisible {
                l_r: self.tx_antennas,
                k: self.num_active,
            });
        }
        if self.tx_antennas / self.num_active <= 1 {
            return Err(Error::param(
                "L_R",
                format!(
                    "L_K = L_R / K = {} must be greater than 1",
                    self.tx_antennas / self.num_active
                ),
            ));
        }
        if self.rx_antennas == 0 {
            return Err(Error::param("L_C", "must be positive"));
        }
        for (field, v) in [
            ("f_c", self.carrier_hz),
            ("delta_f", self.freq_step_hz),
            ("T_p", self.pulse_width_s),
            ("T_r", self.pri_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(field, format!("{v} must be finite and > 0")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::param("theta", "must be finite"));
        }
        if self.pulse_width_s > self.pri_s {
            return Err(Error::param("T_p", "pulse width exceeds the repetition interval"));
        }
        if self.tps_candidates < 1 {
            return Err(Error::param("D", "need at least one pre-scaling candidate"));
        }
        Ok(())
    }

    /// Validates and computes every derived quantity.
    pub fn derive(&self) -> Result<DerivedParams> {
        self.validate()?;
        let m = self.num_freqs;
        let k = self.num_active;
        let l_r = self.tx_antennas;
        let l_k = l_r / k;

        let subsets = factorial(m) / (factorial(k) * factorial(m - k));
        let allocations = factorial(l_r) / factorial(l_k).pow(k as u32);
        let total = &subsets * &allocations;
        // floor(log2(n)) for n >= 1
        let bits = (total.bits() - 1) as u32;
        let num_subsets = to_u64("|ζ|", &subsets)?;
        let num_allocations = to_u64("|P|", &allocations)?;
        let total_codewords = to_u64("|ζ||P|", &total)?;
        if bits >= 63 {
            return Err(Error::Overflow {
                what: "2^B",
                value: format!("2^{bits}"),
            });
        }

        let sample_period_s = 1.0 / (m as f64 * self.freq_step_hz);
        let ratio = self.pulse_width_s * m as f64 * self.freq_step_hz;
        // T_p / T_s is integral in all practical configurations; absorb the
        // rounding of the float product before flooring.
        let samples_per_pulse = (ratio + 1e-9 * ratio.max(1.0)).floor() as usize + 1;

        Ok(DerivedParams {
            antennas_per_freq: l_k,
            sample_period_s,
            samples_per_pulse,
            num_subsets,
            num_allocations,
            total_codewords,
            bits_per_pulse: bits,
            num_eliminated: total_codewords - (1u64 << bits),
            antenna_spacing_m: 10.0 * SPEED_OF_LIGHT / self.carrier_hz,
        })
    }
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::from(1u32), |acc, i| acc * BigUint::from(i))
}

fn to_u64(what: &'static str, v: &BigUint) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::Overflow {
        what,
        value: v.to_string(),
    })
}
