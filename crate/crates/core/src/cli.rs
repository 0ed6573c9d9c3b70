//! Run configuration, experiment orchestration, result files and the
//! operation-count model.
//!
//! Config files are flat `key = value` lines; `#` starts a comment. Any key
//! left out takes its default from the reference scenario:
//!
//! ```text
//! # scenario
//! M = 7
//! K = 2
//! L_R = 6
//! L_C = 4
//! f_c = 1.9e9
//! delta_f = 10e6
//! theta = pi/4
//! T_p = 1e-6
//! T_r = 2e-6
//! D = 100
//! master_seed = 439041101
//! # experiment
//! schemes = baseline, codebook_only, crps_only, codebook_then_crps, crps_then_codebook
//! snr = -10:0:1
//! pulses = 10000
//! out = results
//! full = false
//! channel_aware_med = false
//! early_stop = false
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::crps::{build_scheme, scenario_tps, DesignOptions, Scheme, SchemeDesign};
use crate::enumeration::{join, CodewordTable};
use crate::params::{DerivedParams, SystemParams};
use crate::sim::{measure_gain, run_ber, BerRecord, GainReport, SimOptions, EARLY_STOP_ERRORS};
use crate::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Pulses per SNR point in `--full` mode.
pub const FULL_PULSES: u64 = 100_000;
pub const DEFAULT_PULSES: u64 = 10_000;
/// Target BERs at which gains over the baseline are reported.
pub const GAIN_TARGETS: [f64; 2] = [1e-3, 1e-4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SnrGrid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as i64;
        (0..=n.max(-1)).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::param("snr", "step must be > 0 and bounds finite"));
        }
        if self.stop < self.start {
            return Err(Error::EmptyGrid);
        }
        Ok(())
    }
}

impl std::str::FromStr for SnrGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(Error::param("snr", format!("expected start:stop:step, got `{s}`")));
        };
        let num = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| Error::param("snr", format!("`{v}` is not a number")))
        };
        let grid = SnrGrid {
            start: num(start)?,
            stop: num(stop)?,
            step: num(step)?,
        };
        grid.validate()?;
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: SystemParams,
    pub schemes: Vec<Scheme>,
    pub snr: SnrGrid,
    pub pulses: u64,
    pub out_dir: PathBuf,
    pub full: bool,
    pub channel_aware_med: bool,
    pub early_stop: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            schemes: Scheme::ALL.to_vec(),
            snr: SnrGrid {
                start: -10.0,
                stop: 0.0,
                step: 1.0,
            },
            pulses: DEFAULT_PULSES,
            out_dir: PathBuf::from("results"),
            full: false,
            channel_aware_med: false,
            early_stop: false,
        }
    }
}

impl RunConfig {
    /// Pulses per SNR point after applying `full`.
    pub fn effective_pulses(&self) -> u64 {
        if self.full {
            self.pulses.max(FULL_PULSES)
        } else {
            self.pulses
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.schemes.is_empty() {
            return Err(Error::param("schemes", "at least one scheme is required"));
        }
        if self.pulses == 0 {
            return Err(Error::param("pulses", "must be positive"));
        }
        self.snr.validate()
    }
}

fn parse_theta(v: &str) -> Option<f64> {
    use std::f64::consts::PI;
    let v = v.replace(' ', "");
    if let Ok(x) = v.parse() {
        return Some(x);
    }
    if v == "pi" {
        return Some(PI);
    }
    let (num, den) = v.split_once('/')?;
    let den: f64 = den.parse().ok()?;
    let num = match num {
        "pi" => PI,
        n => n.strip_suffix("*pi")?.parse::<f64>().ok()? * PI,
    };
    Some(num / den)
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

/// Parses config text, applying defaults for omitted keys.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        macro_rules! num {
            ($t:ty) => {
                value
                    .parse::<$t>()
                    .map_err(|_| err(format!("`{key}`: cannot parse `{value}`")))?
            };
        }
        let p = &mut cfg.params;
        match key {
            "M" => p.num_freqs = num!(usize),
            "K" => p.num_active = num!(usize),
            "L_R" => p.tx_antennas = num!(usize),
            "L_C" => p.rx_antennas = num!(usize),
            "f_c" => p.carrier_hz = num!(f64),
            "delta_f" => p.freq_step_hz = num!(f64),
            "theta" => {
                p.theta = parse_theta(value).ok_or_else(|| err(format!("`theta`: cannot parse `{value}`")))?
            }
            "T_p" => p.pulse_width_s = num!(f64),
            "T_r" => p.pri_s = num!(f64),
            "D" => p.tps_candidates = num!(usize),
            "master_seed" => p.master_seed = num!(u64),
            "schemes" => {
                cfg.schemes = value
                    .split(',')
                    .map(|s| s.trim().parse::<Scheme>())
                    .collect::<Result<_>>()
                    .map_err(|e| err(e.to_string()))?
            }
            "snr" => cfg.snr = value.parse().map_err(|e: Error| err(e.to_string()))?,
            "pulses" => cfg.pulses = num!(u64),
            "out" => cfg.out_dir = PathBuf::from(value),
            "full" | "channel_aware_med" | "early_stop" => {
                let b = parse_bool(value).ok_or_else(|| err(format!("`{key}`: expected a boolean")))?;
                match key {
                    "full" => cfg.full = b,
                    "channel_aware_med" => cfg.channel_aware_med = b,
                    _ => cfg.early_stop = b,
                }
            }
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    parse_config(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityScheme {
    ImCodebook,
    ImCrps,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexityEstimate {
    pub scheme: ComplexityScheme,
    pub operation_count: f64,
}

/// Operation counts of codebook design and of CRPS, each including
/// codeword synthesis and `N` pulses of ML detection.
pub fn estimate_complexity(
    params: &SystemParams,
    derived: &DerivedParams,
    pulses: u64,
    candidates: usize,
) -> Result<[ComplexityEstimate; 2]> {
    if candidates < 1 {
        return Err(Error::param("D", "need at least one pre-scaling candidate"));
    }
    let k = params.num_active as f64;
    let l_r = params.tx_antennas as f64;
    let l_c = params.rx_antennas as f64;
    let l_t = derived.samples_per_pulse as f64;
    let c = derived.total_codewords as f64;
    let q = derived.num_eliminated as f64;
    let n = pulses as f64;
    let d = candidates as f64;

    let synthesis = (k * l_r + (2.0 * k - 1.0) * l_t) * l_r * c;
    let per_pulse = ((l_r + 3.0) * l_c * l_t + 1.0) * n;
    // Σ_{i=1}^{Q} (C−i+1)(C−i) = S(C) − S(C−Q) with S(n) = (n−1) n (n+1) / 3
    let s = |x: f64| (x - 1.0) * x * (x + 1.0) / 3.0;
    let pruning = (3.0 * l_r * l_t + 1.0) / 2.0 * (s(c) - s(c - q));
    let selection = ((l_r * l_r * l_t + (3.0 * l_r * l_t + 1.0) * (c - 1.0) / 2.0) * c + 1.0) * d;

    Ok([
        ComplexityEstimate {
            scheme: ComplexityScheme::ImCodebook,
            operation_count: synthesis + pruning + per_pulse * (c - q),
        },
        ComplexityEstimate {
            scheme: ComplexityScheme::ImCrps,
            operation_count: synthesis + selection + per_pulse * c,
        },
    ])
}

/// Designed schemes plus simulation output for one configuration.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: RunConfig,
    pub derived: DerivedParams,
    pub designs: Vec<SchemeDesign>,
    pub records: Vec<BerRecord>,
    pub gains: Vec<GainReport>,
}

pub fn design_schemes(cfg: &RunConfig, table: &CodewordTable, derived: &DerivedParams) -> Result<Vec<SchemeDesign>> {
    let candidates = scenario_tps(&cfg.params);
    let options = if cfg.channel_aware_med {
        DesignOptions::channel_aware(&cfg.params)
    } else {
        DesignOptions::default()
    };
    cfg.schemes
        .iter()
        .map(|&s| build_scheme(s, table, &cfg.params, derived, &candidates, &options))
        .collect()
}

/// Designs every scheme, simulates the grid and measures gains over the
/// baseline where both curves bracket a target.
pub fn run_experiment(cfg: &RunConfig) -> Result<Experiment> {
    cfg.validate()?;
    let derived = cfg.params.derive()?;
    let table = CodewordTable::build(&cfg.params, &derived)?;
    let designs = design_schemes(cfg, &table, &derived)?;
    let grid = cfg.snr.points();
    let opts = SimOptions {
        early_stop: cfg.early_stop.then_some(EARLY_STOP_ERRORS),
        ..SimOptions::new(cfg.effective_pulses(), cfg.params.master_seed)
    };
    let mut curves = Vec::with_capacity(designs.len());
    for design in &designs {
        curves.push(run_ber(design, &table, &cfg.params, &derived, &grid, &opts)?);
    }
    let gains = gains_over_baseline(&curves);
    Ok(Experiment {
        config: cfg.clone(),
        derived,
        designs,
        records: curves.into_iter().flatten().collect(),
        gains,
    })
}

/// Gains of every non-baseline curve at [`GAIN_TARGETS`]; unbracketed
/// targets are skipped.
pub fn gains_over_baseline(curves: &[Vec<BerRecord>]) -> Vec<GainReport> {
    let Some(base) = curves.iter().find(|c| c.first().is_some_and(|r| r.scheme == Scheme::Baseline)) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for curve in curves {
        if curve.first().is_none_or(|r| r.scheme == Scheme::Baseline) {
            continue;
        }
        for target in GAIN_TARGETS {
            if let Ok(g) = measure_gain(base, curve, target) {
                out.push(g);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub artifact_version: String,
    pub config: RunConfig,
    pub derived: DerivedParams,
    pub master_seed: u64,
    pub pulses_per_point: u64,
    pub bit_labeling: String,
    pub tps_normalization: String,
    pub early_stop_errors: Option<u64>,
    pub designs: Vec<SchemeDesign>,
}

impl Metadata {
    pub fn from_experiment(exp: &Experiment) -> Self {
        Self {
            artifact_version: ARTIFACT_VERSION.to_string(),
            config: exp.config.clone(),
            derived: exp.derived.clone(),
            master_seed: exp.config.params.master_seed,
            pulses_per_point: exp.config.effective_pulses(),
            bit_labeling: "natural binary of the member rank; members sorted by ascending global index".into(),
            tps_normalization: "candidate 0 = all ones; others iid CN(0,1) rescaled to sum |alpha|^2 = L_R".into(),
            early_stop_errors: exp.config.early_stop.then_some(EARLY_STOP_ERRORS),
            designs: exp.designs.clone(),
        }
    }
}

/// Loads the configuration recorded in a `meta.json`.
pub fn config_from_meta(path: &Path) -> Result<RunConfig> {
    let meta: Metadata = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(meta.config)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_ber_csv(path: &Path, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scheme", "snr_db", "pulses", "bit_errors", "ber", "ci_halfwidth"])?;
    for r in records {
        w.write_record([
            r.scheme.to_string(),
            fmt_f64(r.snr_db),
            r.pulses.to_string(),
            r.bit_errors.to_string(),
            fmt_f64(r.ber),
            fmt_f64(r.ci_halfwidth),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ber_csv(path: &Path) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn write_gains_csv(path: &Path, gains: &[GainReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["scheme", "baseline", "target_ber", "gain_db"])?;
    for g in gains {
        w.write_record([
            g.scheme.to_string(),
            g.baseline.to_string(),
            fmt_f64(g.target_ber),
            fmt_f64(g.gain_db),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Codebook export: `rank,global_index,subset,allocation,bits`.
pub fn write_codebook_csv(path: &Path, design: &SchemeDesign, table: &CodewordTable, bits: u32) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["rank", "global_index", "subset", "allocation", "bits"])?;
    for (rank, &g) in design.codebook.member_ids.iter().enumerate() {
        let e = &table.entries[g];
        let label: String = crate::enumeration::rank_to_bits(rank as u64, bits)?
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        w.write_record([
            rank.to_string(),
            g.to_string(),
            join(&e.freq_subset, " "),
            join(&e.allocation, ""),
            label,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot BER versus SNR, one curve per scheme, from ber.csv."""
import csv
import sys
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

src = sys.argv[1] if len(sys.argv) > 1 else "ber.csv"
dst = sys.argv[2] if len(sys.argv) > 2 else "ber.png"

curves = defaultdict(list)
with open(src, newline="") as fh:
    for row in csv.DictReader(fh):
        ber = float(row["ber"])
        if ber > 0:
            curves[row["scheme"]].append((float(row["snr_db"]), ber))

fig, ax = plt.subplots(figsize=(6, 4.5))
for scheme, pts in curves.items():
    pts.sort()
    ax.semilogy([p[0] for p in pts], [p[1] for p in pts], marker="o", label=scheme)
ax.set_xlabel("SNR (dB)")
ax.set_ylabel("BER")
ax.grid(True, which="both", alpha=0.3)
ax.legend()
fig.tight_layout()
fig.savefig(dst, dpi=150)
print(f"wrote {dst}")
"#;

/// Writes `ber.csv`, `gains.csv`, `meta.json` and `plot_ber.py` into `dir`.
pub fn emit_results(dir: &Path, exp: &Experiment) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_ber_csv(&dir.join("ber.csv"), &exp.records)?;
    write_gains_csv(&dir.join("gains.csv"), &exp.gains)?;
    let meta = Metadata::from_experiment(exp);
    fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)?)?;
    fs::write(dir.join("plot_ber.py"), PLOT_SCRIPT)?;
    Ok(())
}

/// Human-readable summary of derived parameters.
pub fn describe_derived(p: &SystemParams, d: &DerivedParams) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "M = {}, K = {}, L_R = {}, L_C = {}", p.num_freqs, p.num_active, p.tx_antennas, p.rx_antennas);
    let _ = writeln!(s, "L_K            = {}", d.antennas_per_freq);
    let _ = writeln!(s, "T_s            = {:e} s", d.sample_period_s);
    let _ = writeln!(s, "L_T            = {}", d.samples_per_pulse);
    let _ = writeln!(s, "|zeta|         = {}", d.num_subsets);
    let _ = writeln!(s, "|P|            = {}", d.num_allocations);
    let _ = writeln!(s, "|zeta||P|      = {}", d.total_codewords);
    let _ = writeln!(s, "B              = {}", d.bits_per_pulse);
    let _ = writeln!(s, "|V| = 2^B      = {}", d.codebook_size());
    let _ = writeln!(s, "Q              = {}", d.num_eliminated);
    let _ = writeln!(s, "d              = {} m", d.antenna_spacing_m);
    s
}
