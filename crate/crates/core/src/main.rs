use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imjrc::cli::{
    config_from_meta, describe_derived, design_schemes, emit_results, estimate_complexity, load_config,
    read_ber_csv, run_experiment, write_codebook_csv, write_gains_csv, RunConfig, SnrGrid,
};
use imjrc::crps::Scheme;
use imjrc::enumeration::CodewordTable;
use imjrc::params::SystemParams;
use imjrc::sim::{divergence_report, measure_gain, BerRecord, REFERENCE_GAINS};

#[derive(Parser)]
#[command(name = "imjrc", version, about = "Index-modulation joint radar-communication simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Key-value config file; omitted keys use the reference scenario.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Comma-separated scheme list.
    #[arg(long, global = true, value_delimiter = ',')]
    scheme: Vec<Scheme>,
    /// SNR grid as start:stop:step (dB).
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr: Option<SnrGrid>,
    #[arg(long, global = true)]
    pulses: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use 100000 pulses per SNR point.
    #[arg(long, global = true)]
    full: bool,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Prune on channel-image distances for a seeded design channel.
    #[arg(long, global = true)]
    channel_aware_med: bool,
    /// Stop an SNR point after 500 bit errors.
    #[arg(long, global = true)]
    early_stop: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print derived parameters.
    Derive(Common),
    /// Build codebooks and pre-scaling factors and export them.
    Design(Common),
    /// Run the Monte Carlo BER experiment.
    Ber {
        #[command(flatten)]
        common: Common,
        /// Re-run exactly the configuration recorded in a meta.json.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// SNR gain of schemes over a baseline curve in a ber.csv.
    Gain {
        #[command(flatten)]
        common: Common,
        /// Input ber.csv.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "baseline")]
        baseline: Scheme,
        #[arg(long, value_delimiter = ',', default_values_t = [1e-3, 1e-4])]
        target: Vec<f64>,
    },
    /// Operation-count estimates for codebook design and CRPS.
    Complexity(Common),
}

impl Common {
    fn resolve(&self) -> imjrc::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => load_config(p)?,
            None => RunConfig::default(),
        };
        if !self.scheme.is_empty() {
            cfg.schemes = self.scheme.clone();
        }
        if let Some(g) = self.snr {
            cfg.snr = g;
        }
        if let Some(n) = self.pulses {
            cfg.pulses = n;
        }
        if let Some(s) = self.seed {
            cfg.params.master_seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.full |= self.full;
        cfg.channel_aware_med |= self.channel_aware_med;
        cfg.early_stop |= self.early_stop;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn is_reference_scenario(p: &SystemParams) -> bool {
    let d = SystemParams {
        master_seed: p.master_seed,
        ..SystemParams::default()
    };
    *p == d
}

fn run(cli: Cli) -> imjrc::Result<()> {
    match cli.command {
        Command::Derive(c) => {
            let cfg = c.resolve()?;
            let d = cfg.params.derive()?;
            print!("{}", describe_derived(&cfg.params, &d));
        }
        Command::Design(c) => {
            let cfg = c.resolve()?;
            let d = cfg.params.derive()?;
            let table = CodewordTable::build(&cfg.params, &d)?;
            fs::create_dir_all(&cfg.out_dir)?;
            table.write_csv(fs::File::create(cfg.out_dir.join("codewords.csv"))?)?;
            for design in design_schemes(&cfg, &table, &d)? {
                let name = design.scheme.as_str();
                write_codebook_csv(&cfg.out_dir.join(format!("codebook_{name}.csv")), &design, &table, d.bits_per_pulse)?;
                if let Some(t) = &design.tps {
                    fs::write(cfg.out_dir.join(format!("tps_{name}.json")), serde_json::to_string_pretty(t)?)?;
                }
                println!(
                    "{name:<20} members {:>5}  eliminated {:>5}  MED {:.6}  tps {}",
                    design.codebook.len(),
                    design.eliminated,
                    design.codebook.med,
                    design.tps.as_ref().map_or("-".into(), |t| t.d_index.to_string())
                );
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Ber { common, replay } => {
            let cfg = match replay {
                Some(meta) => {
                    let mut cfg = config_from_meta(&meta)?;
                    if let Some(o) = &common.out {
                        cfg.out_dir = o.clone();
                    }
                    cfg
                }
                None => common.resolve()?,
            };
            let exp = run_experiment(&cfg)?;
            emit_results(&cfg.out_dir, &exp)?;
            for r in &exp.records {
                println!(
                    "{:<20} {:>7.2} dB  pulses {:>7}  errors {:>8}  BER {:.3e} ± {:.1e}",
                    r.scheme.as_str(),
                    r.snr_db,
                    r.pulses,
                    r.bit_errors,
                    r.ber,
                    r.ci_halfwidth
                );
            }
            for g in &exp.gains {
                println!("gain {:<20} @ {:.0e}: {:+.2} dB", g.scheme.as_str(), g.target_ber, g.gain_db);
            }
            let reference_run = cfg.schemes.contains(&Scheme::Baseline)
                && REFERENCE_GAINS.iter().any(|(s, _)| cfg.schemes.contains(s));
            if is_reference_scenario(&cfg.params) && reference_run {
                let meds: Vec<_> = exp.designs.iter().map(|d| (d.scheme, d.codebook.med)).collect();
                if let Some(report) = divergence_report(&exp.gains, &meds) {
                    fs::write(cfg.out_dir.join("divergence.md"), &report)?;
                    eprintln!("gains diverge from reference values; see divergence.md");
                }
            }
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::Gain {
            common,
            input,
            baseline,
            target,
        } => {
            let records = read_ber_csv(&input)?;
            let curve = |s: Scheme| -> Vec<BerRecord> { records.iter().filter(|r| r.scheme == s).cloned().collect() };
            let base = curve(baseline);
            let mut schemes: Vec<Scheme> = if common.scheme.is_empty() {
                records.iter().map(|r| r.scheme).collect()
            } else {
                common.scheme.clone()
            };
            schemes.sort();
            schemes.dedup();
            let mut gains = Vec::new();
            for s in schemes.into_iter().filter(|&s| s != baseline) {
                for &t in &target {
                    match measure_gain(&base, &curve(s), t) {
                        Ok(g) => {
                            println!("{:<20} vs {baseline} @ {t:.0e}: {:+.3} dB", s.as_str(), g.gain_db);
                            gains.push(g);
                        }
                        Err(e) => println!("{:<20} vs {baseline} @ {t:.0e}: {e}", s.as_str()),
                    }
                }
            }
            if let Some(o) = &common.out {
                fs::create_dir_all(o)?;
                write_gains_csv(&o.join("gains.csv"), &gains)?;
            }
        }
        Command::Complexity(c) => {
            let cfg = c.resolve()?;
            let d = cfg.params.derive()?;
            let n = cfg.effective_pulses();
            for e in estimate_complexity(&cfg.params, &d, n, cfg.params.tps_candidates)? {
                println!("{:<12} {:.6e}  (N = {n}, D = {})", format!("{:?}", e.scheme), e.operation_count, cfg.params.tps_candidates);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
