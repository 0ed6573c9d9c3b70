//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use imjrc::channel::{draw_channel, draw_unit_noise, receive_with_noise, snr_to_sigma2, substream, StreamTag};
use imjrc::cli::{config_from_meta, emit_results, estimate_complexity, run_experiment, ComplexityScheme, RunConfig, SnrGrid};
use imjrc::codebook::{greedy_prune, DistanceMatrix, RowDistances};
use imjrc::crps::{build_scheme, scenario_tps, select_tps, DesignOptions, Scheme, SchemeDesign, TpsFactor};
use imjrc::detector::{detect, GramDetector};
use imjrc::enumeration::CodewordTable;
use imjrc::params::{DerivedParams, SystemParams};
use imjrc::signal::{waveform_gram, CodewordMatrix};
use imjrc::sim::{divergence_report, measure_gain, run_ber, BerRecord, SimOptions, REFERENCE_GAINS, REFERENCE_TARGET_BER};
use imjrc::{CMatrix, Cplx};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Check = fn() -> Outcome;

/// Grid on which the reference baseline spans BER 1e-2 to 1e-4.
const ORDER_GRID: SnrGrid = SnrGrid {
    start: -10.0,
    stop: 0.0,
    step: 1.0,
};
const TREND_GRID: SnrGrid = SnrGrid {
    start: -14.0,
    stop: 0.0,
    step: 1.0,
};

fn scenario(p: SystemParams) -> (SystemParams, DerivedParams, CodewordTable) {
    let d = p.derive().expect("valid scenario");
    let t = CodewordTable::build(&p, &d).expect("table");
    (p, d, t)
}

fn design(p: &SystemParams, d: &DerivedParams, t: &CodewordTable, s: Scheme) -> SchemeDesign {
    build_scheme(s, t, p, d, &scenario_tps(p), &DesignOptions::default()).expect("design")
}

fn curve(p: &SystemParams, d: &DerivedParams, t: &CodewordTable, s: Scheme, grid: &[f64], pulses: u64) -> Vec<BerRecord> {
    run_ber(&design(p, d, t, s), t, p, d, grid, &SimOptions::new(pulses, p.master_seed)).expect("ber")
}

fn overlap(a: &BerRecord, b: &BerRecord) -> bool {
    let (lo_a, hi_a) = a.interval();
    let (lo_b, hi_b) = b.interval();
    lo_a <= hi_b && lo_b <= hi_a
}

/// Checks `a ≤ b` pointwise. Returns (violations within overlapping
/// intervals, violations with disjoint intervals).
fn compare(a: &[BerRecord], b: &[BerRecord], keep: &[bool]) -> (usize, usize) {
    let mut soft = 0;
    let mut hard = 0;
    for ((x, y), &k) in a.iter().zip(b).zip(keep) {
        if k && x.ber > y.ber {
            if overlap(x, y) {
                soft += 1;
            } else {
                hard += 1;
            }
        }
    }
    (soft, hard)
}

fn fmt_curve(c: &[BerRecord]) -> String {
    c.iter()
        .map(|r| format!("{:+.0}:{:.2e}", r.snr_db, r.ber))
        .collect::<Vec<_>>()
        .join(" ")
}

fn parameter_accounting() -> Outcome {
    let start = Instant::now();
    let d = SystemParams::default().derive().expect("derive");
    let elapsed = start.elapsed().as_secs_f64();
    let got = (
        d.total_codewords,
        d.num_subsets,
        d.num_allocations,
        d.bits_per_pulse,
        d.codebook_size(),
        d.num_eliminated,
        d.samples_per_pulse,
    );
    let want = (420, 21, 20, 8, 256, 164, 71);
    Outcome::new(
        got == want && elapsed < 1.0,
        format!("(C, |ζ|, |P|, B, |V|, Q, L_T) = {got:?}, expected {want:?}, {elapsed:.3} s"),
    )
}

fn scheme_ordering() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let grid = ORDER_GRID.points();
    let order = [
        Scheme::CrpsThenCodebook,
        Scheme::CodebookThenCrps,
        Scheme::CrpsOnly,
        Scheme::CodebookOnly,
        Scheme::Baseline,
    ];
    let curves: Vec<Vec<BerRecord>> = order.iter().map(|&s| curve(&p, &d, &t, s, &grid, 10_000)).collect();
    let base = &curves[4];
    let spans = base.first().is_some_and(|r| r.ber >= 1e-2) && base.iter().any(|r| r.ber <= 1e-4);
    let keep: Vec<bool> = base.iter().map(|r| r.ber <= 1e-2).collect();
    let mut pass = spans;
    let mut parts = vec![format!("baseline {}", fmt_curve(base))];
    for w in 0..4 {
        let (soft, hard) = compare(&curves[w], &curves[w + 1], &keep);
        let ok = hard == 0 && soft <= 1;
        pass &= ok;
        parts.push(format!(
            "{} <= {}: {soft} overlapping + {hard} disjoint violations{}",
            order[w],
            order[w + 1],
            if ok { "" } else { " (too many)" }
        ));
    }
    if !spans {
        parts.push("grid does not span 1e-2..1e-4".into());
    }
    Outcome::new(pass, parts.join("; "))
}

fn relative_gains() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let grid = ORDER_GRID.points();
    let n = 100_000;
    let base = curve(&p, &d, &t, Scheme::Baseline, &grid, n);
    let mut gains = Vec::new();
    let mut meds = vec![(Scheme::Baseline, design(&p, &d, &t, Scheme::Baseline).codebook.med)];
    let mut parts = Vec::new();
    let mut pass = true;
    for (scheme, want) in REFERENCE_GAINS {
        meds.push((scheme, design(&p, &d, &t, scheme).codebook.med));
        match measure_gain(&base, &curve(&p, &d, &t, scheme, &grid, n), REFERENCE_TARGET_BER) {
            Ok(g) => {
                let ok = (g.gain_db - want).abs() <= 1.0;
                pass &= ok;
                parts.push(format!("{scheme} {:+.2} dB (want {want} ± 1.0)", g.gain_db));
                gains.push(g);
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{scheme}: {e}"));
            }
        }
    }
    if let Some(report) = divergence_report(&gains, &meds) {
        let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
        let path = dir.join("divergence.md");
        let written = fs::create_dir_all(&dir).and_then(|_| fs::write(&path, &report));
        parts.push(match written {
            Ok(()) => format!("divergence report at {}", path.display()),
            Err(e) => format!("divergence report not written: {e}"),
        });
        println!("{report}");
    }
    Outcome::new(pass, parts.join("; "))
}

/// Index of the grid point whose BER lies in [1e-3, 1e-2] closest to the
/// log-midpoint of that band.
fn mid_point(c: &[BerRecord]) -> Option<usize> {
    c.iter()
        .enumerate()
        .filter(|(_, r)| (1e-3..=1e-2).contains(&r.ber))
        .min_by(|(_, a), (_, b)| {
            let da = (a.ber.log10() + 2.5).abs();
            let db = (b.ber.log10() + 2.5).abs();
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
}

fn not_significantly_worse(a: &BerRecord, b: &BerRecord) -> bool {
    a.ber <= b.ber || overlap(a, b)
}

fn trend_frequencies() -> Outcome {
    let grid = TREND_GRID.points();
    let curves: Vec<Vec<BerRecord>> = [8usize, 6, 4]
        .iter()
        .map(|&m| {
            let (p, d, t) = scenario(SystemParams {
                num_freqs: m,
                ..SystemParams::default()
            });
            curve(&p, &d, &t, Scheme::CrpsThenCodebook, &grid, 10_000)
        })
        .collect();
    let Some(i) = mid_point(&curves[1]) else {
        return Outcome::new(false, format!("M=6 never in [1e-3, 1e-2]: {}", fmt_curve(&curves[1])));
    };
    let (b8, b6, b4) = (&curves[0][i], &curves[1][i], &curves[2][i]);
    let pass = not_significantly_worse(b8, b6) && not_significantly_worse(b6, b4);
    Outcome::new(
        pass,
        format!(
            "at {:+.0} dB: M=8 {:.3e}, M=6 {:.3e}, M=4 {:.3e}",
            grid[i], b8.ber, b6.ber, b4.ber
        ),
    )
}

fn trend_antennas() -> Outcome {
    let grid = TREND_GRID.points();
    let mut pass = true;
    let mut parts = Vec::new();
    for l_r in [4usize, 6, 8] {
        let (p, d, t) = scenario(SystemParams {
            tx_antennas: l_r,
            ..SystemParams::default()
        });
        let scheme = curve(&p, &d, &t, Scheme::CrpsThenCodebook, &grid, 10_000);
        let base = curve(&p, &d, &t, Scheme::Baseline, &grid, 10_000);
        let Some(i) = mid_point(&scheme) else {
            pass = false;
            parts.push(format!("L_R={l_r}: never in [1e-3, 1e-2]"));
            continue;
        };
        let ok = not_significantly_worse(&scheme[i], &base[i]);
        pass &= ok;
        parts.push(format!(
            "L_R={l_r} at {:+.0} dB: {:.3e} vs baseline {:.3e}",
            grid[i], scheme[i].ber, base[i].ber
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn noiseless_exactness() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let mut errors = Vec::new();
    for s in Scheme::ALL {
        let r = curve(&p, &d, &t, s, &[f64::INFINITY], 1_000);
        errors.push((s, r[0].bit_errors, r[0].pulses));
    }
    let pass = errors.iter().all(|&(_, e, n)| e == 0 && n == 1_000);
    Outcome::new(pass, format!("bit errors per scheme {errors:?}"))
}

fn med_trace_monotone() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let gram = waveform_gram(p.num_freqs, d.samples_per_pulse);
    let rows = RowDistances::new(t.entries.iter().map(|e| &e.codeword).collect(), gram);
    let out = greedy_prune(&rows.matrix(&vec![1.0; p.tx_antennas]), d.codebook_size()).expect("prune");
    let steps = out.eliminated.len();
    let monotone = out.med_trace.windows(2).all(|w| w[1] >= w[0]);
    Outcome::new(
        steps == 164 && monotone,
        format!(
            "{steps} steps, MED {:.6} -> {:.6}, non-decreasing: {monotone}",
            out.med_trace[0],
            out.med()
        ),
    )
}

fn flat(m: &CMatrix) -> Vec<Cplx> {
    m.iter().copied().collect()
}

/// MED by explicit pairwise differences of the scaled matrices.
fn brute_med(members: &[&CodewordMatrix], alpha: &[Cplx]) -> f64 {
    let scaled: Vec<Vec<Cplx>> = members.iter().map(|m| flat(&m.row_scaled(alpha).matrix)).collect();
    let mut best = f64::INFINITY;
    for i in 0..scaled.len() {
        for j in i + 1..scaled.len() {
            let d: f64 = scaled[i].iter().zip(&scaled[j]).map(|(a, b)| (a - b).norm_sqr()).sum();
            best = best.min(d);
        }
    }
    best
}

fn tps_selection() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let candidates = scenario_tps(&p);
    let mut pass = true;
    let mut parts = Vec::new();
    for s in [Scheme::CrpsOnly, Scheme::CodebookThenCrps, Scheme::CrpsThenCodebook] {
        let des = design(&p, &d, &t, s);
        let ids: Vec<usize> = if s == Scheme::CrpsThenCodebook {
            (0..t.len()).collect()
        } else {
            des.codebook.member_ids.clone()
        };
        let members: Vec<&CodewordMatrix> = ids.iter().map(|&g| t.codeword(g)).collect();
        let sel = select_tps(&candidates, &members, p.num_freqs).expect("select");
        let brute: Vec<f64> = candidates.iter().map(|c| brute_med(&members, &c.alpha)).collect();
        let max = brute.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let tol = 1e-9 * max;
        let chosen = brute[sel.factor.d_index];
        let ok = sel.med_after >= sel.med_before - tol
            && chosen >= brute[0] - tol
            && (chosen - max).abs() <= tol
            && (sel.med_after - chosen).abs() <= tol
            && des.tps.as_ref() == Some(&sel.factor);
        pass &= ok;
        parts.push(format!(
            "{s}: d={} MED {:.6} (identity {:.6}, exhaustive max {:.6})",
            sel.factor.d_index, chosen, brute[0], max
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn energy(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.re * z.re + z.im * z.im).sum()
}

fn energy_conservation() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let l_t = d.samples_per_pulse as f64;
    let candidates: Vec<TpsFactor> = scenario_tps(&p);
    let mut worst: f64 = 0.0;
    for e in &t.entries {
        worst = worst.max((energy(&e.codeword.matrix) - l_t).abs() / l_t);
        for c in &candidates {
            worst = worst.max((energy(&e.codeword.row_scaled(&c.alpha).matrix) - l_t).abs() / l_t);
        }
    }
    Outcome::new(
        t.len() == 420 && worst <= 1e-9,
        format!("{} codewords x {} factors, worst relative error {worst:.2e}", t.len(), candidates.len() + 1),
    )
}

/// ‖Y − H·A·X‖² with every product written out.
fn residual(y: &CMatrix, h: &CMatrix, x: &CMatrix, alpha: &[Cplx]) -> f64 {
    let mut total = 0.0;
    for r in 0..y.nrows() {
        for s in 0..y.ncols() {
            let mut acc = Cplx::new(0.0, 0.0);
            for l in 0..x.nrows() {
                acc += h[[r, l]] * alpha[l] * x[[l, s]];
            }
            total += (y[[r, s]] - acc).norm_sqr();
        }
    }
    total
}

fn detector_oracle() -> Outcome {
    let (p, d, t) = scenario(SystemParams::default());
    let des = design(&p, &d, &t, Scheme::CrpsThenCodebook);
    let tps = des.tps.clone().expect("crps scheme carries a factor");
    let members: Vec<CodewordMatrix> = des.codebook.member_ids.iter().map(|&g| t.codeword(g).clone()).collect();
    let sent = des.transmit_matrices(&t);
    let fast = GramDetector::new(&sent, p.num_freqs, p.rx_antennas).expect("detector");
    let mut rng = substream(0x00AC_CE97, 0, StreamTag::Bits);
    let mut agree = 0;
    let mut errors = 0;
    for trial in 0..100u64 {
        let rank = rng.random_range(0..members.len());
        let h = draw_channel(p.rx_antennas, p.tx_antennas, &mut substream(0x00AC_CE97, trial, StreamTag::Channel));
        let n = draw_unit_noise(p.rx_antennas, d.samples_per_pulse, &mut substream(0x00AC_CE97, trial, StreamTag::Noise));
        let y = receive_with_noise(&sent[rank].matrix, &h, snr_to_sigma2(-8.0), &n).expect("receive");
        let metrics: Vec<f64> = members.iter().map(|m| residual(&y, &h, &m.matrix, &tps.alpha)).collect();
        let mut best = 0;
        for (i, &m) in metrics.iter().enumerate() {
            if m < metrics[best] {
                best = i;
            }
        }
        let reference = detect(&y, &h, &members, Some(&tps)).expect("detect");
        let gram = fast.detect(&fast.prepare(&h).expect("prepare"), &y).expect("detect");
        let close = |v: f64| (v - metrics[best]).abs() <= 1e-9 * metrics[best].max(1.0);
        if reference.decoded_rank == best && gram.decoded_rank == best && close(reference.metric) && close(gram.metric) {
            agree += 1;
        }
        errors += usize::from(best != rank);
    }
    Outcome::new(
        agree == 100,
        format!("{agree}/100 trials agree on rank and metric ({errors} detection errors at -8 dB)"),
    )
}

fn greedy_toy() -> Outcome {
    let pts = [0.0f64, 1.0, 3.0, 6.0, 10.0, 15.0];
    let dm = DistanceMatrix::from_fn(pts.len(), |i, j| (pts[i] - pts[j]).powi(2));
    let out = greedy_prune(&dm, 4).expect("prune");
    let kept: Vec<f64> = out.survivors.iter().map(|&i| pts[i]).collect();
    Outcome::new(kept == [0.0, 6.0, 10.0, 15.0], format!("survivors {kept:?}"))
}

fn seed_replay() -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = RunConfig {
        schemes: vec![Scheme::Baseline, Scheme::CrpsThenCodebook],
        snr: SnrGrid {
            start: -8.0,
            stop: -4.0,
            step: 2.0,
        },
        pulses: 2_000,
        out_dir: dir.path().join("first"),
        ..RunConfig::default()
    };
    let run = |cfg: &RunConfig| -> imjrc::Result<Vec<u8>> {
        let exp = run_experiment(cfg)?;
        emit_results(&cfg.out_dir, &exp)?;
        Ok(fs::read(cfg.out_dir.join("ber.csv"))?)
    };
    let result = (|| -> imjrc::Result<(Vec<u8>, Vec<u8>, Vec<u8>)> {
        let first = run(&cfg)?;
        let again = run(&RunConfig {
            out_dir: dir.path().join("again"),
            ..cfg.clone()
        })?;
        let mut replayed = config_from_meta(&cfg.out_dir.join("meta.json"))?;
        replayed.out_dir = dir.path().join("replay");
        Ok((first, again, run(&replayed)?))
    })();
    match result {
        Ok((first, again, replay)) => Outcome::new(
            first == again && first == replay && !first.is_empty(),
            format!(
                "{} bytes; rerun identical: {}; meta.json replay identical: {}",
                first.len(),
                first == again,
                first == replay
            ),
        ),
        Err(e) => Outcome::new(false, format!("replay failed: {e}")),
    }
}

/// Evaluates both operation-count expressions one summand at a time.
fn complexity_oracle(p: &SystemParams, d: &DerivedParams, n: u64, big_d: u64) -> (f64, f64) {
    let k = p.num_active as u128;
    let l_r = p.tx_antennas as u128;
    let l_c = p.rx_antennas as u128;
    let l_t = d.samples_per_pulse as u128;
    let c = d.total_codewords as u128;
    let q = d.num_eliminated as u128;
    let synthesis = (k * l_r + (2 * k - 1) * l_t) * l_r * c;
    let mut pair_sum: u128 = 0;
    for i in 1..=q {
        pair_sum += (c - i + 1) * (c - i);
    }
    let half = (3 * l_r * l_t + 1) as f64 / 2.0;
    let per_pulse = (l_r + 3) * l_c * l_t + 1;
    let codebook = synthesis as f64 + half * pair_sum as f64 + (per_pulse * (c - q) * n as u128) as f64;
    let inner = (l_r * l_r * l_t) as f64 + (3 * l_r * l_t + 1) as f64 * (c - 1) as f64 / 2.0;
    let crps = synthesis as f64 + (inner * c as f64 + 1.0) * big_d as f64 + (per_pulse * c * n as u128) as f64;
    (codebook, crps)
}

fn complexity_model() -> Outcome {
    let p = SystemParams::default();
    let d = p.derive().expect("derive");
    let est = estimate_complexity(&p, &d, 100_000, 100).expect("estimate");
    let (codebook, crps) = complexity_oracle(&p, &d, 100_000, 100);
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let find = |s: ComplexityScheme| est.iter().find(|e| e.scheme == s).expect("scheme").operation_count;
    let e_cb = rel(find(ComplexityScheme::ImCodebook), codebook);
    let e_cr = rel(find(ComplexityScheme::ImCrps), crps);
    Outcome::new(
        e_cb <= 1e-9 && e_cr <= 1e-9,
        format!("im_codebook {codebook:.6e} (rel {e_cb:.1e}), im_crps {crps:.6e} (rel {e_cr:.1e})"),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 13] = [
        ("1 parameter accounting", parameter_accounting),
        ("2 scheme ordering", scheme_ordering),
        ("3 relative SNR gains", relative_gains),
        ("4a trend over M", trend_frequencies),
        ("4b trend over L_R", trend_antennas),
        ("5a noiseless BER", noiseless_exactness),
        ("5b MED trace monotone", med_trace_monotone),
        ("5c TPS selection", tps_selection),
        ("5d energy conservation", energy_conservation),
        ("5e detector oracle", detector_oracle),
        ("5f greedy toy", greedy_toy),
        ("5g seed replay", seed_replay),
        ("5h complexity oracle", complexity_model),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {name} [{:.1} s]: {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
        failed += usize::from(!out.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
