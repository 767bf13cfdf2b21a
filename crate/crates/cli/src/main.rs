use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mring_cli::{
    emit_config, mismatch_csv, profile_csv, read_config, to_json, with_manifest, write_output,
    CliError, CliResult, RunManifest,
};
use mring_core::lab::measure_period_with;
use mring_core::numeric::PAIR_WINDOW;
use mring_core::{
    diagonalize_ring, extract_majorana_pair, oscillation_period, parse_gates, run_gate_sequence,
    solve_ring_bound_energies, transfer_with_steps, Error, MajoranaLabel, MajoranaTarget, PeakFit,
    RingConfig, TransferReport,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "mring",
    version,
    about = "Majorana oscillation experiments on a quantum-walk ring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Quasi-energies of the ring (numeric by default).
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, conflicts_with = "analytic")]
        numeric: bool,
        #[arg(long)]
        analytic: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Site probabilities of the bound-state pair at E = 0 or pi (CSV).
    Profile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "0")]
        energy: EnergyArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-period Majorana transfer for one symmetric ring.
    Transfer {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the per-site mismatch profile as CSV.
        #[arg(long)]
        per_site: Option<PathBuf>,
    },
    /// All six transfer rows plus the ten-gate sequence.
    Table1 {
        #[arg(long, default_value_t = 0.25)]
        theta_over_pi: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measured revival period against the two-level prediction.
    Period {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2000)]
        horizon: usize,
        #[arg(long, value_enum, default_value = "lobe")]
        fit: FitArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gate sequence of C0 (`0`) and C1 (`1`) applied left to right.
    Sequence {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "1011011011")]
        gates: String,
        #[arg(long, default_value = "0")]
        start: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EnergyArg {
    #[value(name = "0")]
    Zero,
    #[value(name = "pi")]
    Pi,
}

#[derive(Clone, Copy, ValueEnum)]
enum FitArg {
    Lobe,
    ThreePoint,
}

const TABLE1_ROWS: [(usize, f64); 6] = [
    (4, 0.05),
    (4, 0.025),
    (5, 0.05),
    (5, 0.025),
    (6, 0.05),
    (6, 0.025),
];

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mring: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn finish<T: serde::Serialize>(
    body: &T,
    mut manifest: RunManifest,
    started: Instant,
    out: Option<&Path>,
) -> CliResult<()> {
    if let Some(p) = out {
        manifest.outputs.insert(0, p.display().to_string());
    }
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    write_output(out, &to_json(&with_manifest(body, &manifest)?)?)
}

fn config_value(path: &Path) -> CliResult<(RingConfig, Value, Option<usize>)> {
    let cfg = read_config(path)?;
    let ring = cfg.ring()?;
    let value: Value = serde_json::from_str(&emit_config(&cfg)?)?;
    Ok((ring, value, cfg.steps))
}

fn run(command: Command) -> CliResult<()> {
    let started = Instant::now();
    match command {
        Command::Spectrum {
            config,
            analytic,
            out,
            ..
        } => {
            let (ring, params, _) = config_value(&config)?;
            let method = if analytic { "analytic" } else { "numeric" };
            let manifest =
                RunManifest::new("spectrum", json!({"config": params, "method": method}));
            let body = if analytic {
                json!({ "solutions": solve_ring_bound_energies(&ring)? })
            } else {
                json!({ "quasi_energies": diagonalize_ring(&ring)?.quasi_energies() })
            };
            finish(&body, manifest, started, out.as_deref())
        }
        Command::Profile {
            config,
            energy,
            out,
        } => {
            let (ring, _, _) = config_value(&config)?;
            let target = match energy {
                EnergyArg::Zero => MajoranaTarget::Zero,
                EnergyArg::Pi => MajoranaTarget::Pi,
            };
            let spectrum = diagonalize_ring(&ring)?;
            let (a, b) = match extract_majorana_pair(&spectrum, target, &ring) {
                Ok(pair) => pair,
                Err(Error::NoDoublet { .. } | Error::NotDegenerate { .. }) => {
                    split_pair(&spectrum, target)?
                }
                Err(e) => return Err(e.into()),
            };
            let csv = profile_csv(&a.site_probabilities(), &b.site_probabilities());
            write_output(out.as_deref(), &csv)
        }
        Command::Transfer {
            config,
            out,
            per_site,
        } => {
            let (ring, params, steps) = config_value(&config)?;
            let report = transfer_with_steps(&ring, steps)?;
            if let Some(p) = &per_site {
                write_output(Some(p), &mismatch_csv(&report.per_site_mismatch))?;
            }
            let mut manifest = RunManifest::new("transfer", json!({ "config": params }));
            manifest
                .outputs
                .extend(per_site.iter().map(|p| p.display().to_string()));
            finish(&report, manifest, started, out.as_deref())
        }
        Command::Table1 { theta_over_pi, out } => {
            let theta = theta_over_pi * std::f64::consts::PI;
            let rows = table1_rows(theta)?;
            let seq_config = RingConfig::symmetric(4, theta, 0.05 * std::f64::consts::PI)?;
            let sequence = run_gate_sequence(
                &parse_gates("1011011011")?,
                &seq_config,
                MajoranaLabel::Zero,
            )?;
            let manifest = RunManifest::new("table1", json!({ "theta_over_pi": theta_over_pi }));
            let body = json!({ "rows": rows, "sequence": sequence });
            finish(&body, manifest, started, out.as_deref())
        }
        Command::Period {
            config,
            horizon,
            fit,
            out,
        } => {
            let (ring, params, _) = config_value(&config)?;
            let m = ring
                .half()
                .ok_or_else(|| Error::InvalidConfig("period needs a symmetric ring".into()))?;
            let (fit, fit_name) = match fit {
                FitArg::Lobe => (PeakFit::LobeLeastSquares, "lobe"),
                FitArg::ThreePoint => (PeakFit::ThreePoint, "three_point"),
            };
            let predicted = oscillation_period(m, ring.theta, ring.alpha)?;
            let measured = measure_period_with(&ring, horizon, fit)?;
            let manifest = RunManifest::new(
                "period",
                json!({"config": params, "horizon": horizon, "fit": fit_name}),
            );
            let body = json!({
                "M": m,
                "period_measured": measured,
                "period_predicted": predicted,
                "relative_deviation": (measured - predicted) / predicted,
            });
            finish(&body, manifest, started, out.as_deref())
        }
        Command::Sequence {
            config,
            gates,
            start,
            out,
        } => {
            let (ring, params, _) = config_value(&config)?;
            let ops = parse_gates(&gates)?;
            let start_label: MajoranaLabel = start.parse()?;
            let result = run_gate_sequence(&ops, &ring, start_label)?;
            let manifest = RunManifest::new(
                "sequence",
                json!({"config": params, "gates": gates, "start": start_label}),
            );
            finish(&result, manifest, started, out.as_deref())
        }
    }
}

/// The two eigenstates nearest `target` when they are split rather than
/// degenerate, higher quasi-energy first.
fn split_pair(
    spectrum: &mring_core::QuasiEnergySpectrum,
    target: MajoranaTarget,
) -> CliResult<(mring_core::WalkerState, mring_core::WalkerState)> {
    let idx = spectrum.nearest(target.energy(), 2);
    let e = spectrum.quasi_energies();
    let distance = mring_core::linalg::angular_distance(e[idx[1]], target.energy());
    if distance > PAIR_WINDOW {
        return Err(Error::NoDoublet {
            target: target.energy(),
            distance,
        }
        .into());
    }
    let (hi, lo) = if e[idx[0]] >= e[idx[1]] {
        (idx[0], idx[1])
    } else {
        (idx[1], idx[0])
    };
    let v = spectrum.eigenvectors();
    Ok((v[hi].clone(), v[lo].clone()))
}

fn table1_rows(theta: f64) -> CliResult<Vec<TransferReport>> {
    let configs = TABLE1_ROWS
        .iter()
        .map(|&(m, a)| RingConfig::symmetric(m, theta, a * std::f64::consts::PI))
        .collect::<mring_core::Result<Vec<_>>>()?;
    let results: Vec<mring_core::Result<TransferReport>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| s.spawn(move || mring_core::half_period_transfer(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("table row worker panicked"))
            .collect()
    });
    results
        .into_iter()
        .map(|r| r.map_err(CliError::from))
        .collect()
}
