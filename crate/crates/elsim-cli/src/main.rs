use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use elsim::formats::{parse_series, ScenarioConfig};
use elsim::harness::{
    emit_report, fit_decay, load_records, run_scenario, run_sweep, save_record, status_label, sweep_summary_csv,
    RunOptions, Status, SweepSpec,
};
use elsim::verification::{run_suite, Suite};

const EXIT_CONFIG: u8 = 2;
const EXIT_BLOWUP: u8 = 3;
const EXIT_VERIFY: u8 = 4;

/// Pseudo-spectral simulator and verification lab for the inertial
/// Ericksen-Leslie system.
#[derive(Parser, Debug)]
#[command(name = "elsim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write record.json, series.csv (and checkpoints) to --out.
    Run {
        /// Scenario config (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Fixed time step instead of the CFL rule.
        #[arg(long)]
        dt: Option<f64>,
        /// Store a checkpoint at every sampling time.
        #[arg(long)]
        checkpoints: bool,
    },
    /// Run a verification suite; exits 4 if any check fails.
    Verify {
        /// oracles | commutation | sobolev | duhamel | all
        #[arg(long)]
        suite: Suite,
    },
    /// Run a parameter sweep described by a JSON file with `base` config and axis lists.
    Sweep {
        /// Sweep description (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a power law `value ~ <t>^p` to one column of a series CSV.
    FitDecay {
        /// Series CSV.
        #[arg(long)]
        series: PathBuf,
        /// Column name from the header row.
        #[arg(long)]
        column: String,
        /// Fit window `T0:T1`.
        #[arg(long, value_parser = parse_window)]
        window: (f64, f64),
        /// Divide values by (ln<t>)^(1/2) before fitting.
        #[arg(long)]
        log_corrected: bool,
    },
    /// Regenerate summary tables, log-log data and SVG plots from saved runs.
    Report {
        /// A run directory or a directory of run directories.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("window `{s}` is not T0:T1"))?;
    let t0: f64 = a.trim().parse().map_err(|_| format!("bad window start `{a}`"))?;
    let t1: f64 = b.trim().parse().map_err(|_| format!("bad window end `{b}`"))?;
    if !(t0.is_finite() && t1.is_finite() && t0 < t1) {
        return Err(format!("window `{s}` must satisfy T0 < T1"));
    }
    Ok((t0, t1))
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl Into<String>) -> Failure {
    Failure { code, msg: msg.into() }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Failure> {
    let text = read_text(path)?;
    let cfg = ScenarioConfig::from_json(&text).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

fn internal(e: impl std::fmt::Display) -> Failure {
    fail(1, e.to_string())
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run { config, out, dt, checkpoints } => {
            let cfg = load_config(&config)?;
            if let Some(h) = dt {
                if !(h.is_finite() && h > 0.0) {
                    return Err(fail(EXIT_CONFIG, format!("--dt must be positive, got {h}")));
                }
            }
            let opts = RunOptions { dt, store_checkpoints: checkpoints, ..Default::default() };
            let rec = run_scenario(&cfg, &opts).map_err(internal)?;
            save_record(&rec, &out).map_err(internal)?;
            println!("status {}", status_label(&rec.status));
            println!("frames {}", rec.frames.len());
            if let Some(h) = rec.initial_h_lambda {
                println!("h_lambda_0 {h:.6e}");
            }
            if let Status::Blowup { .. } = rec.status {
                return Err(fail(EXIT_BLOWUP, format!("blow-up detected; record written to {}", out.display())));
            }
            Ok(())
        }
        Command::Verify { suite } => {
            let checks = run_suite(suite).map_err(|e| fail(EXIT_VERIFY, format!("verification could not run: {e}")))?;
            let mut failed = 0;
            for c in &checks {
                println!("{c}");
                if !c.passed() {
                    failed += 1;
                }
            }
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Err(fail(EXIT_VERIFY, format!("{failed} check(s) failed")));
            }
            Ok(())
        }
        Command::Sweep { config, out } => {
            let text = read_text(&config)?;
            let spec = SweepSpec::from_json(&text).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", config.display())))?;
            let res = run_sweep(&spec.base, &spec.axes(), &RunOptions::default(), spec.cap)
                .map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", config.display())))?;
            fs::create_dir_all(&out).map_err(|e| internal(format!("{}: {e}", out.display())))?;
            let mut blowups = 0;
            for (i, r) in res.records.iter().enumerate() {
                match r {
                    Ok(rec) => {
                        save_record(rec, &out.join(format!("run_{i:03}"))).map_err(internal)?;
                        if matches!(rec.status, Status::Blowup { .. }) {
                            blowups += 1;
                        }
                    }
                    Err(e) => eprintln!("run {i}: {e}"),
                }
            }
            let p = out.join("sweep_summary.csv");
            let table = sweep_summary_csv(&res.summary);
            fs::write(&p, &table).map_err(|e| internal(format!("{}: {e}", p.display())))?;
            print!("{table}");
            if blowups > 0 {
                return Err(fail(EXIT_BLOWUP, format!("{blowups} run(s) blew up")));
            }
            Ok(())
        }
        Command::FitDecay { series, column, window, log_corrected } => {
            let bytes = fs::read(&series).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", series.display())))?;
            let s = parse_series(&bytes).map_err(|e| fail(EXIT_CONFIG, format!("{}: {e}", series.display())))?;
            let pts = s
                .pairs(&column)
                .ok_or_else(|| fail(EXIT_CONFIG, format!("{}: no column `{column}`", series.display())))?;
            let fit = fit_decay(&pts, window, log_corrected).map_err(|e| fail(EXIT_CONFIG, format!("{column}: {e}")))?;
            println!("exponent {:.6}", fit.exponent);
            println!("intercept {:.6}", fit.intercept);
            println!("residual {:.3e}", fit.residual);
            println!("samples {}", fit.samples);
            Ok(())
        }
        Command::Report { input, out } => {
            let records = load_records(&input).map_err(|e| fail(EXIT_CONFIG, e.to_string()))?;
            let bundle = emit_report(&records, &out).map_err(internal)?;
            println!("{} runs, {} files written to {}", records.len(), bundle.files.len(), out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
