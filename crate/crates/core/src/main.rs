use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pathslice::cli::run::{exit_code_for, EXIT_IO};
use pathslice::cli::{parse_config, run, Command, Summary};

#[derive(Parser)]
#[command(name = "pathslice", version, about = "Time-sliced short-time propagators for the Schrödinger equation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML config with [grid], [potential] and [experiment] sections.
    #[arg(long)]
    config: PathBuf,
    /// Exit with status 5 when resolution warnings were raised.
    #[arg(long)]
    strict: bool,
    /// Output directory; overrides experiment.output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Composed convergence over the slice ladder.
    ///
    /// converge.csv columns: slices, mesh, error (L2 distance to the reference).
    Converge(Common),
    /// Single-step error over the dt ladder.
    ///
    /// single-step.csv columns: dt, error.
    SingleStep(Common),
    /// Sup-norm of the residual amplitude g_N over the dt ladder.
    ///
    /// parametrix.csv columns: dt, norm.
    Parametrix(Common),
    /// Action coefficients W_1..W_N on a table_points x table_points sample.
    ///
    /// action-table.csv columns: x, y, W1_re, W1_im, ..., WN_re, WN_im.
    ActionTable(Common),
    /// Frozen-slice amplitude norms and the potential regularity report.
    ///
    /// norms.csv columns: dt, norm. regularity.csv columns: k, alpha, norm.
    Norms(Common),
    /// Invariant checks on the configured potential and state.
    ///
    /// verify.csv columns: check, value, threshold, passed (0 or 1).
    Verify(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Converge(c) => (Command::Converge, c),
        Cmd::SingleStep(c) => (Command::SingleStep, c),
        Cmd::Parametrix(c) => (Command::Parametrix, c),
        Cmd::ActionTable(c) => (Command::ActionTable, c),
        Cmd::Norms(c) => (Command::Norms, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let cfg = match parse_config(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("pathslice: {e}");
            if let Some(dir) = &common.out {
                let summary = Summary::from_error(command, &e);
                if std::fs::create_dir_all(dir).is_ok() {
                    let _ = std::fs::write(
                        dir.join("summary.json"),
                        serde_json::to_string_pretty(&summary).unwrap_or_default() + "\n",
                    );
                }
            }
            return ExitCode::from(exit_code_for(&e) as u8);
        }
    };
    match run(&cfg, command, common.strict, common.out.as_deref()) {
        Ok(out) => {
            let s = &out.summary;
            match (&s.message, s.fitted_order) {
                (Some(m), _) => eprintln!("pathslice {}: {m}", s.command),
                (None, Some(p)) => println!(
                    "{}: fitted order {p:.3} (target {}, tolerance {}) {}",
                    s.command,
                    s.target.unwrap_or(f64::NAN),
                    s.tolerance.unwrap_or(f64::NAN),
                    if s.passed { "PASS" } else { "FAIL" }
                ),
                (None, None) => println!("{}: {}", s.command, if s.passed { "PASS" } else { "FAIL" }),
            }
            println!("results in {}", out.dir.display());
            ExitCode::from(s.exit_code as u8)
        }
        Err(e) => {
            eprintln!("pathslice: {e}");
            ExitCode::from(EXIT_IO as u8)
        }
    }
}
