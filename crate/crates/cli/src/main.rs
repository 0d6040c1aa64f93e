//! `qbessel`: evaluate, tabulate and verify higher-order q-Bessel functions
//! and q-heat solutions.

mod config;
mod error;
mod eval;
mod output;
mod solve;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{GlobalArgs, RunConfig};
use error::{CliError, CliResult};
use eval::{evaluate, fmt_num, Target, TargetArgs};

#[derive(Debug, Parser)]
#[command(name = "qbessel", version, about)]
struct Cli {
    #[command(flatten)]
    globals: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a function at one point.
    #[command(allow_negative_numbers = true)]
    Eval {
        target: Target,
        #[arg(long)]
        x: f64,
        /// Time variable of heatpoly and kernel.
        #[arg(long)]
        t: Option<f64>,
        #[command(flatten)]
        args: TargetArgs,
    },
    /// Tabulate a function on the lattice points q^kmin..q^kmax.
    #[command(allow_negative_numbers = true)]
    Table {
        target: Target,
        /// Comma-separated times for heatpoly and kernel.
        #[arg(long, value_delimiter = ',')]
        t: Vec<f64>,
        #[command(flatten)]
        args: TargetArgs,
    },
    /// Check identities and report PASS/FAIL per check.
    Verify { suite: verify::Suite },
    /// Solve the q-heat problem for lattice initial data read from a CSV file.
    #[command(allow_negative_numbers = true)]
    Solve {
        /// CSV file with header `x,value`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        t: f64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.globals)?;
    match cli.command {
        Command::Eval { target, x, t, args } => {
            let p = evaluate(target, &cfg, &args, x, t)?;
            println!("{}", fmt_num(p.value));
            eprintln!("terms={} tail={}", p.terms, fmt_num(p.tail));
        }
        Command::Table { target, t, args } => {
            let times: Vec<Option<f64>> = if target.uses_time() {
                if t.is_empty() {
                    return Err(CliError::Config(format!("{target:?} tables need --t")));
                }
                t.into_iter().map(Some).collect()
            } else {
                vec![None]
            };
            let mut rows = Vec::new();
            for (_, x) in cfg.grid() {
                for &tt in &times {
                    let p = evaluate(target, &cfg, &args, x, tt)?;
                    let mut row = vec![fmt_num(x)];
                    row.extend(tt.map(fmt_num));
                    row.extend([fmt_num(p.value), p.terms.to_string(), fmt_num(p.tail)]);
                    rows.push(row);
                }
            }
            let header: &[&str] = if target.uses_time() {
                &["x", "t", "value", "terms", "tail"]
            } else {
                &["x", "value", "terms", "tail"]
            };
            output::write_out(cfg.csv.as_deref(), &output::csv_bytes(header, &rows)?)?;
        }
        Command::Verify { suite } => {
            let (lines, ok) = verify::verify(&cfg, suite)?;
            for l in &lines {
                println!("{l}");
            }
            if !ok {
                return Err(CliError::Verification("verification failed".into()));
            }
        }
        Command::Solve { input, t } => {
            if !(t > 0.0) {
                return Err(CliError::Config(format!("t must be positive, got {t}")));
            }
            let f = solve::read_samples(&input, cfg.base.q)?;
            let rows = solve::solve_rows(&cfg, &f, t)?;
            output::write_out(cfg.csv.as_deref(), &output::csv_bytes(&["x", "t", "u", "residual"], &rows)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbessel: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
