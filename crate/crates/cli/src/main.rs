use std::path::PathBuf;
use std::process::ExitCode;

use cauchy_cli::run::{self, load_config};
use cauchy_cli::{demos, CliError, RunOptions, ScenarioConfig};
use clap::{Args, Parser, Subcommand};

/// Cauchy problem for the Cauchy-Riemann operator on a lens cut from a disc.
///
/// Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical failure.
#[derive(Parser)]
#[command(name = "cauchy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory, overriding `output.directory`.
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Fail unless the run used no random numbers.
    #[arg(long)]
    seed_free: bool,
    /// Reconstruct even when the verdict is NOT_SOLVABLE.
    #[arg(long)]
    force_reconstruct: bool,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions { output: self.output.clone(), force_reconstruct: self.force_reconstruct, seed_free: self.seed_free }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; writes report.json, coefficients.csv, field.csv and plot.gp.
    Solve {
        /// Scenario TOML, or a report.json whose config echo is re-run.
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Validate the config, sample the data and report compatibility.
    Check {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
    },
    /// Write basis.csv with columns nu, degree, lambda, provenance.
    Basis {
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "DIR")]
        output: Option<PathBuf>,
    },
    /// List or run the bundled demo scenarios.
    Demo {
        /// Print the catalog names.
        #[arg(long)]
        list: bool,
        /// Case name, e.g. POLE_OUTSIDE.
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn summary(report: &run::RunReport) {
    let s = &report.solvability;
    println!("verdict: {}", s.verdict);
    println!("rho_hat: {:.6}  tail_increment: {:.3e}  growth: {:.3}", s.rho_hat, s.tail_increment, s.growth);
    let t = &report.truncation;
    println!("suggested N: {}  predicted error: {:.3e}", t.n, t.predicted_error);
    if let Some(e) = report.reconstruction.as_ref().and_then(|r| r.errors) {
        println!("sup error: {:.3e}  rms error: {:.3e}", e.sup, e.l2);
    }
    if let Some(p) = &report.potential {
        if let Some(e) = p.sup_error {
            println!("potential sup error: {e:.3e}");
        }
        println!("loop residual: {:.3e}  sup |g|: {:.3}", p.loop_residual, p.sup_g);
    }
    println!("artifacts: {} -> {}", report.artifacts.join(", "), report.config.output.directory.display());
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Solve { config, common } => {
            let cfg = load_config(&config)?;
            summary(&run::solve(&cfg, &common.options())?);
        }
        Command::Check { config } => {
            for line in run::check(&load_config(&config)?)? {
                println!("{line}");
            }
        }
        Command::Basis { config, output } => {
            let opts = RunOptions { output, ..RunOptions::default() };
            let path = run::basis(&load_config(&config)?, &opts)?;
            println!("{}", path.display());
        }
        Command::Demo { list, name, common } => {
            if list {
                for n in demos::names() {
                    println!("{n}");
                }
                return Ok(());
            }
            let cfg: ScenarioConfig = demos::config(name.as_deref().unwrap_or_default())?;
            summary(&run::solve(&cfg, &common.options())?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
