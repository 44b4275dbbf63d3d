use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nsk_cli::driver::{run_command, study_command, verify_command};
use nsk_cli::CliError;

#[derive(Parser)]
#[command(
    name = "nsk",
    version,
    about = "Navier-Stokes-Korteweg finite-volume solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mesh-refinement study.
    Study {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Property suite on built-in fixtures.
    Verify {
        /// 8x8 fixtures only.
        #[arg(long)]
        quick: bool,
    },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out } => {
            let r = run_command(&config, out.as_deref())?;
            let last = r.rows.last().expect("a run records t = 0");
            println!(
                "run finished: {} steps, {} records, t = {:.6e}, energy {:.12e}, min density {:.6e}",
                r.steps,
                r.rows.len(),
                last.t,
                last.energy,
                last.min_density
            );
            println!("wrote {}", r.dir.display());
        }
        Command::Study { config, out } => {
            let (dir, report) = study_command(&config, out.as_deref())?;
            for (k, &(m, n)) in report.levels.iter().enumerate() {
                println!(
                    "{m}x{n}: R1 {:.4e}  R2 {:.4e}  lambda*h {:.4e}  steps {}",
                    report.residual_r1[k],
                    report.residual_r2[k],
                    report.lambda_h[k],
                    report.steps[k]
                );
            }
            println!("wrote {}", dir.display());
        }
        Command::Verify { quick } => {
            let reports = verify_command(quick)?;
            for r in &reports {
                println!("{}", r.line());
            }
            let failed: Vec<&str> = reports
                .iter()
                .filter(|r| !r.passed())
                .map(|r| r.name.as_str())
                .collect();
            if !failed.is_empty() {
                return Err(CliError::Verification(failed.join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
