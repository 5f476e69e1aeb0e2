use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mfs_core::bench::{emit_basis_samples, fit_growth_rate, run_sweep, ExperimentConfig, SweepRow, SweepTable};
use mfs_core::{solve, Exec, Method, Result};

#[derive(Parser)]
#[command(name = "mfs", version, about = "Method of fundamental solutions for 2D Laplace problems")]
struct Cli {
    /// Run every loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and print the record as CSV.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the first N of the config.
        #[arg(long)]
        n: Option<usize>,
        /// Defaults to the first method of the config.
        #[arg(long)]
        method: Option<Method>,
    },
    /// Run the configured sweep and write the table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Falls back to `output` in the config, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample every basis function along the domain boundary.
    Basis {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        method: Option<Method>,
    },
    /// Fit ln(cond2) against N for one method of a sweep table.
    Fit {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        method: Method,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    match run(cli.command, exec) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn pick_method(config: &ExperimentConfig, method: Option<Method>) -> Method {
    method.unwrap_or(config.methods[0])
}

fn run(command: Command, exec: Exec) -> Result<()> {
    match command {
        Command::Solve { config, n, method } => {
            let config = ExperimentConfig::load(&config)?;
            let method = pick_method(&config, method);
            let n = n.unwrap_or(config.n_values[0]);
            let sol = solve(&config.problem(), method, n, exec)?;
            let mut row = SweepRow::from_record(&sol.record);
            if !config.timing {
                row.runtime_ms = 0.0;
            }
            SweepTable { rows: vec![row] }.write_csv(io::stdout().lock())
        }
        Command::Sweep { config, out } => {
            let config = ExperimentConfig::load(&config)?;
            let outcome = run_sweep(&config, exec);
            for f in &outcome.failures {
                eprintln!("error: {} N={}: {}", f.method, f.n, f.error);
            }
            match out.or_else(|| config.output.clone()) {
                Some(path) => outcome.table.save(&path),
                None => outcome.table.write_csv(io::stdout().lock()),
            }
        }
        Command::Basis { config, n, samples, out, method } => {
            let config = ExperimentConfig::load(&config)?;
            let method = pick_method(&config, method);
            let problem = config.problem();
            let sol = solve(&problem, method, n, exec)?;
            let b = emit_basis_samples(&sol.model, &problem.domain, samples, exec)?;
            for path in b.save(&out)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Fit { input, method } => {
            let table = SweepTable::load(&input)?;
            let fit = fit_growth_rate(&table, method)?;
            println!("slope,intercept,rows");
            println!("{:e},{:e},{}", fit.slope, fit.intercept, fit.rows_used);
            Ok(())
        }
    }
}
