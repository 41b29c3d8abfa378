use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use netmfg_cli::{
    cmd_oracle, cmd_psi_once, cmd_solve, cmd_validate, exit_code, OracleOptions, PsiOnceOptions,
    SolveOptions,
};

/// Mean-field equilibrium solver for flows on acyclic transportation networks.
#[derive(Parser)]
#[command(name = "netmfg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print every assumption check.
    Validate { scenario: PathBuf },
    /// Run the damped fixed-point iteration and export trajectories.
    Solve {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Enable mass-dependent speed limits.
        #[arg(long)]
        constrained: bool,
        /// Disable data parallelism.
        #[arg(long)]
        sequential: bool,
    },
    /// Apply the equilibrium map once and export every stage.
    PsiOnce {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Input masses as written by `solve` or `psi-once`.
        #[arg(long, conflicts_with = "zero", required_unless_present = "zero")]
        mass: Option<PathBuf>,
        /// Start from the zero mass field.
        #[arg(long)]
        zero: bool,
        #[arg(long)]
        constrained: bool,
        #[arg(long)]
        sequential: bool,
    },
    /// Compare values and mass balance with brute-force recomputation.
    Oracle {
        scenario: PathBuf,
        #[arg(long = "max-n", alias = "max-N", default_value_t = netmfg::oracle::DEFAULT_MAX_STEPS)]
        max_n: usize,
        /// Override the scenario's number of grid steps.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, hide = true, default_value_t = 0)]
        inject_tau_offset: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Solve {
            scenario,
            out,
            gamma,
            tol,
            max_iter,
            constrained,
            sequential,
        } => cmd_solve(
            &scenario,
            &out,
            &SolveOptions {
                gamma,
                tol,
                max_iter,
                constrained,
                sequential,
            },
        ),
        Command::PsiOnce {
            scenario,
            out,
            mass,
            zero: _,
            constrained,
            sequential,
        } => cmd_psi_once(
            &scenario,
            &out,
            &PsiOnceOptions {
                mass,
                constrained,
                sequential,
            },
        ),
        Command::Oracle {
            scenario,
            max_n,
            steps,
            inject_tau_offset,
        } => cmd_oracle(
            &scenario,
            &OracleOptions {
                max_steps: max_n,
                steps,
                fault_offset: inject_tau_offset,
            },
        ),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
