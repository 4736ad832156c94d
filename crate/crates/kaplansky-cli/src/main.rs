use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kaplansky_cli::commands::{
    cmd_decompose, cmd_diagonalize, cmd_solve, cmd_validate, CmdOutcome,
};
use kaplansky_cli::{CliError, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "kaplansky",
    version,
    about = "Spectral decompositions and partial integral equation solvability \
             for operator bundles over atomic measure spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a kernel file: schema, self-adjointness, Hilbert-Schmidt weights.
    Validate {
        /// Kernel JSON file.
        input: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Decompose a kernel (spectral form) or matrix field (central diagonal form).
    Decompose {
        /// Kernel or matrix-field JSON file.
        input: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Decide solvability of T f = lambda f and extract a witness.
    Solve {
        /// Kernel JSON file.
        kernel: PathBuf,
        /// Step-function JSON file holding lambda.
        lambda: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Diagonalize a self-adjoint matrix field: U* x U = D.
    Diagonalize {
        /// Matrix-field JSON file.
        input: PathBuf,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Text,
}

#[derive(Args)]
struct CommonOpts {
    /// Relative tolerance deciding numerical rank per fiber.
    #[arg(long, default_value_t = kaplansky_core::DEFAULT_RANK_TOL)]
    rank_tol: f64,
    /// Absolute tolerance for matching eigenvalue branches.
    #[arg(long, default_value_t = kaplansky_core::DEFAULT_SOLVE_TOL)]
    solve_tol: f64,
    /// Absolute tolerance standing in for almost-everywhere equality.
    #[arg(long, default_value_t = kaplansky_core::DEFAULT_EQUALITY_TOL)]
    equality_tol: f64,
    /// Maximum concurrent fibers (0 = one thread per core).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Stdout format.
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    format: FormatArg,
    /// Also write the JSON report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonOpts {
    fn config(&self) -> RunConfig {
        RunConfig {
            rank_tol: self.rank_tol,
            solve_tol: self.solve_tol,
            equality_tol: self.equality_tol,
            parallelism: self.parallelism,
            output_format: match self.format {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Text => OutputFormat::Text,
            },
        }
    }

    fn prepare(&self) -> Result<RunConfig, CliError> {
        let config = self.config();
        config.validate()?;
        kaplansky_core::configure_parallelism(config.parallelism).map_err(CliError::domain)?;
        Ok(config)
    }
}

fn read_input(path: &PathBuf) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<(CmdOutcome, &CommonOpts), CliError> {
    match &cli.command {
        Command::Validate { input, opts } => {
            let config = opts.prepare()?;
            Ok((cmd_validate(&read_input(input)?, &config)?, opts))
        }
        Command::Decompose { input, opts } => {
            let config = opts.prepare()?;
            Ok((cmd_decompose(&read_input(input)?, &config)?, opts))
        }
        Command::Solve {
            kernel,
            lambda,
            opts,
        } => {
            let config = opts.prepare()?;
            Ok((
                cmd_solve(&read_input(kernel)?, &read_input(lambda)?, &config)?,
                opts,
            ))
        }
        Command::Diagonalize { input, opts } => {
            let config = opts.prepare()?;
            Ok((cmd_diagonalize(&read_input(input)?, &config)?, opts))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((outcome, opts)) => {
            match opts.format {
                FormatArg::Json => print!("{}", outcome.report_json),
                FormatArg::Text => print!("{}", outcome.text),
            }
            if let Some(path) = &opts.out {
                if let Err(e) = fs::write(path, &outcome.report_json) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            ExitCode::from(outcome.code as u8)
        }
        Err(error) => {
            eprintln!("{error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
