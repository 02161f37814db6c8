use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochassign_cli::{
    cmd_design, cmd_learn, cmd_reproduce, cmd_spectrum, parse_config, parse_gain,
    report_exit_code, CliError, ExperimentConfig, RunOptions, RunReport,
};

#[derive(Parser)]
#[command(name = "stochassign", version, about = "Spectrum assignment for systems with multiplicative noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent repetitions
    #[arg(long)]
    repeats: Option<usize>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Learning trace CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Model-based gain design
    Design {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-free learning against the simulator
    Learn {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Operator spectrum under a given gain
    Spectrum {
        #[arg(long)]
        config: PathBuf,
        /// Comma or space separated gain entries
        #[arg(long, allow_hyphen_values = true)]
        gain: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a bundled example (example1 or example2)
    Reproduce {
        name: String,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(vec![format!("cannot read config {}: {e}", path.display())]))?;
    parse_config(&text)
}

fn options(run: &RunArgs) -> RunOptions {
    RunOptions {
        seed: run.seed,
        repeats: run.repeats,
        trace: run.trace.clone(),
    }
}

fn emit(report: &RunReport, out: Option<&PathBuf>) -> Result<(), CliError> {
    let target = out
        .cloned()
        .or_else(|| report.config.output.report.as_ref().map(PathBuf::from));
    match target {
        Some(path) => std::fs::write(&path, report.to_json() + "\n")
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", report.to_json()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let (report, out) = match &cli.command {
        Command::Design { config, out } => (cmd_design(&load(config)?)?, out.as_ref()),
        Command::Spectrum { config, gain, out } => {
            (cmd_spectrum(&load(config)?, &parse_gain(gain)?)?, out.as_ref())
        }
        Command::Learn { config, run } => (cmd_learn(&load(config)?, &options(run))?, run.out.as_ref()),
        Command::Reproduce { name, run } => (cmd_reproduce(name, &options(run))?, run.out.as_ref()),
    };
    emit(&report, out)?;
    let code = report_exit_code(&report);
    if code != 0 {
        eprintln!("error: learning did not converge on every repetition");
    }
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
