use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbsde_cli::error::{EXIT_INVALID, EXIT_PASS};
use qbsde_cli::output::{merge_plotdata, write_plotdata};
use qbsde_cli::{run_scenario, run_suite, with_threads, CliError, RunOptions};

#[derive(Parser)]
#[command(name = "qbsde", version, about = "Quadratic BSDE and reflected BSDE scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Replace the Monte Carlo seed of every scenario.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, env = "QBSDE_THREADS")]
    threads: Option<usize>,
    /// Leave wall-clock fields out so reports are byte-reproducible.
    #[arg(long)]
    canonical_output: bool,
    #[arg(long, default_value = "qbsde-out")]
    out_dir: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario config.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run every *.json config in a directory.
    Suite {
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Merge solution and envelope CSVs into one tidy table.
    Plotdata {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

fn options(c: &Common) -> RunOptions {
    RunOptions { out_dir: c.out_dir.clone(), canonical: c.canonical_output, seed_override: c.seed_override }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let opts = options(&common);
            let report = with_threads(common.threads, || run_scenario(&config, &opts))??;
            println!("{} {} exit={}", report.scenario_id, report.status, report.exit_code);
            Ok(report.exit_code)
        }
        Command::Suite { suite, common } => {
            let opts = options(&common);
            let (code, rows) = with_threads(common.threads, || run_suite(&suite, &opts))??;
            for r in &rows {
                println!("{:<40} {:<10} exit={}", r.scenario_id, r.status, r.exit_code);
            }
            println!("{} scenarios, aggregate exit {code}", rows.len());
            Ok(code)
        }
        Command::Plotdata { out, inputs } => {
            let refs: Vec<&std::path::Path> = inputs.iter().map(|p| p.as_path()).collect();
            let rows = merge_plotdata(&refs)?;
            write_plotdata(&out, &rows)?;
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
