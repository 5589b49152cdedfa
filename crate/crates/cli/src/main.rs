use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use lcbounds_cli::render::render;
use lcbounds_cli::run::{parse_stages, run, RunOptions, RunStatus};
use lcbounds_cli::Stage;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lcbounds", version, about = "Moment and tail bounds for random fields, checked by simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the stages listed in the spec (or in --stage).
    Run(RunArgs),
    /// Norms of one sampled field.
    Norms(SpecArgs),
    /// Entropy profile of the index space.
    Entropy(SpecArgs),
    /// Moment bounds for every (p, Q).
    Bound(SpecArgs),
    /// Monte Carlo moments of normed sums against the bounds.
    Simulate(SpecArgs),
    /// Full domination suite; exits 1 if any bound is violated.
    Validate(SpecArgs),
    /// Convert report files to CSV tables.
    Render {
        /// Report JSON files.
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = "tables")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec's root seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: SpecArgs,
    /// Comma-separated stages; overrides the spec. An empty list runs nothing.
    #[arg(long)]
    stage: Option<String>,
}

fn options(a: SpecArgs, stages: Option<Vec<Stage>>) -> RunOptions {
    RunOptions {
        spec: a.spec,
        stages,
        out: a.out,
        seed: a.seed,
        jobs: a.jobs,
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    let opts = match cli.command {
        Command::Render { reports, out } => {
            for path in render(&reports, &out)? {
                println!("{}", path.display());
            }
            return Ok(ExitCode::SUCCESS);
        }
        Command::Run(r) => {
            let stages = r.stage.as_deref().map(parse_stages).transpose()?;
            options(r.common, stages)
        }
        Command::Norms(a) => options(a, Some(vec![Stage::Norms])),
        Command::Entropy(a) => options(a, Some(vec![Stage::Entropy])),
        Command::Bound(a) => options(a, Some(vec![Stage::Bound])),
        Command::Simulate(a) => options(a, Some(vec![Stage::Simulate])),
        Command::Validate(a) => options(a, Some(vec![Stage::Validate])),
    };
    let outcome = run(&opts)?;
    for path in &outcome.written {
        println!("{}", path.display());
    }
    if let RunStatus::Violations(n) = outcome.status {
        eprintln!("validation failed: {n} violated check(s)");
    }
    Ok(ExitCode::from(outcome.exit_code() as u8))
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
