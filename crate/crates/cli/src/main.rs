use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rrl_cli::{
    cmd_run, cmd_sweep, cmd_validate, CliError, ExperimentConfig, SolverChoice, SweepSpec,
    SweepWeight,
};

/// Rate-reliability-lifetime tradeoff solver for multihop sensor networks.
#[derive(Parser)]
#[command(name = "rrl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate an instance and parameter document.
    Validate(CommonArgs),
    /// Solve one experiment and write trace/summary/plot artifacts.
    Run(RunArgs),
    /// Sweep gamma or phi and record the tradeoff curves.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Instance document (TOML).
    #[arg(long, value_name = "PATH")]
    instance: PathBuf,
    /// Parameter document (TOML); defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    params: Option<PathBuf>,
    /// Parameter override, e.g. --set gamma=0.9 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Which solver to run.
    #[arg(long, value_enum, default_value = "sdd")]
    solver: SolverArg,
    /// Output directory for artifacts.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed recorded with the artifacts.
    #[arg(long, default_value = "0")]
    seed: u64,
    /// Iteration budget override for the distributed solver.
    #[arg(long, value_name = "N")]
    max_iters: Option<usize>,
    /// Stop-rule tolerance (SDD) / stationarity tolerance (oracle).
    #[arg(long, value_name = "X")]
    tol: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Weight to sweep.
    #[arg(long = "sweep", value_enum, value_name = "WEIGHT")]
    weight: SweepWeightArg,
    #[arg(long, value_name = "A")]
    from: f64,
    #[arg(long, value_name = "B")]
    to: f64,
    #[arg(long, value_name = "S")]
    step: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Sdd,
    Oracle,
    Both,
}

impl From<SolverArg> for SolverChoice {
    fn from(v: SolverArg) -> Self {
        match v {
            SolverArg::Sdd => SolverChoice::Sdd,
            SolverArg::Oracle => SolverChoice::Oracle,
            SolverArg::Both => SolverChoice::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepWeightArg {
    Gamma,
    Phi,
}

impl From<SweepWeightArg> for SweepWeight {
    fn from(v: SweepWeightArg) -> Self {
        match v {
            SweepWeightArg::Gamma => SweepWeight::Gamma,
            SweepWeightArg::Phi => SweepWeight::Phi,
        }
    }
}

fn parse_overrides(set: &[String]) -> Result<Vec<(String, f64)>, CliError> {
    set.iter()
        .map(|kv| {
            let (key, value) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| CliError::Validation(format!("--set {key}: {value:?} is not a number")))?;
            Ok((key.to_string(), value))
        })
        .collect()
}

fn config_from(solve: &SolveArgs, sweep: Option<SweepSpec>) -> Result<ExperimentConfig, CliError> {
    Ok(ExperimentConfig {
        instance_path: solve.common.instance.clone(),
        params_path: solve.common.params.clone(),
        overrides: parse_overrides(&solve.common.set)?,
        solver: solve.solver.into(),
        out_dir: solve.out.clone(),
        sweep,
        seed: solve.seed,
        max_iters: solve.max_iters,
        tol: solve.tol,
    })
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate(common) => {
            let config = ExperimentConfig {
                instance_path: common.instance.clone(),
                params_path: common.params.clone(),
                overrides: parse_overrides(&common.set)?,
                ..ExperimentConfig::default()
            };
            print!("{}", cmd_validate(&config)?);
            Ok(())
        }
        Command::Run(args) => {
            let config = config_from(&args.solve, None)?;
            let artifacts = cmd_run(&config)?;
            println!("summary: {}", artifacts.summary_path.display());
            if let Some(p) = &artifacts.trace_path {
                println!("trace:   {}", p.display());
            }
            if let Some(p) = &artifacts.plot_path {
                println!("plot:    {}", p.display());
            }
            Ok(())
        }
        Command::Sweep(args) => {
            let spec = SweepSpec {
                weight: args.weight.into(),
                from: args.from,
                to: args.to,
                step: args.step,
            };
            let config = config_from(&args.solve, Some(spec))?;
            let artifacts = cmd_sweep(&config)?;
            println!("table:   {}", artifacts.table_path.display());
            println!("summary: {}", artifacts.summary_path.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
