use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wsn_tpc::sim::SweepAxis;
use wsn_tpc_cli::{cmd_feasibility, cmd_simulate, cmd_solve, cmd_sweep, parse_fixed, parse_values, CliResult, Context};

#[derive(Parser)]
#[command(name = "wsn-tpc", version, about = "Minimum transmission power control for remote state estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `simulation.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for solving and simulation.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Feasible PSR pairs of two links with the others pinned.
    Feasibility {
        /// Pinned PSRs as LINK=KAPPA, one-based, comma separated.
        #[arg(long, value_name = "LINK=KAPPA")]
        fixed: Vec<String>,
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
    /// Solve for the optimal PSR policy.
    Solve,
    /// Monte Carlo simulation of a solved policy.
    Simulate {
        /// Policy file; defaults to policy.json in the output directory.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Write one trace CSV per episode.
        #[arg(long)]
        episodes_traces: bool,
        /// Simulate even if the policy was solved for another configuration.
        #[arg(long)]
        force: bool,
    },
    /// Re-solve and simulate across values of one parameter.
    Sweep {
        /// lambda, alpha or d2_over_d1
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
    },
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let usage = |m: &str| wsn_tpc_cli::CliError::Core(wsn_tpc::Error::Usage(m.into()));
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| usage(&e.to_string()))?;
    }
    let config = cli.config.ok_or_else(|| usage("--config is required"))?;
    let ctx = Context::load(&config, cli.seed, cli.out)?;
    match cli.command {
        Command::Feasibility { fixed, resolution } => cmd_feasibility(&ctx, &parse_fixed(&fixed)?, resolution),
        Command::Solve => cmd_solve(&ctx),
        Command::Simulate { policy, episodes_traces, force } => {
            let policy = policy.unwrap_or_else(|| ctx.out_dir.join("policy.json"));
            cmd_simulate(&ctx, &policy, episodes_traces, force)
        }
        Command::Sweep { axis, values } => {
            let axis: SweepAxis = axis.parse()?;
            cmd_sweep(&ctx, axis, &parse_values(&values)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
