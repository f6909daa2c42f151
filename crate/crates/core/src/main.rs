use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tvfb::harness::{
    cmd_run, cmd_sweep, cmd_verify, require_pass, Axis, ExperimentConfig, HarnessError, SweepSpec,
};

#[derive(Parser)]
#[command(
    name = "tvfb",
    version,
    about = "Decentralized forward-backward experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config; defaults to the 15-node experiment when omitted.
    #[arg(long, short)]
    config: Option<String>,
    /// Dotted override such as `algorithm.k=40`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write metrics and metadata CSVs.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Metrics CSV path (overrides output.metrics).
        #[arg(long)]
        out: Option<String>,
        /// Metadata CSV path (overrides output.metadata).
        #[arg(long)]
        metadata: Option<String>,
    },
    /// Sweep one parameter with repeats and write a summary CSV.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// K, T, sigma or churn_rate.
        #[arg(long)]
        axis: Axis,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        /// Summary CSV path (overrides output.sweep).
        #[arg(long)]
        out: Option<String>,
        /// Also write per-cell results here.
        #[arg(long)]
        cells: Option<String>,
    },
    /// Run the ground-truth and certificate checks and write a pass/fail table.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Table path (overrides output.verify).
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the effective config as TOML.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

fn load(args: &ConfigArgs) -> Result<ExperimentConfig, HarnessError> {
    let base = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| HarnessError::Config(format!("cannot read {path}: {e}")))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::default(),
    };
    base.with_overrides(&args.overrides)
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run { cfg, out, metadata } => {
            let mut c = load(&cfg)?;
            if let Some(p) = out {
                c.output.metrics = p;
            }
            if let Some(p) = metadata {
                c.output.metadata = p;
            }
            let res = cmd_run(&c)?;
            let last = res.final_row();
            println!(
                "K={} chi={} dist_to_opt={:e} gap={:e} -> {}",
                last.k, res.chi, last.dist_to_opt, last.gap, c.output.metrics
            );
        }
        Command::Sweep {
            cfg,
            axis,
            values,
            repeats,
            out,
            cells,
        } => {
            let mut c = load(&cfg)?;
            if let Some(p) = out {
                c.output.sweep = p;
            }
            let spec = SweepSpec {
                axis,
                values,
                repeats,
            };
            let rows = cmd_sweep(&c, &spec, cells.as_deref())?;
            for r in &rows {
                println!(
                    "{axis}={} gap={:e}±{:e} dist={:e}±{:e} failed={}",
                    r.value, r.gap.0, r.gap.1, r.dist.0, r.dist.1, r.failed
                );
            }
        }
        Command::Verify { cfg, out } => {
            let mut c = load(&cfg)?;
            if let Some(p) = out {
                c.output.verify = p;
            }
            let rows = cmd_verify(&c)?;
            for r in &rows {
                let tag = if r.pass { "PASS" } else { "FAIL" };
                println!(
                    "{tag} {:<26} {:>12.4e}  (threshold {:.4e})",
                    r.name, r.value, r.threshold
                );
            }
            require_pass(&rows)?;
        }
        Command::Config { cfg } => print!("{}", load(&cfg)?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tvfb: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
