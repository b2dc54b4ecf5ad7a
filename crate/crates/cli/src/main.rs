use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{ArgGroup, Parser, ValueEnum};

use qgdp::bnb::SolveOptions;
use qgdp::pipeline::{run_pipeline, ApproxChoice, Input, PipelineConfig, DEFAULT_SEGMENTS};
use qgdp::wtn::WtnData;
use qgdp::GdpModel;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Approx {
    None,
    Quad,
    Pwl,
}

impl From<Approx> for ApproxChoice {
    fn from(a: Approx) -> Self {
        match a {
            Approx::None => ApproxChoice::None,
            Approx::Quad => ApproxChoice::Quad,
            Approx::Pwl => ApproxChoice::Pwl,
        }
    }
}

/// Approximate, flatten and globally solve a disjunctive model.
#[derive(Debug, Parser)]
#[command(name = "qgdp", version)]
#[command(group(ArgGroup::new("input").required(true).args(["model", "wtn"])))]
struct Args {
    /// Disjunctive model in JSON.
    #[arg(long, value_name = "PATH")]
    model: Option<PathBuf>,

    /// Water-treatment-network instance in JSON.
    #[arg(long, value_name = "PATH")]
    wtn: Option<PathBuf>,

    /// Treatment of power and log terms.
    #[arg(long, value_enum, default_value = "none")]
    approx: Approx,

    /// Piecewise-linear segments per term.
    #[arg(long, default_value_t = DEFAULT_SEGMENTS)]
    segments: usize,

    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-4, allow_negative_numbers = true)]
    gap: f64,

    /// Wall-clock limit for the search, in seconds.
    #[arg(long = "time-limit", default_value_t = 3600.0)]
    time_limit: f64,

    /// Reference objective for the relative-error field.
    #[arg(long, allow_negative_numbers = true)]
    reference: Option<f64>,

    #[arg(long, default_value_t = 1)]
    workers: usize,

    /// Write the JSON report here and print a table to stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn run(args: Args) -> anyhow::Result<i32> {
    if !(args.gap >= 0.0) || !args.gap.is_finite() {
        bail!("--gap must be a non-negative number");
    }
    if !(args.time_limit > 0.0) || !args.time_limit.is_finite() {
        bail!("--time-limit must be a positive number of seconds");
    }
    if args.segments == 0 {
        bail!("--segments must be at least 1");
    }
    if args.workers == 0 {
        bail!("--workers must be at least 1");
    }
    let input = match (&args.model, &args.wtn) {
        (Some(p), _) => Input::Model(
            GdpModel::load(p).with_context(|| format!("loading model {}", p.display()))?,
        ),
        (_, Some(p)) => Input::Wtn(
            WtnData::load(p).with_context(|| format!("loading instance {}", p.display()))?,
        ),
        _ => unreachable!("clap requires one input"),
    };
    let cfg = PipelineConfig {
        approx: args.approx.into(),
        segments: args.segments,
        solve: SolveOptions {
            gap: args.gap,
            time_limit: Duration::from_secs_f64(args.time_limit),
            workers: args.workers,
            ..SolveOptions::default()
        },
        reference: args.reference,
        ..PipelineConfig::default()
    };
    let report = run_pipeline(input, &cfg)?;
    let json = report.to_json_string();
    match &args.out {
        Some(path) => {
            std::fs::write(path, json + "\n")
                .with_context(|| format!("writing report {}", path.display()))?;
            print!("{}", report.render_table());
        }
        None => println!("{json}"),
    }
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
