//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 verification failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sdenet::conditions::{compute_condition_report, ConditionReport};
use sdenet::dynamics::{self, io, BinaryVariant, ContinuousParams, SystemModel};
use sdenet::estimator::{
    recover_network, report_rows, report_to_csv, report_to_json, LambdaGrid, LambdaStrategy, LossMode, RecoveryContext,
    Theorem,
};
use sdenet::harness::appendix::{verify_appendix, AppendixOptions};
use sdenet::harness::reproduce::{reproduce, Figure};
use sdenet::harness::{emit_plots, run_sweep, ExperimentConfig, PlotKind};

#[derive(Parser)]
#[command(name = "sdenet", version, about = "Sparse network inference for linear stochastic dynamics")]
struct Cli {
    /// Base seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON experiment config
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads
    #[arg(long, global = true, env = "SDENET_THREADS")]
    threads: Option<usize>,
    /// Report format; `csv` is the flat `name = value` form for condition reports
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a trajectory and write it as a text file
    Simulate(SimulateArgs),
    /// Estimate every row of the dynamics matrix from a trajectory
    Estimate(EstimateArgs),
    /// Report the recoverability conditions of one row of a model
    Conditions(ConditionsArgs),
    /// Run an experiment sweep from `--config`
    Sweep,
    /// Run the appendix audit suite
    VerifyAppendix,
    /// Run a canned desk-scale reproduction
    Reproduce {
        #[arg(value_parser = ["fig1-left", "fig1-right", "fig2", "all"])]
        figure: String,
    },
}

#[derive(Args)]
struct ModelArgs {
    /// Dynamics matrix file; otherwise a random model is drawn
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    p: usize,
    #[arg(long, default_value_t = 2.0)]
    k: f64,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Number of transitions
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Simulate the diffusion at this inner step instead of the discrete chain
    #[arg(long)]
    delta: Option<f64>,
    /// Also write the drawn model here
    #[arg(long)]
    model_out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    trajectory: PathBuf,
    /// Fixed regularization
    #[arg(long, conflicts_with = "oracle")]
    lambda: Option<f64>,
    /// Oracle lambda grid; needs `--truth`
    #[arg(long)]
    oracle: bool,
    /// True dynamics matrix, for success flags and the oracle grid
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ConditionsArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long, default_value_t = 0)]
    row: usize,
    #[arg(long)]
    eta: Option<f64>,
    /// Observation interval for the theorem bounds
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = sdenet::conditions::DEFAULT_CONFIDENCE)]
    delta: f64,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl From<sdenet::Error> for Failure {
    fn from(e: sdenet::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            log::warn!("thread pool already initialised: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a),
        Command::Estimate(a) => estimate(cli, a),
        Command::Conditions(a) => conditions(cli, a),
        Command::Sweep => sweep(cli),
        Command::VerifyAppendix => appendix(cli),
        Command::Reproduce { figure } => reproduce_cmd(cli, figure),
    }
}

/// Writes to `--out` when given, otherwise to stdout.
fn emit(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<SystemModel, Failure> {
    Ok(SystemModel::from_matrix(io::read_matrix(path)?)?)
}

fn simulate(cli: &Cli, a: &SimulateArgs) -> Outcome {
    let seed = cli.seed.unwrap_or(0);
    let model = match &a.model.model {
        Some(path) => load_model(path)?,
        None => dynamics::make_random_binary_model(a.model.p, a.model.k, seed, BinaryVariant::Stabilized)?,
    };
    if let Some(path) = &a.model_out {
        io::write_matrix(path, model.matrix())?;
    }
    let traj = match a.delta {
        None => dynamics::simulate_discrete(&model, a.eta, a.n, seed)?,
        Some(delta) => {
            let params = ContinuousParams { horizon: a.n as f64 * a.eta, delta, eta: a.eta, keep_inner: false };
            dynamics::simulate_continuous(&model, params, seed)?
        }
    };
    emit(cli, &io::trajectory_to_string(&traj))
}

fn estimate(cli: &Cli, a: &EstimateArgs) -> Outcome {
    let traj = io::read_trajectory(&a.trajectory)?;
    let truth = a.truth.as_deref().map(load_model).transpose()?;
    let strategy = match (a.lambda, a.oracle) {
        (Some(l), _) => LambdaStrategy::Fixed(l),
        (None, true) => LambdaStrategy::OracleGrid(LambdaGrid::default()),
        (None, false) => match &truth {
            Some(_) => {
                LambdaStrategy::Theorem { which: Theorem::Discrete, delta: sdenet::conditions::DEFAULT_CONFIDENCE }
            }
            None => return Err(Failure::Usage("give --lambda, or --truth for a theorem or oracle lambda".into())),
        },
    };
    let ctx = RecoveryContext::new(LossMode::Discrete, truth.as_ref());
    let net = recover_network(&traj, &strategy, &ctx)?;
    let rows = report_rows(net.estimates());
    let text = match cli.format {
        Format::Csv => report_to_csv(&rows),
        Format::Json => report_to_json(&rows)? + "\n",
    };
    emit(cli, &text)?;
    if let Some(ok) = net.full_success() {
        eprintln!("signed support recovered for every row: {ok}");
    }
    Ok(())
}

fn conditions(cli: &Cli, a: &ConditionsArgs) -> Outcome {
    let model = load_model(&a.model)?;
    let report: ConditionReport = compute_condition_report(&model, a.row, a.eta, a.horizon, a.delta)?;
    let text = match cli.format {
        Format::Csv => report.to_kv()?,
        Format::Json => report.to_json()? + "\n",
    };
    emit(cli, &text)
}

fn sweep(cli: &Cli) -> Outcome {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("sweep needs --config <file>".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    let result = run_sweep(&cfg)?;
    for kind in [PlotKind::RateVsT, PlotKind::ComplexityVsP, PlotKind::RateVsEta] {
        match emit_plots(&result, kind, &cfg.output_dir) {
            Ok(paths) => log::info!("{}: {} files", kind.name(), paths.len()),
            Err(sdenet::Error::EmptyResult(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    for c in &result.cells {
        println!(
            "p={} k={} eta={} T={} {} rate={:.4} [{:.4}, {:.4}]{}",
            c.key.p,
            c.key.k,
            c.key.eta,
            c.key.horizon,
            c.key.ensemble.name(),
            c.rate,
            c.wilson.lo,
            c.wilson.hi,
            c.failure.as_deref().map(|f| format!(" failed: {f}")).unwrap_or_default()
        );
    }
    Ok(())
}

fn appendix(cli: &Cli) -> Outcome {
    let opts = AppendixOptions { seed: cli.seed.unwrap_or(0), ..Default::default() };
    let report = verify_appendix(&opts)?;
    let text = match cli.format {
        Format::Csv => report.audits.iter().map(|a| a.line() + "\n").collect(),
        Format::Json => serde_json::to_string_pretty(&report).map_err(sdenet::Error::from)? + "\n",
    };
    emit(cli, &text)?;
    if report.all_passed {
        Ok(())
    } else {
        Err(Failure::Verification("at least one appendix audit reported a violation".into()))
    }
}

fn reproduce_cmd(cli: &Cli, figure: &str) -> Outcome {
    let figures: Vec<Figure> = match figure {
        "all" => Figure::ALL.to_vec(),
        name => vec![Figure::parse(name).ok_or_else(|| Failure::Usage(format!("unknown figure {name}")))?],
    };
    let root = cli.out.clone().unwrap_or_else(|| PathBuf::from("reproduce"));
    let mut failed = Vec::new();
    for fig in figures {
        let seed = cli.seed.unwrap_or_else(|| fig.default_seed());
        let rep = reproduce(fig, seed, &root.join(fig.name()), None)?;
        println!("{} (seed {seed}): {}", fig, if rep.passed() { "PASS" } else { "FAIL" });
        for line in rep.summary.lines() {
            println!("  {line}");
        }
        if !rep.passed() {
            failed.push(fig.name());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(format!("summary check failed for {}", failed.join(", "))))
    }
}
