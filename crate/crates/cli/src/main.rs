use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cashbench::evaluation::{read_csv, write_csv, HoldoutEvaluator, Metric, MetricKind, SplitSpec, Splits};
use cashbench::harness::{
    build_meta_matrix, generate_synthetic, render_report, run_benchmark, BenchmarkPlan, DatasetSpec,
    GeneratorSpec, HarnessError, Leaderboard, ReportFormat,
};
use cashbench::learners::{default_space, Dataset, Task};
use cashbench::optimizers::{run_optimizer, write_results, OptimizerError, OptimizerSpec, ResultsHeader, Variant};
use cashbench::portfolio::{build_portfolio_greedy, load_meta, load_portfolio, sample_catalog, save_meta, save_portfolio};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const EMPTY_RUN: u8 = 3;

#[derive(Parser)]
#[command(name = "cashbench", version, about = "Algorithm selection and hyperparameter search benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one optimizer on one dataset.
    Run(RunArgs),
    /// Run a benchmark plan.
    Bench(BenchArgs),
    /// Build portfolios and meta matrices.
    #[command(subcommand)]
    Portfolio(PortfolioCommand),
    /// Write a synthetic dataset as CSV.
    Datagen(DatagenArgs),
    /// Render a leaderboard written by `bench`.
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "generator")]
    data: Option<PathBuf>,
    /// Synthetic generator instead of a CSV file.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    data_seed: u64,
    #[arg(long)]
    task: Option<Task>,
    #[arg(long, default_value = "target")]
    target: String,
    #[arg(long)]
    metric: Option<MetricKind>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "random")]
    optimizer: String,
    #[arg(long, conflicts_with = "time_budget")]
    trial_budget: Option<u32>,
    /// Seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long, default_value_t = 2)]
    eta: u32,
    #[arg(long)]
    max_resource: Option<u32>,
    #[arg(long)]
    portfolio: Option<PathBuf>,
    #[arg(long, default_value_t = 0.25)]
    random_share: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Results file (one JSON object per line); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    plan: PathBuf,
    /// Output directory; overrides the plan's.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Vec<u64>,
}

#[derive(Subcommand)]
enum PortfolioCommand {
    /// Greedy portfolio from a meta matrix.
    Build {
        /// Meta matrix CSV; its catalog sidecar must sit next to it.
        #[arg(long)]
        meta: PathBuf,
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long, default_value = "binary")]
        task: Task,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a sampled catalog on the datasets of a plan file.
    Collect {
        plan: PathBuf,
        #[arg(long, default_value_t = 60)]
        catalog_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(long)]
    generator: String,
    #[arg(long, default_value_t = 400)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    noise_features: usize,
    #[arg(long, default_value_t = 0.0)]
    label_noise: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// `leaderboard.json` written by `bench`.
    leaderboard: PathBuf,
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl std::fmt::Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

fn harness_failure(e: HarnessError) -> Failure {
    let code = match e {
        HarnessError::InvalidPlan(_) => USAGE,
        _ => DATA,
    };
    fail(code, e)
}

fn optimizer_failure(e: OptimizerError) -> Failure {
    match e {
        OptimizerError::EmptyRun => fail(EMPTY_RUN, e),
        OptimizerError::InvalidPortfolioEntry { .. } => fail(DATA, e),
        _ => fail(USAGE, e),
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| fail(DATA, format!("{}: {e}", dir.display())))?;
            }
            fs::write(p, bytes).map_err(|e| fail(DATA, format!("{}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| fail(DATA, e)),
    }
}

fn load_data(args: &DataArgs) -> Result<Dataset, Failure> {
    match (&args.data, &args.generator) {
        (Some(path), None) => {
            let task = args.task.ok_or_else(|| fail(USAGE, "--task is required with --data"))?;
            let file = fs::File::open(path).map_err(|e| fail(DATA, format!("{}: {e}", path.display())))?;
            read_csv(file, &args.target, task).map_err(|e| fail(DATA, format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => {
            let spec = GeneratorSpec::new(name, args.n, args.data_seed);
            let task = spec.task().map_err(|e| fail(USAGE, e))?;
            if args.task.is_some_and(|t| t != task) {
                return Err(fail(USAGE, format!("generator {name} produces {} data", task.as_str())));
            }
            generate_synthetic(&spec).map_err(|e| fail(DATA, e))
        }
        _ => Err(fail(USAGE, "one of --data and --generator is required")),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let variant: Variant = args.optimizer.parse().map_err(|e| fail(USAGE, e))?;
    let mut spec = OptimizerSpec::new(variant);
    spec.eta = args.eta;
    spec.max_resource = args.max_resource;
    spec.trial_limit = args.trial_budget;
    spec.time_limit = args.time_budget;
    spec.portfolio = args.portfolio.clone();
    spec.random_share = args.random_share;
    spec.master_seed = args.seed;
    spec.validate(true).map_err(|e| fail(USAGE, e))?;

    let data = load_data(&args.data)?;
    let metric = Metric::new(args.data.metric.unwrap_or(MetricKind::default_for(data.task)));
    metric.check_task(data.task).map_err(|e| fail(USAGE, e))?;
    let space = default_space(data.task);
    let portfolio = match &args.portfolio {
        Some(p) => load_portfolio(p, &space).map_err(|e| fail(DATA, e))?.configurations(),
        None => Vec::new(),
    };
    let splits = Splits::from_dataset(&data, &SplitSpec::default()).map_err(|e| fail(DATA, e))?;
    let evaluator = HoldoutEvaluator::new(&space, &splits, metric);
    let mut ledger = spec.ledger(&space).map_err(|e| fail(USAGE, e))?;
    let result = run_optimizer(&spec, &space, &evaluator, &mut ledger, &portfolio, args.workers)
        .map_err(optimizer_failure)?;

    let best = result.trial(result.best.ordinal).expect("best trial is recorded");
    let test = splits.read_test();
    let test_score = evaluator
        .fit(&best.config, best.resource, best.max_resource, best.seed)
        .ok()
        .and_then(|m| m.predict(&test.features).ok())
        .and_then(|p| metric.score(&test.target, &p).ok())
        .unwrap_or(metric.worst());
    let dataset = match (&args.data.data, &args.data.generator) {
        (Some(p), _) => p.display().to_string(),
        (_, Some(g)) => g.clone(),
        _ => String::new(),
    };
    let header = ResultsHeader {
        dataset: &dataset,
        metric: metric.kind.as_str(),
        spec: &spec,
    };
    let summary = serde_json::json!({ "test_score": test_score });
    let mut buf = Vec::new();
    write_results(&mut buf, &header, &result, Some(&summary), spec.time_limit.is_some())
        .map_err(|e| fail(DATA, e))?;
    write_output(args.out.as_deref(), &buf)?;
    eprintln!(
        "{}: {} trials, best validation {:.4} ({}), test {:.4}",
        variant,
        result.trials.len(),
        result.best.score,
        result.best.config.algorithm_id,
        test_score
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    let mut plan = BenchmarkPlan::load(&args.plan).map_err(harness_failure)?;
    if let Some(w) = args.workers {
        plan.workers = w;
    }
    if let Some(j) = args.jobs {
        plan.jobs = j;
    }
    if !args.seed.is_empty() {
        plan.seeds = args.seed.clone();
    }
    let base = args
        .plan
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    if let Some(out) = &args.out {
        plan.output = Some(std::env::current_dir().map_err(|e| fail(DATA, e))?.join(out));
    }
    if plan.output.is_none() {
        plan.output = Some(PathBuf::from("results"));
    }
    let outcome = run_benchmark(&plan, &base).map_err(harness_failure)?;
    for (dataset, message) in &outcome.failures {
        eprintln!("dataset {dataset} aborted: {message}");
    }
    let md = render_report(&outcome.leaderboard, ReportFormat::Markdown).map_err(harness_failure)?;
    print!("{md}");
    Ok(())
}

fn cmd_portfolio(cmd: PortfolioCommand) -> Result<(), Failure> {
    match cmd {
        PortfolioCommand::Build { meta, k, task, out } => {
            let space = default_space(task);
            let m = load_meta(&meta, &space).map_err(|e| fail(DATA, e))?;
            let p = build_portfolio_greedy(&m, k).map_err(|e| fail(DATA, e))?;
            save_portfolio(&p, &out).map_err(|e| fail(DATA, e))?;
            eprintln!(
                "{} entries, objective {:.4}",
                p.len(),
                p.provenance.objective_trace.last().copied().unwrap_or(f64::NAN)
            );
            Ok(())
        }
        PortfolioCommand::Collect {
            plan,
            catalog_size,
            seed,
            workers,
            out,
        } => {
            let plan_doc = BenchmarkPlan::load(&plan).map_err(harness_failure)?;
            let base = plan.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let datasets: Vec<DatasetSpec> = plan_doc.datasets;
            let task = datasets[0].resolved_task().map_err(harness_failure)?;
            let catalog = sample_catalog(&default_space(task), catalog_size, seed);
            let id = out.file_stem().map_or("meta".into(), |s| s.to_string_lossy().into_owned());
            let meta = build_meta_matrix(&id, &datasets, base, &catalog, &plan_doc.split, workers)
                .map_err(harness_failure)?;
            save_meta(&meta, &out).map_err(|e| fail(DATA, e))?;
            eprintln!("{} datasets x {} configurations", meta.n_datasets(), meta.n_configs());
            Ok(())
        }
    }
}

fn cmd_datagen(args: DatagenArgs) -> Result<(), Failure> {
    let spec = GeneratorSpec {
        name: args.generator,
        n: args.n,
        seed: args.seed,
        noise_features: args.noise_features,
        label_noise: args.label_noise,
    };
    spec.task().map_err(|e| fail(USAGE, e))?;
    let data = generate_synthetic(&spec).map_err(|e| fail(DATA, e))?;
    let mut buf = Vec::new();
    write_csv(&data, &mut buf).map_err(|e| fail(DATA, e))?;
    write_output(Some(&args.out), &buf)
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.leaderboard)
        .map_err(|e| fail(DATA, format!("{}: {e}", args.leaderboard.display())))?;
    let board: Leaderboard = serde_json::from_str(&text)
        .map_err(|e| fail(DATA, format!("{}: {e}", args.leaderboard.display())))?;
    let doc = render_report(&board, args.format).map_err(harness_failure)?;
    write_output(args.out.as_deref(), doc.as_bytes())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Portfolio(c) => cmd_portfolio(c),
        Command::Datagen(a) => cmd_datagen(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
