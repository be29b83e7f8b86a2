use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::plan::{BenchmarkPlan, DatasetSpec, ParityMode};
use super::report::{render_report, Leaderboard, LeaderboardRow, OptimizerCell, ReportFormat};
use super::synthetic::generate_synthetic;
use super::HarnessError;
use crate::ensemble::{greedy_ensemble_select, EnsembleSelection, PredictionTable, Split};
use crate::evaluation::{read_csv, HoldoutEvaluator, Metric, Splits, TimeLedger, TrialRecord};
use crate::learners::default_space;
use crate::learners::{Dataset, Predictions};
use crate::optimizers::{
    rank_order, run_optimizer, write_results, OptimizerSpec, ResultsHeader, RunResult,
};
use crate::portfolio::load_portfolio;
use crate::search_space::{Configuration, SearchSpace};
use crate::util::median;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Readout {
    pub score: f64,
    /// False when no trial had committed by that point.
    pub completed: bool,
}

/// Best-so-far validation score once `fraction` of the run's budget was
/// consumed. The budget is the larger of the reference and the actual
/// consumption, so `1.0` always reads the final score.
pub fn anytime_readout(result: &RunResult, fraction: f64, worst: f64) -> Readout {
    let total = result.reference_budget.max(result.consumed);
    let limit = fraction * total;
    let tol = 1e-9 * limit.abs().max(1.0);
    match result.anytime_curve.iter().rev().find(|p| p.elapsed <= limit + tol) {
        Some(p) => Readout {
            score: p.score,
            completed: true,
        },
        None => Readout {
            score: worst,
            completed: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub candidates: Vec<u64>,
    pub selection: EnsembleSelection,
    /// Best validation score of any single candidate.
    pub best_single_validation: f64,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub dataset: String,
    pub optimizer: String,
    pub seed: u64,
    pub best_validation: f64,
    pub test_score: f64,
    pub consumed: f64,
    pub full_budget_equivalents: f64,
    pub anytime: Vec<Readout>,
    pub ensemble: Option<EnsembleSummary>,
    /// Test-split reads before and after final scoring.
    pub test_reads_before_final: usize,
    pub test_reads: usize,
    pub result: RunResult,
}

#[derive(Debug, Clone)]
pub struct BenchmarkOutcome {
    pub leaderboard: Leaderboard,
    pub runs: Vec<RunSummary>,
    /// `(dataset id, message)` for datasets that were aborted.
    pub failures: Vec<(String, String)>,
}

pub fn load_dataset(spec: &DatasetSpec, base_dir: &Path) -> Result<Dataset, HarnessError> {
    let task = spec.resolved_task()?;
    if let Some(g) = &spec.generator {
        return generate_synthetic(g).map_err(|e| HarnessError::Data(e.to_string()));
    }
    let path = base_dir.join(spec.path.as_ref().expect("validated source"));
    let file = fs::File::open(&path).map_err(|e| HarnessError::Io {
        path: path.clone(),
        message: e.to_string(),
    })?;
    let target = spec.target.as_deref().unwrap_or("target");
    read_csv(file, target, task).map_err(|e| HarnessError::Data(format!("{}: {e}", path.display())))
}

struct DatasetContext<'a> {
    plan: &'a BenchmarkPlan,
    id: &'a str,
    space: SearchSpace,
    splits: Splits,
    metric: Metric,
    portfolios: Vec<Vec<Configuration>>,
}

/// Scores the final selection on the test split, reading it exactly once.
fn final_scoring(
    ctx: &DatasetContext<'_>,
    evaluator: &HoldoutEvaluator<'_>,
    view: &Splits,
    result: &RunResult,
) -> (f64, Option<EnsembleSummary>) {
    let worst = ctx.metric.worst();
    let fit_predict = |t: &TrialRecord, data: &Dataset| {
        evaluator
            .fit(&t.config, t.resource, t.max_resource, t.seed)
            .ok()
            .and_then(|m| m.predict(&data.features).ok())
    };

    if ctx.plan.ensemble {
        let mut pool: Vec<&TrialRecord> =
            result.trials.iter().filter(|t| t.is_full_budget() && !t.failed).collect();
        pool.sort_by(|a, b| rank_order(a, b));
        pool.truncate(ctx.plan.ensemble_pool);
        let mut fitted = Vec::new();
        for t in pool {
            if let Ok(model) = evaluator.fit(&t.config, t.resource, t.max_resource, t.seed) {
                if let Ok(p) = model.predict(&view.valid.features) {
                    fitted.push((t.ordinal, model, p));
                }
            }
        }
        if !fitted.is_empty() {
            let table = PredictionTable::new(
                fitted.iter().map(|(o, _, p)| (*o, p.clone(), None)).collect(),
            )
            .expect("candidates share the validation split");
            let selection =
                greedy_ensemble_select(&table, &view.valid.target, &ctx.metric, ctx.plan.ensemble_max_size)
                    .expect("non-empty table");
            let best_single = (0..table.len())
                .map(|j| {
                    let mut counts = vec![0; table.len()];
                    counts[j] = 1;
                    table.score(&counts, &view.valid.target, &ctx.metric).unwrap_or(worst)
                })
                .fold(f64::NEG_INFINITY, f64::max);
            let test = view.read_test();
            fitted.sort_by_key(|f| f.0);
            let members: Vec<(u64, Predictions, Option<Predictions>)> = fitted
                .iter()
                .filter(|(o, _, _)| selection.multiplicities.iter().any(|(m, _)| m == o))
                .filter_map(|(o, model, _)| model.predict(&test.features).ok().map(|p| (*o, p, None)))
                .collect();
            let score = if members.len() == selection.multiplicities.len() {
                let counts: Vec<usize> = selection.multiplicities.iter().map(|(_, c)| *c).collect();
                // Test predictions sit in the table's primary slot.
                let test_table = PredictionTable::new(members).expect("members share the test split");
                ctx.metric
                    .score(&test.target, &test_table.average(&counts, Split::Validation))
                    .unwrap_or(worst)
            } else {
                worst
            };
            let summary = EnsembleSummary {
                candidates: table.ordinals().to_vec(),
                selection,
                best_single_validation: best_single,
            };
            return (score, Some(summary));
        }
    }

    let best = result.trial(result.best.ordinal).expect("best trial is recorded");
    let test = view.read_test();
    let score = fit_predict(best, test)
        .and_then(|p| ctx.metric.score(&test.target, &p).ok())
        .unwrap_or(worst);
    (score, None)
}

fn run_one(
    ctx: &DatasetContext<'_>,
    index: usize,
    seed: u64,
    ledger: &mut TimeLedger,
) -> Result<RunSummary, HarnessError> {
    let mut spec: OptimizerSpec = ctx.plan.optimizers[index].clone();
    spec.master_seed ^= seed;
    let view = ctx.splits.fresh_view();
    let evaluator = HoldoutEvaluator::new(&ctx.space, &view, ctx.metric);
    let result = run_optimizer(
        &spec,
        &ctx.space,
        &evaluator,
        ledger,
        &ctx.portfolios[index],
        ctx.plan.workers,
    )
    .map_err(|e| HarnessError::Run {
        optimizer: spec.label().to_string(),
        seed,
        message: e.to_string(),
    })?;
    let before = view.test_reads();
    let (test_score, ensemble) = final_scoring(ctx, &evaluator, &view, &result);
    let worst = ctx.metric.worst();
    Ok(RunSummary {
        dataset: ctx.id.to_string(),
        optimizer: spec.label().to_string(),
        seed,
        best_validation: result.best.score,
        test_score,
        consumed: result.consumed,
        full_budget_equivalents: result.full_budget_equivalents(),
        anytime: ctx
            .plan
            .anytime_fractions
            .iter()
            .map(|&f| anytime_readout(&result, f, worst))
            .collect(),
        ensemble,
        test_reads_before_final: before,
        test_reads: view.test_reads(),
        result,
    })
}

/// Baseline first, then every other optimizer under the baseline's budget.
fn run_seed(ctx: &DatasetContext<'_>, seed: u64) -> Result<Vec<RunSummary>, HarnessError> {
    let plan = ctx.plan;
    let base_index = plan
        .optimizers
        .iter()
        .position(|o| o.label() == plan.baseline)
        .expect("validated baseline");
    let base_spec = &plan.optimizers[base_index];
    let mut ledger = base_spec
        .ledger(&ctx.space)
        .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
    let baseline = run_one(ctx, base_index, seed, &mut ledger)?;
    let reference = match plan.parity {
        ParityMode::TrialCount => baseline.full_budget_equivalents,
        ParityMode::Time => baseline.result.trials.iter().map(|t| t.wall_time).sum(),
    };
    let mut out = Vec::with_capacity(plan.optimizers.len());
    let mut baseline = Some(baseline);
    for (i, spec) in plan.optimizers.iter().enumerate() {
        if i == base_index {
            out.push(baseline.take().expect("baseline runs once"));
            continue;
        }
        let mut ledger = match plan.parity {
            ParityMode::TrialCount => {
                TimeLedger::resource(reference, spec.resolved_max_resource(&ctx.space))
            }
            ParityMode::Time => TimeLedger::wall_clock(reference),
        };
        out.push(run_one(ctx, i, seed, &mut ledger)?);
    }
    Ok(out)
}

fn run_dataset(plan: &BenchmarkPlan, spec: &DatasetSpec, base_dir: &Path) -> Result<Vec<RunSummary>, HarnessError> {
    let data = load_dataset(spec, base_dir)?;
    let metric = Metric::new(spec.resolved_metric()?);
    metric
        .check_task(data.task)
        .map_err(|e| HarnessError::Data(e.to_string()))?;
    let splits = Splits::from_dataset(&data, &plan.split).map_err(|e| HarnessError::Data(e.to_string()))?;
    let space = default_space(data.task);
    let mut portfolios = Vec::with_capacity(plan.optimizers.len());
    for o in &plan.optimizers {
        portfolios.push(match &o.portfolio {
            Some(p) => load_portfolio(&base_dir.join(p), &space)
                .map_err(|e| HarnessError::Data(format!("portfolio {}: {e}", p.display())))?
                .configurations(),
            None => Vec::new(),
        });
    }
    let ctx = DatasetContext {
        plan,
        id: &spec.id,
        space,
        splits,
        metric,
        portfolios,
    };
    let per_seed: Vec<Result<Vec<RunSummary>, HarnessError>> = if plan.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(plan.jobs)
            .build()
            .map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        pool.install(|| plan.seeds.par_iter().map(|&s| run_seed(&ctx, s)).collect())
    } else {
        plan.seeds.iter().map(|&s| run_seed(&ctx, s)).collect()
    };
    let mut runs = Vec::new();
    for r in per_seed {
        runs.extend(r?);
    }
    Ok(runs)
}

fn aggregate(plan: &BenchmarkPlan, spec: &DatasetSpec, runs: &[RunSummary], error: Option<String>) -> LeaderboardRow {
    let task = spec.resolved_task().map(|t| t.as_str().to_string()).unwrap_or_default();
    let metric = spec.resolved_metric().map(|m| m.as_str().to_string()).unwrap_or_default();
    let cells = plan
        .optimizers
        .iter()
        .map(|o| {
            let mine: Vec<&RunSummary> = runs.iter().filter(|r| r.optimizer == o.label()).collect();
            if mine.is_empty() {
                return OptimizerCell {
                    test: None,
                    time: None,
                    anytime: vec![None; plan.anytime_fractions.len()],
                };
            }
            let med = |f: &dyn Fn(&RunSummary) -> f64| {
                Some(median(&mine.iter().map(|r| f(r)).collect::<Vec<_>>()))
            };
            OptimizerCell {
                test: med(&|r| r.test_score),
                time: med(&|r| r.consumed),
                anytime: (0..plan.anytime_fractions.len())
                    .map(|k| med(&|r| r.anytime[k].score))
                    .collect(),
            }
        })
        .collect();
    LeaderboardRow {
        dataset: spec.id.clone(),
        task,
        metric,
        cells,
        error,
    }
}

fn write_file(path: &Path, text: &[u8]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
    }
    fs::write(path, text).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn run_file_name(run: &RunSummary) -> PathBuf {
    let safe = |s: &str| s.replace(|c: char| !(c.is_ascii_alphanumeric() || c == '-' || c == '_'), "_");
    PathBuf::from("runs")
        .join(safe(&run.dataset))
        .join(format!("{}-seed{}.jsonl", safe(&run.optimizer), run.seed))
}

fn write_outputs(plan: &BenchmarkPlan, out_dir: &Path, outcome: &BenchmarkOutcome) -> Result<(), HarnessError> {
    let timings = plan.parity == ParityMode::Time;
    for run in &outcome.runs {
        let spec = plan
            .optimizers
            .iter()
            .find(|o| o.label() == run.optimizer)
            .map(|o| OptimizerSpec {
                master_seed: o.master_seed ^ run.seed,
                ..o.clone()
            })
            .expect("run optimizer is in the plan");
        let metric = plan
            .datasets
            .iter()
            .find(|d| d.id == run.dataset)
            .and_then(|d| d.resolved_metric().ok())
            .map_or("", |m| m.as_str());
        let header = ResultsHeader {
            dataset: &run.dataset,
            metric,
            spec: &spec,
        };
        let summary = json!({
            "test_score": run.test_score,
            "test_reads": run.test_reads,
            "anytime": plan.anytime_fractions.iter().zip(&run.anytime)
                .map(|(f, r)| json!({ "fraction": f, "score": r.score, "completed": r.completed }))
                .collect::<Vec<_>>(),
            "ensemble": run.ensemble,
        });
        let mut buf = Vec::new();
        write_results(&mut buf, &header, &run.result, Some(&summary), timings).map_err(|e| HarnessError::Io {
            path: out_dir.to_path_buf(),
            message: e.to_string(),
        })?;
        write_file(&out_dir.join(run_file_name(run)), &buf)?;
    }
    let board = &outcome.leaderboard;
    write_file(
        &out_dir.join("leaderboard.md"),
        render_report(board, ReportFormat::Markdown)?.as_bytes(),
    )?;
    write_file(
        &out_dir.join("leaderboard.csv"),
        render_report(board, ReportFormat::Csv)?.as_bytes(),
    )?;
    let json = serde_json::to_string_pretty(board).expect("serializable") + "\n";
    write_file(&out_dir.join("leaderboard.json"), json.as_bytes())
}

/// Runs every dataset of `plan`. Paths in the plan are relative to
/// `base_dir`. A failing dataset is recorded in its leaderboard row and
/// does not stop the others.
pub fn run_benchmark(plan: &BenchmarkPlan, base_dir: &Path) -> Result<BenchmarkOutcome, HarnessError> {
    plan.validate()?;
    let mut runs = Vec::new();
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for spec in &plan.datasets {
        match run_dataset(plan, spec, base_dir) {
            Ok(r) => {
                rows.push(aggregate(plan, spec, &r, None));
                runs.extend(r);
            }
            Err(e) => {
                rows.push(aggregate(plan, spec, &[], Some(e.to_string())));
                failures.push((spec.id.clone(), e.to_string()));
            }
        }
    }
    let outcome = BenchmarkOutcome {
        leaderboard: Leaderboard {
            optimizers: plan.optimizers.iter().map(|o| o.label().to_string()).collect(),
            fractions: plan.anytime_fractions.clone(),
            rows,
        },
        runs,
        failures,
    };
    if let Some(out) = &plan.output {
        write_outputs(plan, &base_dir.join(out), &outcome)?;
    }
    Ok(outcome)
}
