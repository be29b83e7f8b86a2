use std::path::Path;

use super::bench::load_dataset;
use super::plan::DatasetSpec;
use super::HarnessError;
use crate::evaluation::{HoldoutEvaluator, Metric, SplitSpec, Splits, TimeLedger};
use crate::learners::default_space;
use crate::optimizers::{RunResult, Session, Variant};
use crate::portfolio::{collect_meta, MetaMatrix};
use crate::search_space::{validate_configuration, Configuration};

/// Evaluates every catalog configuration at full budget on each dataset
/// and gathers the scores into a meta matrix. All datasets must share a
/// task so that one catalog fits them all.
pub fn build_meta_matrix(
    id: &str,
    datasets: &[DatasetSpec],
    base_dir: &Path,
    catalog: &[Configuration],
    split: &SplitSpec,
    workers: usize,
) -> Result<MetaMatrix, HarnessError> {
    let first = datasets
        .first()
        .ok_or_else(|| HarnessError::InvalidPlan("no meta datasets".into()))?;
    let task = first.resolved_task()?;
    let space = default_space(task);
    for (index, c) in catalog.iter().enumerate() {
        validate_configuration(&space, c)
            .map_err(|v| HarnessError::Data(format!("catalog entry {index}: {v}")))?;
    }
    let mut runs: Vec<(String, RunResult)> = Vec::new();
    let mut worst = None;
    for d in datasets {
        if d.resolved_task()? != task {
            return Err(HarnessError::InvalidPlan(format!(
                "meta dataset {:?} is {}, expected {}",
                d.id,
                d.resolved_task()?.as_str(),
                task.as_str()
            )));
        }
        let metric = Metric::new(d.resolved_metric()?);
        worst.get_or_insert(metric.worst());
        let data = load_dataset(d, base_dir)?;
        let splits = Splits::from_dataset(&data, split).map_err(|e| HarnessError::Data(e.to_string()))?;
        let evaluator = HoldoutEvaluator::new(&space, &splits, metric);
        let full = space.max_resource();
        let mut ledger = TimeLedger::resource(catalog.len() as f64, full);
        let mut session = Session::new(&space, &evaluator, &mut ledger, 0, full).with_workers(workers);
        session.evaluate_batch(catalog.iter().map(|c| (c.clone(), full)).collect());
        let run = session.finish(Variant::Random).map_err(|e| HarnessError::Run {
            optimizer: "catalog".into(),
            seed: 0,
            message: e.to_string(),
        })?;
        runs.push((d.id.clone(), run));
    }
    let refs: Vec<(&str, &RunResult)> = runs.iter().map(|(d, r)| (d.as_str(), r)).collect();
    collect_meta(id, &refs, catalog, worst.unwrap_or(0.0)).map_err(|e| HarnessError::Data(e.to_string()))
}
