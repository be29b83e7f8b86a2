use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::ledger::{LedgerExhausted, TimeLedger};
use super::metrics::Metric;
use super::split::Splits;
use crate::learners::{train, FittedModel, Predictions, ResourceBudget, TrainError};
use crate::search_space::{Configuration, SearchSpace};

/// One evaluated (configuration, resource) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// Issue order within the run, starting at 0.
    pub ordinal: u64,
    pub config: Configuration,
    /// Resource in optimizer units, `1..=max_resource`.
    pub resource: u32,
    pub max_resource: u32,
    pub validation_score: f64,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub seed: u64,
    /// Ledger consumption after this trial committed.
    pub elapsed: f64,
    pub wall_time: f64,
}

impl TrialRecord {
    /// Full-budget-equivalent cost, `r / R`.
    pub fn cost(&self) -> f64 {
        f64::from(self.resource) / f64::from(self.max_resource)
    }

    pub fn is_full_budget(&self) -> bool {
        self.resource == self.max_resource
    }
}

/// Outcome of scoring one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub score: f64,
    pub failure: Option<String>,
    pub wall_time: f64,
}

/// Scores configurations. Implementations must be pure in their arguments.
pub trait TrialEvaluator: Sync {
    fn evaluate(
        &self,
        config: &Configuration,
        resource: u32,
        max_resource: u32,
        seed: u64,
    ) -> Evaluation;

    fn worst_score(&self) -> f64;
}

/// Trains on the training split and scores on the validation split.
pub struct HoldoutEvaluator<'a> {
    pub space: &'a SearchSpace,
    pub splits: &'a Splits,
    pub metric: Metric,
}

impl<'a> HoldoutEvaluator<'a> {
    pub fn new(space: &'a SearchSpace, splits: &'a Splits, metric: Metric) -> Self {
        Self {
            space,
            splits,
            metric,
        }
    }

    /// Retrains `config` exactly as a trial at `(resource, max_resource, seed)` did.
    pub fn fit(
        &self,
        config: &Configuration,
        resource: u32,
        max_resource: u32,
        seed: u64,
    ) -> Result<FittedModel, TrainError> {
        let algo = self.space.algorithm(&config.algorithm_id).ok_or_else(|| {
            TrainError::InvalidConfiguration(crate::search_space::Violation::UnknownAlgorithm(
                config.algorithm_id.clone(),
            ))
        })?;
        let amount = scale_resource(resource, max_resource, algo.max_resource);
        let budget = ResourceBudget::new(amount, algo.max_resource, algo.budget_semantics)?;
        Ok(train(self.space, config, &self.splits.train, budget, seed)?.model)
    }

    fn try_score(&self, config: &Configuration, resource: u32, max_resource: u32, seed: u64) -> Result<f64, String> {
        let model = self
            .fit(config, resource, max_resource, seed)
            .map_err(|e| e.to_string())?;
        let pred: Predictions = model
            .predict(&self.splits.valid.features)
            .map_err(|e| e.to_string())?;
        let score = self
            .metric
            .score(&self.splits.valid.target, &pred)
            .map_err(|e| e.to_string())?;
        if score.is_finite() {
            Ok(score)
        } else {
            Err("non-finite validation score".into())
        }
    }
}

impl TrialEvaluator for HoldoutEvaluator<'_> {
    fn evaluate(
        &self,
        config: &Configuration,
        resource: u32,
        max_resource: u32,
        seed: u64,
    ) -> Evaluation {
        let start = Instant::now();
        let result = self.try_score(config, resource, max_resource, seed);
        let wall_time = start.elapsed().as_secs_f64();
        match result {
            Ok(score) => Evaluation {
                score,
                failure: None,
                wall_time,
            },
            Err(msg) => Evaluation {
                score: self.worst_score(),
                failure: Some(msg),
                wall_time,
            },
        }
    }

    fn worst_score(&self) -> f64 {
        self.metric.worst()
    }
}

/// Scores trials with a closure of `(config, resource)`; for injecting
/// known scores into optimizers.
pub struct FnEvaluator<F> {
    score: F,
    worst: f64,
}

impl<F> FnEvaluator<F>
where
    F: Fn(&Configuration, u32) -> f64 + Sync,
{
    pub fn new(worst: f64, score: F) -> Self {
        Self { score, worst }
    }
}

impl<F> TrialEvaluator for FnEvaluator<F>
where
    F: Fn(&Configuration, u32) -> f64 + Sync,
{
    fn evaluate(&self, config: &Configuration, resource: u32, _max_resource: u32, _seed: u64) -> Evaluation {
        Evaluation {
            score: (self.score)(config, resource),
            failure: None,
            wall_time: 0.0,
        }
    }

    fn worst_score(&self) -> f64 {
        self.worst
    }
}

/// Maps a resource in optimizer units onto an algorithm's own cap.
pub fn scale_resource(resource: u32, optimizer_max: u32, algorithm_max: u32) -> u32 {
    if optimizer_max == algorithm_max {
        return resource.clamp(1, algorithm_max);
    }
    let scaled = (f64::from(resource) * f64::from(algorithm_max) / f64::from(optimizer_max)).round();
    (scaled as u32).clamp(1, algorithm_max)
}

/// Admits, evaluates and commits a single trial.
pub fn evaluate_trial<E: TrialEvaluator + ?Sized>(
    evaluator: &E,
    config: &Configuration,
    resource: u32,
    max_resource: u32,
    seed: u64,
    ordinal: u64,
    ledger: &mut TimeLedger,
) -> Result<TrialRecord, LedgerExhausted> {
    ledger.admit(resource)?;
    let eval = evaluator.evaluate(config, resource, max_resource, seed);
    let elapsed = ledger.commit(resource, eval.wall_time);
    Ok(make_record(ordinal, config.clone(), resource, max_resource, seed, eval, elapsed))
}

pub(crate) fn make_record(
    ordinal: u64,
    config: Configuration,
    resource: u32,
    max_resource: u32,
    seed: u64,
    eval: Evaluation,
    elapsed: f64,
) -> TrialRecord {
    TrialRecord {
        ordinal,
        config,
        resource,
        max_resource,
        validation_score: eval.score,
        failed: eval.failure.is_some(),
        failure: eval.failure,
        seed,
        elapsed,
        wall_time: eval.wall_time,
    }
}
