use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{OptimizerError, Variant};
use crate::evaluation::{make_record, BudgetMode, TimeLedger, TrialEvaluator, TrialRecord};
use crate::search_space::{sample_configuration, Configuration, SearchSpace};
use crate::util::mix_seed;

/// One rung of a successive-halving bracket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub index: usize,
    pub resource: u32,
    /// Ordinals of the trials evaluated at this rung.
    pub trials: Vec<u64>,
    /// Ordinals promoted to the next rung, best first.
    pub promoted: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketTable {
    /// Hyperband sweep this bracket belongs to (0 for plain SH).
    pub sweep: usize,
    /// Bracket index `s`; the number of halvings it plans for.
    pub bracket: usize,
    pub rungs: Vec<Rung>,
    /// Number of portfolio configurations seeded into the first rung.
    pub seeded: usize,
    /// False when the budget ran out inside the bracket.
    pub complete: bool,
}

impl BracketTable {
    /// `(configs, resource)` per rung.
    pub fn shape(&self) -> Vec<(usize, u32)> {
        self.rungs.iter().map(|r| (r.trials.len(), r.resource)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub index: usize,
    pub members: Vec<u64>,
    pub survivors: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub elapsed: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestTrial {
    pub ordinal: u64,
    pub config: Configuration,
    pub score: f64,
}

/// Full history of one optimizer run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub variant: Variant,
    pub master_seed: u64,
    pub max_resource: u32,
    pub budget_mode: BudgetMode,
    pub reference_budget: f64,
    pub consumed: f64,
    pub trials: Vec<TrialRecord>,
    pub best: BestTrial,
    /// Running maximum of validation score in commit order.
    pub anytime_curve: Vec<CurvePoint>,
    pub brackets: Vec<BracketTable>,
    pub generations: Vec<GenerationRecord>,
}

impl RunResult {
    pub fn trial(&self, ordinal: u64) -> Option<&TrialRecord> {
        self.trials.get(ordinal as usize).filter(|t| t.ordinal == ordinal)
    }

    /// Consumption in full-budget equivalents, `sum(r / R)`.
    pub fn full_budget_equivalents(&self) -> f64 {
        self.trials.iter().map(TrialRecord::cost).sum()
    }
}

/// Ranking used for promotions and selections: score descending, finished
/// trials before failed ones, then issue order.
pub fn rank_order(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    b.validation_score
        .total_cmp(&a.validation_score)
        .then(a.failed.cmp(&b.failed))
        .then(a.ordinal.cmp(&b.ordinal))
}

pub fn top_k<'r>(records: &[&'r TrialRecord], k: usize) -> Vec<&'r TrialRecord> {
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| rank_order(a, b));
    sorted.truncate(k);
    sorted
}

/// Mutable state of one optimizer run: the ledger, the sampling stream and
/// the committed trials.
///
/// Evaluation happens in batches. Admission and commit run in ordinal order
/// on the calling thread; only the evaluations themselves run in parallel,
/// so in resource mode the result does not depend on the worker count.
pub struct Session<'a, E: TrialEvaluator + ?Sized> {
    pub(crate) space: &'a SearchSpace,
    evaluator: &'a E,
    ledger: &'a mut TimeLedger,
    pub(crate) rng: ChaCha8Rng,
    master_seed: u64,
    pub(crate) max_resource: u32,
    pool: Option<rayon::ThreadPool>,
    trials: Vec<TrialRecord>,
    curve: Vec<CurvePoint>,
    best: Option<usize>,
    pub(crate) brackets: Vec<BracketTable>,
    pub(crate) generations: Vec<GenerationRecord>,
    exhausted: bool,
}

impl<'a, E: TrialEvaluator + ?Sized> Session<'a, E> {
    pub fn new(
        space: &'a SearchSpace,
        evaluator: &'a E,
        ledger: &'a mut TimeLedger,
        master_seed: u64,
        max_resource: u32,
    ) -> Self {
        Self {
            space,
            evaluator,
            ledger,
            rng: ChaCha8Rng::seed_from_u64(master_seed),
            master_seed,
            max_resource: max_resource.max(1),
            pool: None,
            trials: Vec::new(),
            curve: Vec::new(),
            best: None,
            brackets: Vec::new(),
            generations: Vec::new(),
            exhausted: false,
        }
    }

    /// Evaluates batches on `workers` threads.
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.pool = (workers > 1).then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .expect("thread pool")
        });
        self
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted || self.ledger.is_exhausted()
    }

    pub fn sample(&mut self) -> Configuration {
        sample_configuration(self.space, &mut self.rng)
    }

    /// Evaluates `jobs` in order until the ledger refuses one; returns the
    /// committed records.
    pub fn evaluate_batch(&mut self, jobs: Vec<(Configuration, u32)>) -> Vec<TrialRecord> {
        let mut admitted = Vec::with_capacity(jobs.len());
        for (config, resource) in jobs {
            let resource = resource.clamp(1, self.max_resource);
            if self.ledger.admit(resource).is_err() {
                self.exhausted = true;
                break;
            }
            let ordinal = (self.trials.len() + admitted.len()) as u64;
            let seed = mix_seed(self.master_seed ^ 0x5EED_0000_0000_0000, ordinal);
            admitted.push((ordinal, config, resource, seed));
        }
        let evaluator = self.evaluator;
        let max_resource = self.max_resource;
        let run = |job: &(u64, Configuration, u32, u64)| {
            evaluator.evaluate(&job.1, job.2, max_resource, job.3)
        };
        let evals: Vec<_> = match &self.pool {
            Some(pool) if admitted.len() > 1 => pool.install(|| admitted.par_iter().map(run).collect()),
            _ => admitted.iter().map(run).collect(),
        };
        let mut out = Vec::with_capacity(admitted.len());
        for ((ordinal, config, resource, seed), eval) in admitted.into_iter().zip(evals) {
            let elapsed = self.ledger.commit(resource, eval.wall_time);
            let record = make_record(ordinal, config, resource, max_resource, seed, eval, elapsed);
            let improved = self
                .best
                .is_none_or(|b| record.validation_score > self.trials[b].validation_score);
            self.trials.push(record.clone());
            if improved {
                self.best = Some(self.trials.len() - 1);
            }
            let best = self.best.expect("a trial has committed");
            self.curve.push(CurvePoint {
                elapsed,
                score: self.trials[best].validation_score,
            });
            out.push(record);
        }
        out
    }

    pub fn finish(self, variant: Variant) -> Result<RunResult, OptimizerError> {
        let best = self.best.ok_or(OptimizerError::EmptyRun)?;
        let b = &self.trials[best];
        Ok(RunResult {
            variant,
            master_seed: self.master_seed,
            max_resource: self.max_resource,
            budget_mode: self.ledger.mode(),
            reference_budget: self.ledger.reference(),
            consumed: self.ledger.elapsed(),
            best: BestTrial {
                ordinal: b.ordinal,
                config: b.config.clone(),
                score: b.validation_score,
            },
            trials: self.trials,
            anytime_curve: self.curve,
            brackets: self.brackets,
            generations: self.generations,
        })
    }
}
