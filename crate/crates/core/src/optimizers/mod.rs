//! Search strategies. Every optimizer drives a [`Session`] and produces a
//! [`RunResult`].

mod evolutionary;
mod halving;
mod random;
mod results;
mod session;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{TimeLedger, TrialEvaluator};
use crate::search_space::{Configuration, SearchSpace, Violation};

pub use evolutionary::{evolutionary_search, EvolutionOptions};
pub use halving::{
    halving_rungs, hyperband, hyperband_brackets, portfolio_hyperband, portfolio_slots,
    repeated_successive_halving, s_max, successive_halving, HyperbandOptions,
};
pub use random::run_random_search;
pub use results::{write_results, ResultsHeader};
pub use session::{
    rank_order, top_k, BestTrial, BracketTable, CurvePoint, GenerationRecord, RunResult, Rung,
    Session,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Random,
    SuccessiveHalving,
    Hyperband,
    PortfolioHyperband,
    Evolutionary,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Random,
        Variant::SuccessiveHalving,
        Variant::Hyperband,
        Variant::PortfolioHyperband,
        Variant::Evolutionary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Random => "random",
            Variant::SuccessiveHalving => "successive-halving",
            Variant::Hyperband => "hyperband",
            Variant::PortfolioHyperband => "portfolio-hyperband",
            Variant::Evolutionary => "evolutionary",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = OptimizerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| OptimizerError::InvalidSpec(format!("unknown optimizer {s:?}")))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizerError {
    #[error("budget exhausted before any trial completed")]
    EmptyRun,
    #[error("no configurations to evaluate")]
    EmptyConfigurations,
    #[error("portfolio entry {index} is invalid: {violation}")]
    InvalidPortfolioEntry { index: usize, violation: Violation },
    #[error("invalid optimizer spec: {0}")]
    InvalidSpec(String),
}

fn default_eta() -> u32 {
    2
}
fn default_random_share() -> f64 {
    0.25
}
fn default_population() -> usize {
    20
}
fn default_survivors() -> f64 {
    0.2
}
fn default_descendants() -> usize {
    5
}

/// Everything needed to run one optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    /// Label used in reports; defaults to the variant name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub variant: Variant,
    #[serde(default = "default_eta")]
    pub eta: u32,
    /// Defaults to the search space's largest per-algorithm resource.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_resource: Option<u32>,
    /// Budget in full-budget trials. A zero budget is legal and ends in
    /// [`OptimizerError::EmptyRun`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial_limit: Option<u32>,
    /// Budget in seconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub portfolio: Option<PathBuf>,
    #[serde(default = "default_random_share")]
    pub random_share: f64,
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_survivors")]
    pub survivors_fraction: f64,
    #[serde(default = "default_descendants")]
    pub descendants_per_survivor: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    #[serde(default)]
    pub master_seed: u64,
}

impl OptimizerSpec {
    pub fn new(variant: Variant) -> Self {
        Self {
            id: None,
            variant,
            eta: default_eta(),
            max_resource: None,
            trial_limit: None,
            time_limit: None,
            portfolio: None,
            random_share: default_random_share(),
            population_size: default_population(),
            survivors_fraction: default_survivors(),
            descendants_per_survivor: default_descendants(),
            generations: None,
            master_seed: 0,
        }
    }

    pub fn label(&self) -> &str {
        self.id.as_deref().unwrap_or(self.variant.as_str())
    }

    /// Checks the parameters. With `require_limit`, exactly one of
    /// `trial_limit` and `time_limit` must be set.
    pub fn validate(&self, require_limit: bool) -> Result<(), OptimizerError> {
        let bad = |m: String| Err(OptimizerError::InvalidSpec(m));
        if self.eta < 2 {
            return bad(format!("eta must be >= 2, got {}", self.eta));
        }
        if self.max_resource == Some(0) {
            return bad("max_resource must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.random_share) {
            return bad(format!("random_share {} outside [0, 1)", self.random_share));
        }
        match (self.trial_limit, self.time_limit) {
            (Some(_), Some(_)) => return bad("set only one of trial_limit and time_limit".into()),
            (None, None) if require_limit => {
                return bad("one of trial_limit and time_limit is required".into())
            }
            (_, Some(t)) if !(t >= 0.0 && t.is_finite()) => {
                return bad(format!("time_limit must be non-negative, got {t}"))
            }
            _ => {}
        }
        if self.variant == Variant::Evolutionary {
            let keep = self.population_size as f64 * self.survivors_fraction;
            if keep < 1.0 - 1e-9
                || self.survivors_fraction > 1.0
                || self.descendants_per_survivor == 0
            {
                return bad(format!(
                    "population {} with survivors fraction {} and {} descendants is empty",
                    self.population_size, self.survivors_fraction, self.descendants_per_survivor
                ));
            }
        }
        Ok(())
    }

    pub fn resolved_max_resource(&self, space: &SearchSpace) -> u32 {
        self.max_resource.unwrap_or_else(|| space.max_resource()).max(1)
    }

    /// Ledger implied by the spec's own limit.
    pub fn ledger(&self, space: &SearchSpace) -> Result<TimeLedger, OptimizerError> {
        match (self.trial_limit, self.time_limit) {
            (Some(n), None) => Ok(TimeLedger::resource(
                f64::from(n),
                self.resolved_max_resource(space),
            )),
            (None, Some(t)) => Ok(TimeLedger::wall_clock(t)),
            _ => Err(OptimizerError::InvalidSpec(
                "exactly one of trial_limit and time_limit is required".into(),
            )),
        }
    }

    fn hyperband_options(&self) -> HyperbandOptions {
        HyperbandOptions {
            eta: self.eta,
            max_sweeps: None,
        }
    }

    fn evolution_options(&self) -> EvolutionOptions {
        EvolutionOptions {
            population_size: self.population_size,
            survivors_fraction: self.survivors_fraction,
            descendants_per_survivor: self.descendants_per_survivor,
            generations: self.generations,
        }
    }
}

/// Runs `spec` against `ledger`. `portfolio` is only read by the
/// portfolio variant.
pub fn run_optimizer<E: TrialEvaluator + ?Sized>(
    spec: &OptimizerSpec,
    space: &SearchSpace,
    evaluator: &E,
    ledger: &mut TimeLedger,
    portfolio: &[Configuration],
    workers: usize,
) -> Result<RunResult, OptimizerError> {
    spec.validate(false)?;
    let max_resource = spec.resolved_max_resource(space);
    let session =
        Session::new(space, evaluator, ledger, spec.master_seed, max_resource).with_workers(workers);
    match spec.variant {
        Variant::Random => run_random_search(session),
        Variant::SuccessiveHalving => repeated_successive_halving(session, spec.eta),
        Variant::Hyperband => hyperband(session, spec.hyperband_options()),
        Variant::PortfolioHyperband => portfolio_hyperband(
            session,
            portfolio,
            spec.random_share,
            spec.hyperband_options(),
        ),
        Variant::Evolutionary => evolutionary_search(session, spec.evolution_options()),
    }
}
