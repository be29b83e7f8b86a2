use crate::search_space::{AlgorithmSpec, BudgetSemantics, HyperparameterDomain, SearchSpace};

use super::{LearnerFamily, Task};

/// Resource cap shared by every algorithm of the default rosters.
pub const DEFAULT_MAX_RESOURCE: u32 = 27;

fn spec(
    family: LearnerFamily,
    semantics: BudgetSemantics,
    domains: Vec<HyperparameterDomain>,
) -> AlgorithmSpec {
    AlgorithmSpec {
        algorithm_id: family.name().to_string(),
        learner_family: family.name().to_string(),
        domains,
        budget_semantics: semantics,
        max_resource: DEFAULT_MAX_RESOURCE,
    }
}

pub fn default_classification_space() -> SearchSpace {
    let d = |r: Result<HyperparameterDomain, _>| r.expect("static domain is valid");
    SearchSpace::new(vec![
        spec(
            LearnerFamily::LogisticRegression,
            BudgetSemantics::Epochs,
            vec![
                d(HyperparameterDomain::log("learning_rate", 1e-3, 1.0, 0.1)),
                d(HyperparameterDomain::log("l2", 1e-6, 1e-1, 1e-4)),
            ],
        ),
        spec(
            LearnerFamily::BoostedStumps,
            BudgetSemantics::Rounds,
            vec![d(HyperparameterDomain::log("learning_rate", 0.01, 1.0, 0.3))],
        ),
        spec(
            LearnerFamily::RandomForest,
            BudgetSemantics::TreeCount,
            vec![
                d(HyperparameterDomain::integer("max_depth", 1, 12, 6)),
                d(HyperparameterDomain::linear("feature_fraction", 0.1, 1.0, 0.5)),
            ],
        ),
        spec(
            LearnerFamily::Knn,
            BudgetSemantics::SubsampleFraction,
            vec![
                d(HyperparameterDomain::integer("k", 1, 25, 5)),
                d(HyperparameterDomain::linear("distance_power", 1.0, 3.0, 2.0)),
            ],
        ),
        spec(
            LearnerFamily::GaussianNb,
            BudgetSemantics::SubsampleFraction,
            vec![d(HyperparameterDomain::log("var_smoothing", 1e-9, 1e-1, 1e-9))],
        ),
    ])
    .expect("default classification roster is valid")
}

pub fn default_regression_space() -> SearchSpace {
    let d = |r: Result<HyperparameterDomain, _>| r.expect("static domain is valid");
    SearchSpace::new(vec![
        spec(
            LearnerFamily::Ridge,
            BudgetSemantics::Epochs,
            vec![
                d(HyperparameterDomain::log("learning_rate", 1e-3, 0.3, 0.01)),
                d(HyperparameterDomain::log("l2", 1e-6, 1e-1, 1e-4)),
            ],
        ),
        spec(
            LearnerFamily::RegressionTree,
            BudgetSemantics::SubsampleFraction,
            vec![
                d(HyperparameterDomain::integer("max_depth", 1, 12, 6)),
                d(HyperparameterDomain::integer("min_samples_leaf", 1, 20, 1)),
            ],
        ),
        spec(
            LearnerFamily::BoostedRegressionStumps,
            BudgetSemantics::Rounds,
            vec![d(HyperparameterDomain::log("learning_rate", 0.01, 1.0, 0.3))],
        ),
    ])
    .expect("default regression roster is valid")
}

pub fn default_space(task: Task) -> SearchSpace {
    match task {
        Task::Regression => default_regression_space(),
        Task::Binary | Task::Multiclass => default_classification_space(),
    }
}
