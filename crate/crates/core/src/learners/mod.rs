//! Budget-aware learners for the CASH algorithm set.
//!
//! Every learner consumes an integer resource `r` in `[1, R]` whose meaning
//! is given by its [`BudgetSemantics`]: epochs, boosting rounds, number of
//! trees, or the training fraction `r / R`. Higher budgets retrain from
//! scratch; nothing is resumed.

mod boosting;
mod dataset;
mod knn;
mod linear;
mod naive_bayes;
mod roster;
mod tree;

use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::search_space::{
    validate_configuration, BudgetSemantics, Configuration, ParamValue, SearchSpace, Violation,
};

pub use dataset::{DataError, Dataset, Matrix, Target, Task};
pub use roster::{
    default_classification_space, default_regression_space, default_space, DEFAULT_MAX_RESOURCE,
};

use boosting::{BoostedRegressor, BoostedStumps};
use knn::Knn;
use linear::{LogisticRegression, RidgeRegression};
use naive_bayes::GaussianNb;
use tree::{RandomForest, RegressionTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LearnerFamily {
    LogisticRegression,
    BoostedStumps,
    RandomForest,
    Knn,
    GaussianNb,
    Ridge,
    RegressionTree,
    BoostedRegressionStumps,
}

impl LearnerFamily {
    pub const ALL: [LearnerFamily; 8] = [
        LearnerFamily::LogisticRegression,
        LearnerFamily::BoostedStumps,
        LearnerFamily::RandomForest,
        LearnerFamily::Knn,
        LearnerFamily::GaussianNb,
        LearnerFamily::Ridge,
        LearnerFamily::RegressionTree,
        LearnerFamily::BoostedRegressionStumps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LearnerFamily::LogisticRegression => "logistic-regression",
            LearnerFamily::BoostedStumps => "boosted-stumps",
            LearnerFamily::RandomForest => "random-forest",
            LearnerFamily::Knn => "knn",
            LearnerFamily::GaussianNb => "gaussian-nb",
            LearnerFamily::Ridge => "ridge",
            LearnerFamily::RegressionTree => "regression-tree",
            LearnerFamily::BoostedRegressionStumps => "boosted-regression-stumps",
        }
    }

    pub fn supports(self, task: Task) -> bool {
        let regression = matches!(
            self,
            LearnerFamily::Ridge
                | LearnerFamily::RegressionTree
                | LearnerFamily::BoostedRegressionStumps
        );
        regression == (task == Task::Regression)
    }
}

impl FromStr for LearnerFamily {
    type Err = TrainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LearnerFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| TrainError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("unknown learner family {0:?}")]
    UnknownFamily(String),
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(#[from] Violation),
    #[error("learner {family} does not support {task} tasks")]
    TaskMismatch { family: &'static str, task: &'static str },
    #[error("resource {amount} outside [1, {max}]")]
    Budget { amount: u32, max: u32 },
    #[error("degenerate training data: {0}")]
    DegenerateData(String),
    #[error("training diverged: {0}")]
    Diverged(&'static str),
    #[error("feature width {found} does not match the model's {expected}")]
    WidthMismatch { expected: usize, found: usize },
}

/// An amount of training resource for one algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResourceBudget {
    pub amount: u32,
    pub max: u32,
    pub semantics: BudgetSemantics,
}

impl ResourceBudget {
    pub fn new(amount: u32, max: u32, semantics: BudgetSemantics) -> Result<Self, TrainError> {
        if amount == 0 || amount > max {
            return Err(TrainError::Budget { amount, max });
        }
        Ok(Self {
            amount,
            max,
            semantics,
        })
    }

    pub fn fraction(&self) -> f64 {
        self.amount as f64 / self.max as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Classes {
        labels: Vec<usize>,
        /// One row per example, normalized to sum to one.
        scores: Vec<Vec<f64>>,
    },
    Values(Vec<f64>),
}

impl Predictions {
    pub fn len(&self) -> usize {
        match self {
            Predictions::Classes { labels, .. } => labels.len(),
            Predictions::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Builds class predictions from score rows; labels are the row argmax
    /// with ties going to the lower class id.
    pub fn from_scores(scores: Vec<Vec<f64>>) -> Self {
        let labels = scores.iter().map(|row| argmax(row)).collect();
        Predictions::Classes { labels, scores }
    }
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone)]
enum Model {
    Constant(usize),
    Logistic(LogisticRegression),
    Stumps(BoostedStumps),
    Forest(RandomForest),
    Knn(Knn),
    NaiveBayes(GaussianNb),
    Ridge(RidgeRegression),
    Tree(RegressionTree),
    RegStumps(BoostedRegressor),
}

/// A trained, immutable model.
#[derive(Debug, Clone)]
pub struct FittedModel {
    task: Task,
    n_classes: usize,
    n_features: usize,
    model: Model,
}

impl FittedModel {
    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn predict(&self, features: &Matrix) -> Result<Predictions, TrainError> {
        predict(self, features)
    }
}

#[derive(Debug, Clone)]
pub struct TrainedOutcome {
    pub model: FittedModel,
    pub wall_time: f64,
    pub resource_used: u32,
}

/// Trains `config` on `data` with `budget.amount` units of resource.
///
/// Deterministic in `(config, data, budget, seed)`.
pub fn train(
    space: &SearchSpace,
    config: &Configuration,
    data: &Dataset,
    budget: ResourceBudget,
    seed: u64,
) -> Result<TrainedOutcome, TrainError> {
    validate_configuration(space, config)?;
    let algo = space
        .algorithm(&config.algorithm_id)
        .expect("validated configuration has a known algorithm");
    let family: LearnerFamily = algo.learner_family.parse()?;
    if !family.supports(data.task) {
        return Err(TrainError::TaskMismatch {
            family: family.name(),
            task: data.task.as_str(),
        });
    }
    if budget.amount == 0 || budget.amount > algo.max_resource {
        return Err(TrainError::Budget {
            amount: budget.amount,
            max: algo.max_resource,
        });
    }
    let budget = ResourceBudget {
        max: algo.max_resource,
        semantics: algo.budget_semantics,
        ..budget
    };

    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let units = budget.amount as usize;
    let subsampled;
    let train_data = if budget.semantics == BudgetSemantics::SubsampleFraction {
        subsampled = subsample(data, budget.fraction(), &mut rng);
        &subsampled
    } else {
        data
    };
    let params = Params(config);

    let model = if data.task.is_classification() {
        let present = classes_present(train_data);
        if present < 2 {
            if family == LearnerFamily::GaussianNb {
                let only = train_data.labels().and_then(|l| l.first().copied()).unwrap_or(0);
                Model::Constant(only)
            } else {
                return Err(TrainError::DegenerateData(format!(
                    "training split holds {present} class(es)"
                )));
            }
        } else {
            match family {
                LearnerFamily::LogisticRegression => Model::Logistic(LogisticRegression::fit(
                    train_data,
                    units,
                    params.real("learning_rate", 0.1),
                    params.real("l2", 1e-4),
                    &mut rng,
                )?),
                LearnerFamily::BoostedStumps => Model::Stumps(BoostedStumps::fit(
                    train_data,
                    units,
                    params.real("learning_rate", 0.3),
                )),
                LearnerFamily::RandomForest => Model::Forest(RandomForest::fit(
                    train_data,
                    units,
                    params.int("max_depth", 6) as usize,
                    params.real("feature_fraction", 0.5),
                    seed,
                )),
                LearnerFamily::Knn => Model::Knn(Knn::fit(
                    train_data,
                    params.int("k", 5) as usize,
                    params.real("distance_power", 2.0),
                )),
                LearnerFamily::GaussianNb => Model::NaiveBayes(GaussianNb::fit(
                    train_data,
                    params.real("var_smoothing", 1e-9),
                )),
                _ => unreachable!("support checked above"),
            }
        }
    } else {
        if train_data.len() < 2 {
            return Err(TrainError::DegenerateData(
                "regression needs at least two training rows".into(),
            ));
        }
        match family {
            LearnerFamily::Ridge => Model::Ridge(RidgeRegression::fit(
                train_data,
                units,
                params.real("learning_rate", 0.01),
                params.real("l2", 1e-4),
                &mut rng,
            )?),
            LearnerFamily::RegressionTree => Model::Tree(RegressionTree::fit(
                train_data,
                params.int("max_depth", 6) as usize,
                params.int("min_samples_leaf", 1) as usize,
            )),
            LearnerFamily::BoostedRegressionStumps => Model::RegStumps(BoostedRegressor::fit(
                train_data,
                units,
                params.real("learning_rate", 0.3),
            )),
            _ => unreachable!("support checked above"),
        }
    };

    Ok(TrainedOutcome {
        model: FittedModel {
            task: data.task,
            n_classes: data.n_classes(),
            n_features: data.n_features(),
            model,
        },
        wall_time: start.elapsed().as_secs_f64(),
        resource_used: budget.amount,
    })
}

pub fn predict(model: &FittedModel, features: &Matrix) -> Result<Predictions, TrainError> {
    if features.cols() != model.n_features {
        return Err(TrainError::WidthMismatch {
            expected: model.n_features,
            found: features.cols(),
        });
    }
    let rows = 0..features.rows();
    if model.task == Task::Regression {
        let values = rows
            .map(|i| {
                let x = features.row(i);
                match &model.model {
                    Model::Ridge(m) => m.predict_one(x),
                    Model::Tree(m) => m.predict_one(x),
                    Model::RegStumps(m) => m.predict_one(x),
                    _ => unreachable!("regression task holds a regression model"),
                }
            })
            .collect();
        return Ok(Predictions::Values(values));
    }
    let k = model.n_classes;
    let scores = rows
        .map(|i| {
            let x = features.row(i);
            let mut row = match &model.model {
                Model::Constant(c) => {
                    let mut r = vec![0.0; k];
                    r[*c] = 1.0;
                    r
                }
                Model::Logistic(m) => m.proba(x),
                Model::Stumps(m) => m.proba(x),
                Model::Forest(m) => m.proba(x),
                Model::Knn(m) => m.proba(x),
                Model::NaiveBayes(m) => m.proba(x),
                _ => unreachable!("classification task holds a classifier"),
            };
            normalize(&mut row);
            row
        })
        .collect();
    Ok(Predictions::from_scores(scores))
}

fn normalize(row: &mut [f64]) {
    let sum: f64 = row.iter().sum();
    if sum > 0.0 && sum.is_finite() {
        row.iter_mut().for_each(|v| *v /= sum);
    } else {
        let u = 1.0 / row.len() as f64;
        row.iter_mut().for_each(|v| *v = u);
    }
}

fn classes_present(data: &Dataset) -> usize {
    data.indices_by_class().iter().filter(|g| !g.is_empty()).count()
}

/// Seeded sample of `fraction` of the rows, stratified by class with at
/// least one example per present class. Row order is preserved.
fn subsample(data: &Dataset, fraction: f64, rng: &mut ChaCha8Rng) -> Dataset {
    if fraction >= 1.0 {
        return data.clone();
    }
    let groups = if data.task.is_classification() {
        data.indices_by_class()
    } else {
        vec![(0..data.len()).collect()]
    };
    let mut keep = Vec::new();
    for mut g in groups.into_iter().filter(|g| !g.is_empty()) {
        let take = ((fraction * g.len() as f64).round() as usize).clamp(1, g.len());
        g.shuffle(rng);
        keep.extend_from_slice(&g[..take]);
    }
    keep.sort_unstable();
    data.subset(&keep)
}

struct Params<'a>(&'a Configuration);

impl Params<'_> {
    fn real(&self, name: &str, default: f64) -> f64 {
        self.0
            .get(name)
            .and_then(ParamValue::as_f64)
            .unwrap_or(default)
    }

    fn int(&self, name: &str, default: i64) -> i64 {
        match self.0.get(name) {
            Some(ParamValue::Int(v)) => *v,
            Some(ParamValue::Real(v)) => v.round() as i64,
            _ => default,
        }
    }
}

/// Per-feature standardization fitted on training rows.
#[derive(Debug, Clone)]
pub(crate) struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    pub(crate) fn fit(features: &Matrix) -> Self {
        let (n, d) = (features.rows(), features.cols());
        let mut mean = vec![0.0; d];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(features.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(features.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub(crate) fn apply_matrix(&self, features: &Matrix) -> Matrix {
        let mut data = Vec::with_capacity(features.rows() * features.cols());
        for i in 0..features.rows() {
            data.extend(self.apply(features.row(i)));
        }
        Matrix::new(features.rows(), features.cols(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search_space::{AlgorithmSpec, HyperparameterDomain};
    use rand_distr::{Distribution, Normal};

    pub(crate) fn two_gaussians(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let c = i % 2;
            let center = if c == 1 { 2.0 } else { -2.0 };
            rows.push(vec![
                center + noise.sample(&mut rng),
                center + noise.sample(&mut rng),
            ]);
            labels.push(c);
        }
        Dataset::classification(&rows, labels).unwrap()
    }

    fn single(family: &str, semantics: BudgetSemantics, domains: Vec<HyperparameterDomain>) -> SearchSpace {
        SearchSpace::new(vec![AlgorithmSpec {
            algorithm_id: family.into(),
            learner_family: family.into(),
            domains,
            budget_semantics: semantics,
            max_resource: 50,
        }])
        .unwrap()
    }

    fn accuracy(pred: &Predictions, data: &Dataset) -> f64 {
        let Predictions::Classes { labels, .. } = pred else {
            panic!("expected classes")
        };
        let truth = data.labels().unwrap();
        labels.iter().zip(truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64
    }

    #[test]
    fn knn_memorizes_training_split() {
        let data = two_gaussians(120, 1);
        let space = single(
            "knn",
            BudgetSemantics::SubsampleFraction,
            vec![HyperparameterDomain::integer("k", 1, 10, 1).unwrap()],
        );
        let config = space.algorithms()[0].default_configuration();
        let budget = ResourceBudget::new(50, 50, BudgetSemantics::SubsampleFraction).unwrap();
        let out = train(&space, &config, &data, budget, 0).unwrap();
        let pred = out.model.predict(&data.features).unwrap();
        assert_eq!(accuracy(&pred, &data), 1.0);
        assert_eq!(out.resource_used, 50);
    }

    #[test]
    fn single_stump_beats_majority_rate() {
        // Imbalanced: 70% class 0.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..100 {
            let c = usize::from(i % 10 >= 7);
            rows.push(vec![c as f64 + noise.sample(&mut rng), noise.sample(&mut rng)]);
            labels.push(c);
        }
        let data = Dataset::classification(&rows, labels).unwrap();
        for lr in [0.01, 0.3, 1.0] {
            let space = single(
                "boosted-stumps",
                BudgetSemantics::Rounds,
                vec![HyperparameterDomain::log("learning_rate", 0.01, 1.0, lr).unwrap()],
            );
            let config = space.algorithms()[0].default_configuration();
            let budget = ResourceBudget::new(1, 50, BudgetSemantics::Rounds).unwrap();
            let out = train(&space, &config, &data, budget, 0).unwrap();
            let acc = accuracy(&out.model.predict(&data.features).unwrap(), &data);
            assert!(acc >= 0.7, "lr {lr}: accuracy {acc}");
        }
        assert!(ResourceBudget::new(0, 50, BudgetSemantics::Rounds).is_err());
    }

    #[test]
    fn logistic_separates_two_gaussians() {
        let data = two_gaussians(200, 3);
        // Independent check: the analytic separator x0 + x1 = 0 reaches the bar.
        let labels = data.labels().unwrap();
        let analytic = (0..data.len())
            .filter(|&i| {
                let r = data.features.row(i);
                usize::from(r[0] + r[1] > 0.0) == labels[i]
            })
            .count() as f64
            / data.len() as f64;
        assert!(analytic >= 0.95);

        let space = single(
            "logistic-regression",
            BudgetSemantics::Epochs,
            vec![
                HyperparameterDomain::log("learning_rate", 1e-3, 1.0, 0.1).unwrap(),
                HyperparameterDomain::log("l2", 1e-6, 0.1, 1e-4).unwrap(),
            ],
        );
        let config = space.algorithms()[0].default_configuration();
        let budget = ResourceBudget::new(50, 50, BudgetSemantics::Epochs).unwrap();
        let out = train(&space, &config, &data, budget, 4).unwrap();
        let valid = two_gaussians(200, 99);
        let acc = accuracy(&out.model.predict(&valid.features).unwrap(), &valid);
        assert!(acc >= 0.95, "validation accuracy {acc}");
    }

    #[test]
    fn degenerate_and_mismatch_errors() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0]];
        let data = Dataset::classification(&rows, vec![0, 1, 1, 1]).unwrap();
        let one_class = data.subset(&[1, 2, 3]);

        let forest = single("random-forest", BudgetSemantics::TreeCount, vec![]);
        let cfg = forest.algorithms()[0].default_configuration();
        let b = ResourceBudget::new(5, 50, BudgetSemantics::TreeCount).unwrap();
        assert!(matches!(
            train(&forest, &cfg, &one_class, b, 0),
            Err(TrainError::DegenerateData(_))
        ));

        let nb = single("gaussian-nb", BudgetSemantics::SubsampleFraction, vec![]);
        let cfg = nb.algorithms()[0].default_configuration();
        let out = train(&nb, &cfg, &one_class, b, 0).unwrap();
        match out.model.predict(&data.features).unwrap() {
            Predictions::Classes { labels, scores } => {
                assert!(labels.iter().all(|&l| l == 1));
                assert!(scores.iter().all(|r| r[1] == 1.0));
            }
            _ => panic!(),
        }

        let ridge = single("ridge", BudgetSemantics::Epochs, vec![]);
        let cfg = ridge.algorithms()[0].default_configuration();
        assert!(matches!(
            train(&ridge, &cfg, &data, b, 0),
            Err(TrainError::TaskMismatch { .. })
        ));

        let out = train(&forest, &forest.algorithms()[0].default_configuration(), &data, b, 0)
            .unwrap();
        let wide = Matrix::new(1, 2, vec![0.0, 0.0]);
        assert!(matches!(
            out.model.predict(&wide),
            Err(TrainError::WidthMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn roster_models_are_deterministic_and_normalized() {
        let data = two_gaussians(80, 7);
        let space = default_classification_space();
        for algo in space.algorithms() {
            let cfg = algo.default_configuration();
            let b = ResourceBudget::new(algo.max_resource, algo.max_resource, algo.budget_semantics)
                .unwrap();
            let a = train(&space, &cfg, &data, b, 11).unwrap();
            let c = train(&space, &cfg, &data, b, 11).unwrap();
            let pa = a.model.predict(&data.features).unwrap();
            let pc = c.model.predict(&data.features).unwrap();
            assert_eq!(pa, pc, "{}", algo.algorithm_id);
            assert_eq!(pa, a.model.predict(&data.features).unwrap());
            let Predictions::Classes { scores, .. } = pa else { panic!() };
            for row in scores {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn subsample_is_stratified_with_floor() {
        let data = two_gaussians(40, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = subsample(&data, 0.01, &mut rng);
        assert_eq!(s.len(), 2);
        assert_eq!(classes_present(&s), 2);
        let s = subsample(&data, 0.5, &mut rng);
        assert_eq!(s.len(), 20);
    }
}
