//! The CASH search space: a choice of algorithm plus the typed, bounded
//! hyperparameter domains of that algorithm.
//!
//! Conditionality is expressed by partitioning: every algorithm owns its own
//! list of domains, and a [`Configuration`] only assigns the domains of the
//! algorithm it selects.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single hyperparameter value.
///
/// Serialized untagged; integers are tried before reals so that `3` and
/// `3.0` survive a round trip as different variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Choice(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Real(v) => Some(*v),
            ParamValue::Choice(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Choice(v) => write!(f, "{v:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainKind {
    ContinuousLinear { lower: f64, upper: f64 },
    ContinuousLog { lower: f64, upper: f64 },
    Integer { lower: i64, upper: i64 },
    Categorical { choices: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterDomain {
    pub name: String,
    #[serde(flatten)]
    pub kind: DomainKind,
    pub default: ParamValue,
}

impl HyperparameterDomain {
    pub fn new(
        name: impl Into<String>,
        kind: DomainKind,
        default: ParamValue,
    ) -> Result<Self, SpaceError> {
        let domain = Self {
            name: name.into(),
            kind,
            default,
        };
        domain.validate()?;
        Ok(domain)
    }

    pub fn linear(name: &str, lower: f64, upper: f64, default: f64) -> Result<Self, SpaceError> {
        Self::new(
            name,
            DomainKind::ContinuousLinear { lower, upper },
            ParamValue::Real(default),
        )
    }

    pub fn log(name: &str, lower: f64, upper: f64, default: f64) -> Result<Self, SpaceError> {
        Self::new(
            name,
            DomainKind::ContinuousLog { lower, upper },
            ParamValue::Real(default),
        )
    }

    pub fn integer(name: &str, lower: i64, upper: i64, default: i64) -> Result<Self, SpaceError> {
        Self::new(
            name,
            DomainKind::Integer { lower, upper },
            ParamValue::Int(default),
        )
    }

    pub fn categorical(name: &str, choices: &[&str], default: &str) -> Result<Self, SpaceError> {
        Self::new(
            name,
            DomainKind::Categorical {
                choices: choices.iter().map(|c| c.to_string()).collect(),
            },
            ParamValue::Choice(default.to_string()),
        )
    }

    fn validate(&self) -> Result<(), SpaceError> {
        let bad = |reason: String| SpaceError::InvalidDomain {
            domain: self.name.clone(),
            reason,
        };
        match &self.kind {
            DomainKind::ContinuousLinear { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(bad(format!("bounds [{lower}, {upper}] must satisfy lower < upper")));
                }
            }
            DomainKind::ContinuousLog { lower, upper } => {
                if !(lower.is_finite() && upper.is_finite() && lower < upper) {
                    return Err(bad(format!("bounds [{lower}, {upper}] must satisfy lower < upper")));
                }
                if *lower <= 0.0 {
                    return Err(bad(format!("log domain needs lower > 0, got {lower}")));
                }
            }
            DomainKind::Integer { lower, upper } => {
                if lower >= upper {
                    return Err(bad(format!("bounds [{lower}, {upper}] must satisfy lower < upper")));
                }
            }
            DomainKind::Categorical { choices } => {
                if choices.is_empty() {
                    return Err(bad("categorical choices are empty".into()));
                }
                let mut seen = HashSet::new();
                for c in choices {
                    if !seen.insert(c) {
                        return Err(bad(format!("duplicate choice {c:?}")));
                    }
                }
            }
        }
        self.check_value(&self.default)
            .map_err(|v| bad(format!("default: {v}")))
    }

    /// Checks that `value` lies inside this domain.
    pub fn check_value(&self, value: &ParamValue) -> Result<(), Violation> {
        let domain = self.name.clone();
        match (&self.kind, value) {
            (
                DomainKind::ContinuousLinear { lower, upper }
                | DomainKind::ContinuousLog { lower, upper },
                ParamValue::Real(v),
            ) => {
                if v.is_finite() && v >= lower && v <= upper {
                    Ok(())
                } else {
                    Err(Violation::OutOfBounds {
                        domain,
                        value: v.to_string(),
                        lower: lower.to_string(),
                        upper: upper.to_string(),
                    })
                }
            }
            (DomainKind::Integer { lower, upper }, ParamValue::Int(v)) => {
                if v >= lower && v <= upper {
                    Ok(())
                } else {
                    Err(Violation::OutOfBounds {
                        domain,
                        value: v.to_string(),
                        lower: lower.to_string(),
                        upper: upper.to_string(),
                    })
                }
            }
            (DomainKind::Categorical { choices }, ParamValue::Choice(c)) => {
                if choices.contains(c) {
                    Ok(())
                } else {
                    Err(Violation::NotAChoice {
                        domain,
                        value: c.clone(),
                    })
                }
            }
            (kind, value) => Err(Violation::WrongType {
                domain,
                expected: kind.label(),
                found: value.to_string(),
            }),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match &self.kind {
            DomainKind::ContinuousLinear { lower, upper } => {
                let u: f64 = rng.random();
                ParamValue::Real((lower + u * (upper - lower)).clamp(*lower, *upper))
            }
            DomainKind::ContinuousLog { lower, upper } => {
                let (lo, hi) = (lower.ln(), upper.ln());
                let u: f64 = rng.random();
                ParamValue::Real((lo + u * (hi - lo)).exp().clamp(*lower, *upper))
            }
            DomainKind::Integer { lower, upper } => {
                ParamValue::Int(rng.random_range(*lower..=*upper))
            }
            DomainKind::Categorical { choices } => {
                ParamValue::Choice(choices[rng.random_range(0..choices.len())].clone())
            }
        }
    }
}

impl DomainKind {
    fn label(&self) -> &'static str {
        match self {
            DomainKind::ContinuousLinear { .. } => "continuous-linear",
            DomainKind::ContinuousLog { .. } => "continuous-log",
            DomainKind::Integer { .. } => "integer",
            DomainKind::Categorical { .. } => "categorical",
        }
    }
}

/// What one unit of training resource means for an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetSemantics {
    Epochs,
    Rounds,
    TreeCount,
    SubsampleFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub algorithm_id: String,
    pub learner_family: String,
    pub domains: Vec<HyperparameterDomain>,
    pub budget_semantics: BudgetSemantics,
    pub max_resource: u32,
}

impl AlgorithmSpec {
    pub fn domain(&self, name: &str) -> Option<&HyperparameterDomain> {
        self.domains.iter().find(|d| d.name == name)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        if self.max_resource < 1 {
            return Err(SpaceError::InvalidAlgorithm {
                algorithm_id: self.algorithm_id.clone(),
                reason: "max_resource must be at least 1".into(),
            });
        }
        let mut names = HashSet::new();
        for d in &self.domains {
            if !names.insert(d.name.as_str()) {
                return Err(SpaceError::InvalidAlgorithm {
                    algorithm_id: self.algorithm_id.clone(),
                    reason: format!("duplicate domain name {:?}", d.name),
                });
            }
            d.validate()?;
        }
        Ok(())
    }

    fn sample_assignment<R: Rng + ?Sized>(&self, rng: &mut R) -> BTreeMap<String, ParamValue> {
        self.domains
            .iter()
            .map(|d| (d.name.clone(), d.sample(rng)))
            .collect()
    }

    /// The configuration made of every domain's default value.
    pub fn default_configuration(&self) -> Configuration {
        Configuration {
            algorithm_id: self.algorithm_id.clone(),
            assignment: self
                .domains
                .iter()
                .map(|d| (d.name.clone(), d.default.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("search space has no algorithms")]
    Empty,
    #[error("duplicate algorithm id {0:?}")]
    DuplicateAlgorithm(String),
    #[error("algorithm {algorithm_id:?}: {reason}")]
    InvalidAlgorithm { algorithm_id: String, reason: String },
    #[error("domain {domain:?}: {reason}")]
    InvalidDomain { domain: String, reason: String },
    #[error("malformed search space document: {0}")]
    Parse(String),
}

/// A reason a configuration is not a member of a search space.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("unknown algorithm {0:?}")]
    UnknownAlgorithm(String),
    #[error("hyperparameter {domain:?} is not assigned")]
    MissingDomain { domain: String },
    #[error("hyperparameter {domain:?} is not a domain of the algorithm")]
    UnknownDomain { domain: String },
    #[error("hyperparameter {domain:?} = {value} outside bounds [{lower}, {upper}]")]
    OutOfBounds {
        domain: String,
        value: String,
        lower: String,
        upper: String,
    },
    #[error("hyperparameter {domain:?} = {value:?} is not one of the choices")]
    NotAChoice { domain: String, value: String },
    #[error("hyperparameter {domain:?} expects a {expected} value, got {found}")]
    WrongType {
        domain: String,
        expected: &'static str,
        found: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    algorithms: Vec<AlgorithmSpec>,
}

impl SearchSpace {
    pub fn new(algorithms: Vec<AlgorithmSpec>) -> Result<Self, SpaceError> {
        let space = Self { algorithms };
        space.validate()?;
        Ok(space)
    }

    fn validate(&self) -> Result<(), SpaceError> {
        if self.algorithms.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut ids = HashSet::new();
        for a in &self.algorithms {
            if !ids.insert(a.algorithm_id.as_str()) {
                return Err(SpaceError::DuplicateAlgorithm(a.algorithm_id.clone()));
            }
            a.validate()?;
        }
        Ok(())
    }

    pub fn algorithms(&self) -> &[AlgorithmSpec] {
        &self.algorithms
    }

    pub fn algorithm(&self, id: &str) -> Option<&AlgorithmSpec> {
        self.algorithms.iter().find(|a| a.algorithm_id == id)
    }

    /// Largest per-algorithm resource cap.
    pub fn max_resource(&self) -> u32 {
        self.algorithms
            .iter()
            .map(|a| a.max_resource)
            .max()
            .unwrap_or(1)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("search space serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let space: SearchSpace =
            serde_json::from_str(text).map_err(|e| SpaceError::Parse(e.to_string()))?;
        space.validate()?;
        Ok(space)
    }
}

/// An (algorithm, complete hyperparameter assignment) point of the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub algorithm_id: String,
    pub assignment: BTreeMap<String, ParamValue>,
}

impl Configuration {
    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.assignment.get(name)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.algorithm_id)?;
        for (i, (k, v)) in self.assignment.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k}={v}")?;
        }
        write!(f, ")")
    }
}

/// Draws a configuration: a uniformly chosen algorithm, then every one of
/// its domains independently.
pub fn sample_configuration<R: Rng + ?Sized>(space: &SearchSpace, rng: &mut R) -> Configuration {
    let algorithms = space.algorithms();
    let algo = &algorithms[rng.random_range(0..algorithms.len())];
    Configuration {
        algorithm_id: algo.algorithm_id.clone(),
        assignment: algo.sample_assignment(rng),
    }
}

pub fn validate_configuration(space: &SearchSpace, config: &Configuration) -> Result<(), Violation> {
    let algo = space
        .algorithm(&config.algorithm_id)
        .ok_or_else(|| Violation::UnknownAlgorithm(config.algorithm_id.clone()))?;
    for domain in &algo.domains {
        let value = config
            .assignment
            .get(&domain.name)
            .ok_or_else(|| Violation::MissingDomain {
                domain: domain.name.clone(),
            })?;
        domain.check_value(value)?;
    }
    if let Some(extra) = config
        .assignment
        .keys()
        .find(|k| algo.domain(k).is_none())
    {
        return Err(Violation::UnknownDomain {
            domain: extra.clone(),
        });
    }
    Ok(())
}

/// Which dimension a mutation resampled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MutationTarget {
    Hyperparameter(String),
    Algorithm,
    /// Nothing to mutate: one algorithm without hyperparameters.
    Nothing,
}

/// Resamples exactly one dimension of `config`.
///
/// The mutable dimensions are the hyperparameters of the current algorithm
/// and, when the space offers more than one algorithm, the algorithm choice.
/// Switching algorithm draws a different algorithm and a fresh assignment.
pub fn mutate_configuration<R: Rng + ?Sized>(
    space: &SearchSpace,
    config: &Configuration,
    rng: &mut R,
) -> Configuration {
    mutate_configuration_traced(space, config, rng).0
}

/// [`mutate_configuration`], also reporting the dimension it picked.
pub fn mutate_configuration_traced<R: Rng + ?Sized>(
    space: &SearchSpace,
    config: &Configuration,
    rng: &mut R,
) -> (Configuration, MutationTarget) {
    let algo = space
        .algorithm(&config.algorithm_id)
        .expect("mutate_configuration requires a valid configuration");
    let switchable = space.algorithms().len() > 1;
    let slots = algo.domains.len() + usize::from(switchable);
    if slots == 0 {
        return (config.clone(), MutationTarget::Nothing);
    }
    let slot = rng.random_range(0..slots);
    if slot < algo.domains.len() {
        let domain = &algo.domains[slot];
        let mut out = config.clone();
        out.assignment
            .insert(domain.name.clone(), domain.sample(rng));
        (out, MutationTarget::Hyperparameter(domain.name.clone()))
    } else {
        let others: Vec<&AlgorithmSpec> = space
            .algorithms()
            .iter()
            .filter(|a| a.algorithm_id != config.algorithm_id)
            .collect();
        let next = others[rng.random_range(0..others.len())];
        let out = Configuration {
            algorithm_id: next.algorithm_id.clone(),
            assignment: next.sample_assignment(rng),
        };
        (out, MutationTarget::Algorithm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn algo(id: &str, domains: Vec<HyperparameterDomain>) -> AlgorithmSpec {
        AlgorithmSpec {
            algorithm_id: id.into(),
            learner_family: "knn".into(),
            domains,
            budget_semantics: BudgetSemantics::SubsampleFraction,
            max_resource: 9,
        }
    }

    fn four_domain_space() -> SearchSpace {
        SearchSpace::new(vec![
            algo(
                "a",
                vec![
                    HyperparameterDomain::linear("x", 0.0, 1.0, 0.5).unwrap(),
                    HyperparameterDomain::log("lr", 1e-4, 1e-1, 1e-2).unwrap(),
                    HyperparameterDomain::integer("k", 1, 10, 3).unwrap(),
                    HyperparameterDomain::categorical("c", &["p", "q"], "p").unwrap(),
                ],
            ),
            algo(
                "b",
                vec![HyperparameterDomain::integer("depth", 1, 4, 2).unwrap()],
            ),
        ])
        .unwrap()
    }

    #[test]
    fn single_choice_space_is_forced() {
        let space = SearchSpace::new(vec![algo(
            "only",
            vec![HyperparameterDomain::categorical("c", &["x"], "x").unwrap()],
        )])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = sample_configuration(&space, &mut rng);
        assert_eq!(c.algorithm_id, "only");
        assert_eq!(c.get("c"), Some(&ParamValue::Choice("x".into())));
    }

    #[test]
    fn log_domain_decade_fraction() {
        let d = HyperparameterDomain::log("lr", 1e-4, 1e-1, 1e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000;
        let mut in_first_decade = 0;
        for _ in 0..n {
            let v = d.sample(&mut rng).as_f64().unwrap();
            assert!(v > 0.0);
            if (1e-4..=1e-3).contains(&v) {
                in_first_decade += 1;
            }
        }
        let frac = in_first_decade as f64 / n as f64;
        assert!((frac - 1.0 / 3.0).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn same_seed_same_configuration() {
        let space = four_domain_space();
        let a = sample_configuration(&space, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_configuration(&space, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }

    #[test]
    fn validation_reports_offending_domain() {
        let space = four_domain_space();
        let mut c = space.algorithm("a").unwrap().default_configuration();
        assert_eq!(validate_configuration(&space, &c), Ok(()));

        c.assignment.remove("k");
        assert_eq!(
            validate_configuration(&space, &c),
            Err(Violation::MissingDomain { domain: "k".into() })
        );

        let mut c = space.algorithm("a").unwrap().default_configuration();
        c.assignment.insert("x".into(), ParamValue::Real(1.5));
        match validate_configuration(&space, &c) {
            Err(Violation::OutOfBounds {
                domain,
                lower,
                upper,
                ..
            }) => {
                assert_eq!(domain, "x");
                assert_eq!((lower.as_str(), upper.as_str()), ("0", "1"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let c = Configuration {
            algorithm_id: "zzz".into(),
            assignment: BTreeMap::new(),
        };
        assert_eq!(
            validate_configuration(&space, &c),
            Err(Violation::UnknownAlgorithm("zzz".into()))
        );
    }

    #[test]
    fn mutation_single_domain_resamples_it() {
        let space = SearchSpace::new(vec![algo(
            "a",
            vec![HyperparameterDomain::integer("k", 1, 1000, 1).unwrap()],
        )])
        .unwrap();
        let base = space.algorithm("a").unwrap().default_configuration();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let changed = (0..50)
            .filter(|_| mutate_configuration(&space, &base, &mut rng) != base)
            .count();
        assert!(changed > 40);
    }

    #[test]
    fn mutation_targets_are_uniform() {
        let space = four_domain_space();
        let base = space.algorithm("a").unwrap().default_configuration();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 1000;
        let mut counts = std::collections::HashMap::new();
        for _ in 0..n {
            let (m, target) = mutate_configuration_traced(&space, &base, &mut rng);
            assert_eq!(validate_configuration(&space, &m), Ok(()));
            match &target {
                MutationTarget::Algorithm => assert_eq!(m.algorithm_id, "b"),
                MutationTarget::Hyperparameter(name) => {
                    for other in base.assignment.keys().filter(|k| *k != name) {
                        assert_eq!(m.get(other), base.get(other));
                    }
                }
                MutationTarget::Nothing => unreachable!(),
            }
            *counts.entry(format!("{target:?}")).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 5);
        for (slot, c) in counts {
            let f = c as f64 / n as f64;
            assert!((f - 0.2).abs() <= 0.05, "{slot} frequency {f}");
        }
    }

    #[test]
    fn json_round_trip() {
        let space = four_domain_space();
        let text = space.to_json();
        assert_eq!(SearchSpace::from_json(&text).unwrap(), space);
    }

    #[test]
    fn invalid_domains_rejected() {
        assert!(HyperparameterDomain::log("lr", 0.0, 1.0, 0.5).is_err());
        assert!(HyperparameterDomain::linear("x", 1.0, 1.0, 1.0).is_err());
        assert!(HyperparameterDomain::integer("k", 1, 5, 9).is_err());
        assert!(HyperparameterDomain::categorical("c", &["a", "a"], "a").is_err());
        assert!(HyperparameterDomain::categorical("c", &[], "a").is_err());
        assert_eq!(SearchSpace::new(vec![]), Err(SpaceError::Empty));
    }
}
