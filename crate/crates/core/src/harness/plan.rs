use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::GeneratorSpec;
use super::HarnessError;
use crate::evaluation::{MetricKind, SplitSpec};
use crate::learners::Task;
use crate::optimizers::OptimizerSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParityMode {
    /// Reference budget is the baseline's wall-clock seconds.
    Time,
    /// Reference budget is the baseline's full-budget-equivalent resource.
    TrialCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub id: String,
    /// Task of a CSV source; generators imply their own.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    /// Defaults to balanced accuracy for classification and r2 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Target column of a CSV source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

impl DatasetSpec {
    pub fn generated(id: &str, generator: GeneratorSpec) -> Self {
        Self {
            id: id.to_string(),
            task: None,
            metric: None,
            path: None,
            target: None,
            generator: Some(generator),
        }
    }

    pub fn resolved_task(&self) -> Result<Task, HarnessError> {
        let invalid = |m: String| HarnessError::InvalidPlan(format!("dataset {:?}: {m}", self.id));
        match (&self.generator, &self.path, self.task) {
            (Some(g), None, t) => {
                let gt = g.task().map_err(|e| invalid(e.to_string()))?;
                match t {
                    Some(t) if t != gt => Err(invalid(format!(
                        "task {} does not match generator {} ({})",
                        t.as_str(),
                        g.name,
                        gt.as_str()
                    ))),
                    _ => Ok(gt),
                }
            }
            (None, Some(_), Some(t)) => Ok(t),
            (None, Some(_), None) => Err(invalid("a CSV source needs a task".into())),
            _ => Err(invalid("set exactly one of path and generator".into())),
        }
    }

    pub fn resolved_metric(&self) -> Result<MetricKind, HarnessError> {
        let task = self.resolved_task()?;
        let m = self.metric.unwrap_or(MetricKind::default_for(task));
        if !m.supports(task) {
            return Err(HarnessError::InvalidPlan(format!(
                "dataset {:?}: metric {} does not apply to {} tasks",
                self.id,
                m.as_str(),
                task.as_str()
            )));
        }
        Ok(m)
    }
}

fn default_fractions() -> Vec<f64> {
    vec![0.2]
}
fn default_one() -> usize {
    1
}
fn default_pool() -> usize {
    20
}
fn default_max_size() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkPlan {
    pub datasets: Vec<DatasetSpec>,
    pub optimizers: Vec<OptimizerSpec>,
    pub parity: ParityMode,
    /// Label of the optimizer whose consumption sets the reference budget.
    pub baseline: String,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitSpec,
    /// Budget fractions at which anytime scores are read.
    #[serde(default = "default_fractions")]
    pub anytime_fractions: Vec<f64>,
    /// Threads evaluating trials inside one run.
    #[serde(default = "default_one")]
    pub workers: usize,
    /// Runs (seeds of one dataset) executed concurrently.
    #[serde(default = "default_one")]
    pub jobs: usize,
    #[serde(default)]
    pub ensemble: bool,
    #[serde(default = "default_pool")]
    pub ensemble_pool: usize,
    #[serde(default = "default_max_size")]
    pub ensemble_max_size: usize,
}

impl BenchmarkPlan {
    pub fn new(
        datasets: Vec<DatasetSpec>,
        optimizers: Vec<OptimizerSpec>,
        parity: ParityMode,
        baseline: &str,
        seeds: Vec<u64>,
    ) -> Self {
        Self {
            datasets,
            optimizers,
            parity,
            baseline: baseline.to_string(),
            seeds,
            output: None,
            split: SplitSpec::default(),
            anytime_fractions: default_fractions(),
            workers: 1,
            jobs: 1,
            ensemble: false,
            ensemble_pool: default_pool(),
            ensemble_max_size: default_max_size(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let plan: Self = toml::from_str(text).map_err(|e| HarnessError::InvalidPlan(e.to_string()))?;
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn baseline_spec(&self) -> Option<&OptimizerSpec> {
        self.optimizers.iter().find(|o| o.label() == self.baseline)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::InvalidPlan(m));
        if self.optimizers.is_empty() {
            return bad("plan lists no optimizers".into());
        }
        if self.datasets.is_empty() {
            return bad("plan lists no datasets".into());
        }
        if self.seeds.is_empty() {
            return bad("plan lists no seeds".into());
        }
        let mut labels = HashSet::new();
        for o in &self.optimizers {
            if !labels.insert(o.label()) {
                return bad(format!("optimizer label {:?} appears twice", o.label()));
            }
            o.validate(false)
                .map_err(|e| HarnessError::InvalidPlan(format!("optimizer {:?}: {e}", o.label())))?;
        }
        let Some(base) = self.baseline_spec() else {
            return bad(format!("baseline {:?} is not in the optimizer list", self.baseline));
        };
        base.validate(true)
            .map_err(|e| HarnessError::InvalidPlan(format!("baseline {:?}: {e}", self.baseline)))?;
        let mut ids = HashSet::new();
        for d in &self.datasets {
            if !ids.insert(d.id.as_str()) {
                return bad(format!("dataset id {:?} appears twice", d.id));
            }
            d.resolved_metric()?;
        }
        if let Some(f) = self.anytime_fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return bad(format!("anytime fraction {f} outside (0, 1]"));
        }
        if self.workers == 0 || self.jobs == 0 {
            return bad("workers and jobs must be at least 1".into());
        }
        if self.ensemble && (self.ensemble_pool == 0 || self.ensemble_max_size == 0) {
            return bad("ensemble pool and size must be at least 1".into());
        }
        Ok(())
    }
}
