//! The four scoring metrics. All are maximized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::{Predictions, Target, Task};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("metric needs a non-empty input")]
    Empty,
    #[error("length mismatch: {truth} labels vs {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("r2 is undefined for a constant target")]
    ConstantTarget,
    #[error("r2 needs at least two values")]
    TooShort,
    #[error("auc needs both classes present")]
    SingleClass,
    #[error("metric {metric} does not apply to {task} tasks")]
    Incompatible { metric: MetricKind, task: &'static str },
    #[error("predictions do not match the target kind")]
    KindMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    BalancedAccuracy,
    Accuracy,
    R2,
    Auc,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::BalancedAccuracy => "balanced-accuracy",
            MetricKind::Accuracy => "accuracy",
            MetricKind::R2 => "r2",
            MetricKind::Auc => "auc",
        }
    }

    pub fn supports(self, task: Task) -> bool {
        match self {
            MetricKind::BalancedAccuracy | MetricKind::Accuracy => task.is_classification(),
            MetricKind::R2 => task == Task::Regression,
            MetricKind::Auc => task == Task::Binary,
        }
    }

    /// The default metric of a task.
    pub fn default_for(task: Task) -> Self {
        match task {
            Task::Regression => MetricKind::R2,
            _ => MetricKind::BalancedAccuracy,
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "balanced-accuracy" => Ok(MetricKind::BalancedAccuracy),
            "accuracy" => Ok(MetricKind::Accuracy),
            "r2" => Ok(MetricKind::R2),
            "auc" => Ok(MetricKind::Auc),
            other => Err(format!("unknown metric {other:?}")),
        }
    }
}

pub const DEFAULT_R2_FLOOR: f64 = -1.0;

/// A metric together with its failure sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub kind: MetricKind,
    /// Worst score for r2; successful r2 scores are clamped to it so a
    /// failed trial never outranks a finished one.
    pub r2_floor: f64,
}

impl Metric {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            r2_floor: DEFAULT_R2_FLOOR,
        }
    }

    pub fn worst(&self) -> f64 {
        match self.kind {
            MetricKind::R2 => self.r2_floor,
            _ => 0.0,
        }
    }

    pub fn check_task(&self, task: Task) -> Result<(), MetricError> {
        if self.kind.supports(task) {
            Ok(())
        } else {
            Err(MetricError::Incompatible {
                metric: self.kind,
                task: task.as_str(),
            })
        }
    }

    pub fn score(&self, truth: &Target, pred: &Predictions) -> Result<f64, MetricError> {
        match (self.kind, truth, pred) {
            (MetricKind::BalancedAccuracy, Target::Classes { labels, .. }, Predictions::Classes { labels: p, .. }) => {
                balanced_accuracy(labels, p)
            }
            (MetricKind::Accuracy, Target::Classes { labels, .. }, Predictions::Classes { labels: p, .. }) => {
                accuracy(labels, p)
            }
            (MetricKind::Auc, Target::Classes { labels, .. }, Predictions::Classes { scores, .. }) => {
                let positive: Vec<f64> = scores.iter().map(|r| r.get(1).copied().unwrap_or(0.0)).collect();
                auc(labels, &positive)
            }
            (MetricKind::R2, Target::Values(y), Predictions::Values(p)) => {
                r2(y, p).map(|v| v.max(self.r2_floor))
            }
            _ => Err(MetricError::KindMismatch),
        }
    }
}

fn check_lengths(truth: usize, pred: usize) -> Result<(), MetricError> {
    if truth != pred {
        return Err(MetricError::LengthMismatch { truth, pred });
    }
    if truth == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Mean per-class recall over the classes present in `y_true`.
pub fn balanced_accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64, MetricError> {
    check_lengths(y_true.len(), y_pred.len())?;
    let k = y_true.iter().max().map_or(0, |m| m + 1);
    let mut support = vec![0usize; k];
    let mut hits = vec![0usize; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        support[t] += 1;
        if t == p {
            hits[t] += 1;
        }
    }
    let (sum, classes) = support
        .iter()
        .zip(&hits)
        .filter(|(s, _)| **s > 0)
        .fold((0.0, 0usize), |(acc, c), (s, h)| {
            (acc + *h as f64 / *s as f64, c + 1)
        });
    Ok(sum / classes as f64)
}

pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64, MetricError> {
    check_lengths(y_true.len(), y_pred.len())?;
    let hits = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y_true.len() as f64)
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r2(y_true: &[f64], y_pred: &[f64]) -> Result<f64, MetricError> {
    check_lengths(y_true.len(), y_pred.len())?;
    if y_true.len() < 2 {
        return Err(MetricError::TooShort);
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantTarget);
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// Computed from tie-averaged ranks in `O(n log n)`.
pub fn auc(y_true: &[usize], scores: &[f64]) -> Result<f64, MetricError> {
    check_lengths(y_true.len(), scores.len())?;
    let n_pos = y_true.iter().filter(|&&y| y == 1).count();
    let n_neg = y_true.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the rank sum, so tied groups stay integral.
    let mut rank_sum_x2: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        // Ranks start+1 ..= end, averaged.
        let avg_x2 = (start + 1 + end) as u64;
        let positives = order[start..end].iter().filter(|&&i| y_true[i] == 1).count() as u64;
        rank_sum_x2 += avg_x2 * positives;
        start = end;
    }
    let n_pos = n_pos as u64;
    let u_x2 = rank_sum_x2 - n_pos * (n_pos + 1);
    Ok(u_x2 as f64 / (2 * n_pos * n_neg as u64) as f64)
}
