//! Forward ensemble selection with replacement over trained candidates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluation::{Metric, MetricError};
use crate::learners::{Predictions, Target};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("no candidates")]
    Empty,
    #[error("max_size must be at least 1")]
    ZeroSize,
    #[error("candidate {index} has {found} rows on the {split} split, expected {expected}")]
    RowMismatch {
        index: usize,
        split: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("candidates mix classification and regression predictions")]
    KindMismatch,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Validation,
    Test,
}

/// Candidate predictions, sorted by trial ordinal. Test predictions are
/// optional so selection can run before the test split is touched.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    ordinals: Vec<u64>,
    valid: Vec<Predictions>,
    test: Vec<Predictions>,
}

fn same_kind(a: &Predictions, b: &Predictions) -> bool {
    match (a, b) {
        (Predictions::Classes { scores: x, .. }, Predictions::Classes { scores: y, .. }) => {
            x.first().map(Vec::len) == y.first().map(Vec::len)
        }
        (Predictions::Values(_), Predictions::Values(_)) => true,
        _ => false,
    }
}

impl PredictionTable {
    /// `candidates` holds `(ordinal, validation, test)`; pass an empty
    /// test prediction list when test scores are not wanted.
    pub fn new(mut candidates: Vec<(u64, Predictions, Option<Predictions>)>) -> Result<Self, EnsembleError> {
        if candidates.is_empty() {
            return Err(EnsembleError::Empty);
        }
        candidates.sort_by_key(|c| c.0);
        let has_test = candidates[0].2.is_some();
        let v0 = candidates[0].1.len();
        let t0 = candidates[0].2.as_ref().map_or(0, Predictions::len);
        for (index, (_, v, t)) in candidates.iter().enumerate() {
            if v.len() != v0 {
                return Err(EnsembleError::RowMismatch { index, split: "validation", found: v.len(), expected: v0 });
            }
            if !same_kind(v, &candidates[0].1) {
                return Err(EnsembleError::KindMismatch);
            }
            match t {
                Some(t) if has_test && t.len() != t0 => {
                    return Err(EnsembleError::RowMismatch { index, split: "test", found: t.len(), expected: t0 })
                }
                Some(_) if !has_test => return Err(EnsembleError::RowMismatch { index, split: "test", found: t0, expected: 0 }),
                None if has_test => return Err(EnsembleError::RowMismatch { index, split: "test", found: 0, expected: t0 }),
                _ => {}
            }
        }
        let mut table = Self { ordinals: Vec::new(), valid: Vec::new(), test: Vec::new() };
        for (o, v, t) in candidates {
            table.ordinals.push(o);
            table.valid.push(v);
            table.test.extend(t);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.ordinals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordinals.is_empty()
    }

    pub fn ordinals(&self) -> &[u64] {
        &self.ordinals
    }

    pub fn has_test(&self) -> bool {
        !self.test.is_empty()
    }

    fn split(&self, split: Split) -> &[Predictions] {
        match split {
            Split::Validation => &self.valid,
            Split::Test => &self.test,
        }
    }

    /// Uniform average of the multiset given by `counts` (one count per
    /// candidate).
    pub fn average(&self, counts: &[usize], split: Split) -> Predictions {
        let preds = self.split(split);
        let size: usize = counts.iter().sum();
        let w = |c: usize| c as f64 / size as f64;
        match &preds[0] {
            Predictions::Classes { scores, .. } => {
                let k = scores.first().map_or(0, Vec::len);
                let mut rows = vec![vec![0.0; k]; scores.len()];
                for (p, &c) in preds.iter().zip(counts).filter(|(_, &c)| c > 0) {
                    let Predictions::Classes { scores, .. } = p else { unreachable!() };
                    for (acc, row) in rows.iter_mut().zip(scores) {
                        for (a, s) in acc.iter_mut().zip(row) {
                            *a += w(c) * s;
                        }
                    }
                }
                Predictions::from_scores(rows)
            }
            Predictions::Values(v) => {
                let mut out = vec![0.0; v.len()];
                for (p, &c) in preds.iter().zip(counts).filter(|(_, &c)| c > 0) {
                    let Predictions::Values(v) = p else { unreachable!() };
                    for (a, x) in out.iter_mut().zip(v) {
                        *a += w(c) * x;
                    }
                }
                Predictions::Values(out)
            }
        }
    }

    pub fn score(&self, counts: &[usize], truth: &Target, metric: &Metric) -> Result<f64, MetricError> {
        metric.score(truth, &self.average(counts, Split::Validation))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSelection {
    /// Candidate ordinals in pick order; repeats are allowed.
    pub picks: Vec<u64>,
    /// `(ordinal, multiplicity)` in ordinal order.
    pub multiplicities: Vec<(u64, usize)>,
    pub weights: Vec<(u64, f64)>,
    /// Validation score after each greedy step.
    pub trace: Vec<f64>,
    pub validation_score: f64,
    #[serde(skip)]
    counts: Vec<usize>,
}

impl EnsembleSelection {
    pub fn size(&self) -> usize {
        self.picks.len()
    }

    /// Multiplicity of each table candidate, in table order.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }
}

/// Greedy selection with replacement: every step adds the candidate whose
/// inclusion gives the best validation score (lower ordinal on ties). The
/// best prefix is returned, the shortest one on ties.
pub fn greedy_ensemble_select(
    table: &PredictionTable,
    truth: &Target,
    metric: &Metric,
    max_size: usize,
) -> Result<EnsembleSelection, EnsembleError> {
    if table.is_empty() {
        return Err(EnsembleError::Empty);
    }
    if max_size == 0 {
        return Err(EnsembleError::ZeroSize);
    }
    let mut counts = vec![0usize; table.len()];
    let mut picks = Vec::new();
    let mut trace = Vec::new();
    for _ in 0..max_size {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..table.len() {
            counts[j] += 1;
            let s = table.score(&counts, truth, metric)?;
            counts[j] -= 1;
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((j, s));
            }
        }
        let (j, s) = best.expect("non-empty table");
        counts[j] += 1;
        picks.push(j);
        trace.push(s);
    }
    let mut keep = 0;
    for (i, &s) in trace.iter().enumerate() {
        if s > trace[keep] {
            keep = i;
        }
    }
    picks.truncate(keep + 1);
    let mut counts = vec![0usize; table.len()];
    for &j in &picks {
        counts[j] += 1;
    }
    let size = picks.len() as f64;
    let ordinals = table.ordinals();
    let nonzero: Vec<(u64, usize)> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| (ordinals[j], c))
        .collect();
    Ok(EnsembleSelection {
        picks: picks.iter().map(|&j| ordinals[j]).collect(),
        weights: nonzero.iter().map(|&(o, c)| (o, c as f64 / size)).collect(),
        multiplicities: nonzero,
        validation_score: trace[keep],
        trace,
        counts,
    })
}

pub fn ensemble_predict(selection: &EnsembleSelection, table: &PredictionTable, split: Split) -> Predictions {
    table.average(selection.counts(), split)
}
