use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learners::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub valid_fraction: f64,
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.6,
            valid_fraction: 0.2,
            test_fraction: 0.2,
            seed: 0,
            stratified: true,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("split fractions must be positive and sum to 1, got {0:?}")]
    Fractions([f64; 3]),
    #[error("class {class} has {count} examples, fewer than the 3 splits")]
    ClassTooSmall { class: usize, count: usize },
    #[error("dataset has {0} rows, fewer than the 3 splits")]
    TooSmall(usize),
}

/// Index partition `(train, valid, test)`, each sorted ascending.
pub fn split_indices(
    data: &Dataset,
    spec: &SplitSpec,
) -> Result<[Vec<usize>; 3], SplitError> {
    let fractions = [spec.train_fraction, spec.valid_fraction, spec.test_fraction];
    if fractions.iter().any(|f| f.is_nan() || *f <= 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(SplitError::Fractions(fractions));
    }
    let stratified = spec.stratified && data.task.is_classification();
    let groups: Vec<Vec<usize>> = if stratified {
        data.indices_by_class()
    } else {
        vec![(0..data.len()).collect()]
    };
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, mut group) in groups.into_iter().enumerate() {
        if group.is_empty() {
            continue;
        }
        if group.len() < 3 {
            return Err(if stratified {
                SplitError::ClassTooSmall {
                    class,
                    count: group.len(),
                }
            } else {
                SplitError::TooSmall(group.len())
            });
        }
        let counts = allocate(group.len(), &fractions);
        group.shuffle(&mut rng);
        let mut at = 0;
        for (part, count) in parts.iter_mut().zip(counts) {
            part.extend_from_slice(&group[at..at + count]);
            at += count;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    Ok(parts)
}

/// Largest-remainder apportionment of `n` items, with every part non-empty.
fn allocate(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let raw: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, r) in counts.iter_mut().zip(&raw) {
        *c = r.floor() as usize;
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = n - counts.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    while let Some(empty) = counts.iter().position(|&c| c == 0) {
        let donor = (0..3).max_by(|&a, &b| counts[a].cmp(&counts[b]).then(b.cmp(&a))).unwrap();
        counts[donor] -= 1;
        counts[empty] += 1;
    }
    counts
}

pub fn split_dataset(
    data: &Dataset,
    spec: &SplitSpec,
) -> Result<(Dataset, Dataset, Dataset), SplitError> {
    let [train, valid, test] = split_indices(data, spec)?;
    Ok((data.subset(&train), data.subset(&valid), data.subset(&test)))
}

/// Train/validation/test splits. The test split sits behind a read counter
/// so a harness can verify it is touched once, for final scoring only.
#[derive(Debug)]
pub struct Splits {
    pub train: Arc<Dataset>,
    pub valid: Arc<Dataset>,
    test: Arc<Dataset>,
    test_reads: AtomicUsize,
}

impl Splits {
    pub fn new(train: Dataset, valid: Dataset, test: Dataset) -> Self {
        Self {
            train: Arc::new(train),
            valid: Arc::new(valid),
            test: Arc::new(test),
            test_reads: AtomicUsize::new(0),
        }
    }

    pub fn from_dataset(data: &Dataset, spec: &SplitSpec) -> Result<Self, SplitError> {
        let (a, b, c) = split_dataset(data, spec)?;
        Ok(Self::new(a, b, c))
    }

    /// Same data, fresh test-read counter.
    pub fn fresh_view(&self) -> Self {
        Self {
            train: Arc::clone(&self.train),
            valid: Arc::clone(&self.valid),
            test: Arc::clone(&self.test),
            test_reads: AtomicUsize::new(0),
        }
    }

    pub fn read_test(&self) -> &Dataset {
        self.test_reads.fetch_add(1, Ordering::SeqCst);
        &self.test
    }

    pub fn test_reads(&self) -> usize {
        self.test_reads.load(Ordering::SeqCst)
    }
}
