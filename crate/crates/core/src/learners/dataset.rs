use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense row-major matrix of features.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix shape does not match data");
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix::new(idx.len(), self.cols, data)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Binary,
    Multiclass,
    Regression,
}

impl Task {
    pub fn is_classification(self) -> bool {
        !matches!(self, Task::Regression)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Binary => "binary",
            Task::Multiclass => "multiclass",
            Task::Regression => "regression",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "binary" => Ok(Task::Binary),
            "multiclass" => Ok(Task::Multiclass),
            "regression" => Ok(Task::Regression),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Classes { labels: Vec<usize>, n_classes: usize },
    Values(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Classes { labels, .. } => labels.len(),
            Target::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> Target {
        match self {
            Target::Classes { labels, n_classes } => Target::Classes {
                labels: idx.iter().map(|&i| labels[i]).collect(),
                n_classes: *n_classes,
            },
            Target::Values(v) => Target::Values(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dataset needs at least one row and one column, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },
    #[error("target length {target} does not match {rows} feature rows")]
    LengthMismatch { rows: usize, target: usize },
    #[error("non-finite feature at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("non-finite regression target at row {0}")]
    NonFiniteTarget(usize),
    #[error("{task} task got incompatible target: {reason}")]
    TargetKind { task: &'static str, reason: String },
    #[error("class ids must be contiguous from 0; class {0} is absent")]
    MissingClass(usize),
    #[error("{expected} feature names for {cols} columns")]
    FeatureNames { expected: usize, cols: usize },
    #[error("row {row}, column {col:?}: {reason}")]
    Cell {
        row: usize,
        col: String,
        reason: String,
    },
    #[error("{0}")]
    Csv(String),
    #[error("target column {0:?} not found")]
    NoTargetColumn(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub target: Target,
    pub task: Task,
    pub feature_names: Vec<String>,
    /// Original class labels by id, when known.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        target: Target,
        task: Task,
        feature_names: Vec<String>,
    ) -> Result<Self, DataError> {
        let (rows, cols) = (features.rows(), features.cols());
        if rows == 0 || cols == 0 {
            return Err(DataError::Empty { rows, cols });
        }
        if target.len() != rows {
            return Err(DataError::LengthMismatch {
                rows,
                target: target.len(),
            });
        }
        if feature_names.len() != cols {
            return Err(DataError::FeatureNames {
                expected: feature_names.len(),
                cols,
            });
        }
        if let Some(pos) = features.as_slice().iter().position(|v| !v.is_finite()) {
            return Err(DataError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        match (&target, task) {
            (Target::Values(v), Task::Regression) => {
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(DataError::NonFiniteTarget(i));
                }
            }
            (Target::Classes { labels, n_classes }, Task::Binary | Task::Multiclass) => {
                if task == Task::Binary && *n_classes != 2 {
                    return Err(DataError::TargetKind {
                        task: task.as_str(),
                        reason: format!("{n_classes} classes"),
                    });
                }
                if let Some(bad) = labels.iter().find(|&&l| l >= *n_classes) {
                    return Err(DataError::TargetKind {
                        task: task.as_str(),
                        reason: format!("label {bad} >= class count {n_classes}"),
                    });
                }
                let mut present = vec![false; *n_classes];
                for &l in labels {
                    present[l] = true;
                }
                if let Some(missing) = present.iter().position(|p| !p) {
                    return Err(DataError::MissingClass(missing));
                }
            }
            (_, task) => {
                return Err(DataError::TargetKind {
                    task: task.as_str(),
                    reason: "target kind does not match task".into(),
                })
            }
        }
        Ok(Self {
            features,
            target,
            task,
            feature_names,
            class_names: Vec::new(),
        })
    }

    /// Builds a classification dataset with names `x0..x{d-1}`.
    pub fn classification(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self, DataError> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        let task = if n_classes <= 2 {
            Task::Binary
        } else {
            Task::Multiclass
        };
        let features = Matrix::from_rows(rows);
        let names = default_names(features.cols());
        Self::new(
            features,
            Target::Classes {
                labels,
                n_classes: n_classes.max(2),
            },
            task,
            names,
        )
    }

    pub fn regression(rows: &[Vec<f64>], values: Vec<f64>) -> Result<Self, DataError> {
        let features = Matrix::from_rows(rows);
        let names = default_names(features.cols());
        Self::new(features, Target::Values(values), Task::Regression, names)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        match &self.target {
            Target::Classes { n_classes, .. } => *n_classes,
            Target::Values(_) => 0,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match &self.target {
            Target::Classes { labels, .. } => Some(labels),
            Target::Values(_) => None,
        }
    }

    pub fn values(&self) -> Option<&[f64]> {
        match &self.target {
            Target::Values(v) => Some(v),
            Target::Classes { .. } => None,
        }
    }

    /// Row subset. Keeps the parent's class count, so a subset may lack
    /// some classes.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            target: self.target.select(idx),
            task: self.task,
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    /// Row indices grouped by class id (classification only).
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.n_classes()];
        if let Some(labels) = self.labels() {
            for (i, &l) in labels.iter().enumerate() {
                groups[l].push(i);
            }
        }
        groups
    }
}

pub(crate) fn default_names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{j}")).collect()
}
