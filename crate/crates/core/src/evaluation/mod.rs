//! Dataset splitting, the scoring metrics, trial execution and budget
//! accounting.

mod csv_io;
mod ledger;
mod metrics;
mod split;
mod trial;

pub use csv_io::{read_csv, write_csv};
pub use ledger::{BudgetMode, LedgerExhausted, TimeLedger};
pub use metrics::{
    accuracy, auc, balanced_accuracy, r2, Metric, MetricError, MetricKind, DEFAULT_R2_FLOOR,
};
pub use split::{split_dataset, split_indices, SplitError, SplitSpec, Splits};
pub use trial::{
    evaluate_trial, scale_resource, Evaluation, FnEvaluator, HoldoutEvaluator, TrialEvaluator, TrialRecord,
};
pub(crate) use trial::make_record;
