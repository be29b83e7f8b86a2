use super::session::{RunResult, Session};
use super::{OptimizerError, Variant};
use crate::evaluation::TrialEvaluator;

/// Samples configurations and evaluates each at full budget until the
/// ledger refuses.
pub fn run_random_search<E: TrialEvaluator + ?Sized>(
    mut session: Session<'_, E>,
) -> Result<RunResult, OptimizerError> {
    let batch = session.workers().max(1);
    let full = session.max_resource;
    while !session.is_exhausted() {
        let jobs: Vec<_> = (0..batch).map(|_| (session.sample(), full)).collect();
        if session.evaluate_batch(jobs).len() < batch {
            break;
        }
    }
    session.finish(Variant::Random)
}
