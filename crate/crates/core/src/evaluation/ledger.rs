use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Unit in which the ledger measures consumption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetMode {
    /// Seconds of training and scoring time.
    WallClock,
    /// Full-budget-equivalent resource, `sum(r / R)`. Deterministic.
    Resource,
}

#[derive(Debug, Error, Clone, Copy, PartialEq)]
#[error("budget exhausted: {elapsed} of {reference} consumed")]
pub struct LedgerExhausted {
    pub elapsed: f64,
    pub reference: f64,
}

/// Budget accounting shared by every trial of one optimizer run.
///
/// In resource mode a trial's cost is known up front, so it is reserved at
/// admission; this keeps admission decisions identical for any number of
/// concurrent evaluations. In wall-clock mode the cost is charged when the
/// trial commits.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeLedger {
    mode: BudgetMode,
    reference: f64,
    /// Resource units per full budget (resource mode).
    full_budget: u64,
    committed_units: u64,
    reserved_units: u64,
    committed_seconds: f64,
}

impl TimeLedger {
    pub fn wall_clock(reference_seconds: f64) -> Self {
        Self {
            mode: BudgetMode::WallClock,
            reference: reference_seconds,
            full_budget: 1,
            committed_units: 0,
            reserved_units: 0,
            committed_seconds: 0.0,
        }
    }

    /// `reference` counts full-budget trials at resource `max_resource`.
    pub fn resource(reference: f64, max_resource: u32) -> Self {
        Self {
            mode: BudgetMode::Resource,
            reference,
            full_budget: u64::from(max_resource.max(1)),
            committed_units: 0,
            reserved_units: 0,
            committed_seconds: 0.0,
        }
    }

    pub fn mode(&self) -> BudgetMode {
        self.mode
    }

    pub fn reference(&self) -> f64 {
        self.reference
    }

    pub fn full_budget(&self) -> u32 {
        self.full_budget as u32
    }

    /// Committed consumption in ledger units.
    pub fn elapsed(&self) -> f64 {
        match self.mode {
            BudgetMode::WallClock => self.committed_seconds,
            BudgetMode::Resource => self.committed_units as f64 / self.full_budget as f64,
        }
    }

    fn admitted(&self) -> f64 {
        match self.mode {
            BudgetMode::WallClock => self.committed_seconds,
            BudgetMode::Resource => {
                (self.committed_units + self.reserved_units) as f64 / self.full_budget as f64
            }
        }
    }

    pub fn is_exhausted(&self) -> bool {
        self.admitted() >= self.reference
    }

    /// Admits one trial at `resource`, or refuses once the budget is spent.
    pub fn admit(&mut self, resource: u32) -> Result<(), LedgerExhausted> {
        if self.is_exhausted() {
            return Err(LedgerExhausted {
                elapsed: self.admitted(),
                reference: self.reference,
            });
        }
        if self.mode == BudgetMode::Resource {
            self.reserved_units += u64::from(resource);
        }
        Ok(())
    }

    /// Commits an admitted trial and returns the consumption after it.
    pub fn commit(&mut self, resource: u32, wall_time: f64) -> f64 {
        match self.mode {
            BudgetMode::WallClock => self.committed_seconds += wall_time.max(0.0),
            BudgetMode::Resource => {
                let r = u64::from(resource);
                debug_assert!(self.reserved_units >= r, "commit without admission");
                self.reserved_units -= r;
                self.committed_units += r;
            }
        }
        self.elapsed()
    }
}
