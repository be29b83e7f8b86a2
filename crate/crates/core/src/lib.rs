//! Combined algorithm selection and hyperparameter optimization over a small
//! roster of from-scratch learners, with random search, successive halving,
//! Hyperband, portfolio-seeded Hyperband and an evolutionary searcher, plus a
//! budget-parity benchmark harness.

pub mod evaluation;
pub mod learners;
pub mod optimizers;
pub mod search_space;
pub mod util;
pub mod ensemble;
pub mod harness;
pub mod portfolio;
