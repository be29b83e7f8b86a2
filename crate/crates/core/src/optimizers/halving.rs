//! Successive halving, Hyperband and portfolio-seeded Hyperband.

use super::session::{top_k, BracketTable, Rung, RunResult, Session};
use super::{OptimizerError, Variant};
use crate::evaluation::TrialEvaluator;
use crate::search_space::{validate_configuration, Configuration};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbandOptions {
    pub eta: u32,
    /// Stop after this many sweeps over the brackets even if budget remains.
    pub max_sweeps: Option<usize>,
}

impl Default for HyperbandOptions {
    fn default() -> Self {
        Self {
            eta: 2,
            max_sweeps: None,
        }
    }
}

/// Largest `s` with `eta^s <= max_resource`.
pub fn s_max(max_resource: u32, eta: u32) -> usize {
    let (mut s, mut p) = (0usize, u64::from(eta));
    while p <= u64::from(max_resource) {
        s += 1;
        p *= u64::from(eta);
    }
    s
}

/// Hyperband's `(n_s, r_s)` for `s = s_max` down to `0`:
/// `n_s = ceil((s_max + 1) / (s + 1) * eta^s)` and `r_s = R * eta^-s`.
pub fn hyperband_brackets(max_resource: u32, eta: u32) -> Vec<(usize, u32)> {
    let top = s_max(max_resource, eta);
    let eta = eta as usize;
    (0..=top)
        .rev()
        .map(|s| {
            let pow = eta.pow(s as u32);
            let n = ((top + 1) * pow).div_ceil(s + 1);
            let r = (max_resource as usize / pow).max(1) as u32;
            (n, r)
        })
        .collect()
}

/// Planned `(configs, resource)` per rung of one successive-halving run:
/// sizes shrink by `floor(n / eta)` and resources grow by `eta`, capped at
/// `max_resource`, until one configuration is left or the cap is reached.
pub fn halving_rungs(n: usize, r0: u32, eta: u32, max_resource: u32) -> Vec<(usize, u32)> {
    let mut rungs = Vec::new();
    let (mut n, mut r) = (n, r0.clamp(1, max_resource));
    while n > 0 {
        rungs.push((n, r));
        if n <= 1 || r >= max_resource {
            break;
        }
        n /= eta as usize;
        r = r.saturating_mul(eta).min(max_resource);
    }
    rungs
}

/// Number of first-rung slots reserved for portfolio entries.
pub fn portfolio_slots(n: usize, random_share: f64) -> usize {
    (((1.0 - random_share) * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Runs one bracket and records its table. Returns false if the budget ran
/// out before the bracket finished.
fn run_bracket<E: TrialEvaluator + ?Sized>(
    session: &mut Session<'_, E>,
    configs: Vec<Configuration>,
    r0: u32,
    eta: u32,
    sweep: usize,
    bracket: usize,
    seeded: usize,
) -> bool {
    let max_resource = session.max_resource;
    let mut table = BracketTable {
        sweep,
        bracket,
        rungs: Vec::new(),
        seeded,
        complete: false,
    };
    let mut survivors = configs;
    let mut r = r0.clamp(1, max_resource);
    for index in 0.. {
        let planned = survivors.len();
        let jobs = survivors.iter().map(|c| (c.clone(), r)).collect();
        let records = session.evaluate_batch(jobs);
        let mut rung = Rung {
            index,
            resource: r,
            trials: records.iter().map(|t| t.ordinal).collect(),
            promoted: Vec::new(),
        };
        if records.len() < planned {
            table.rungs.push(rung);
            session.brackets.push(table);
            return false;
        }
        let next = planned / eta as usize;
        if planned <= 1 || r >= max_resource || next == 0 {
            table.rungs.push(rung);
            break;
        }
        let refs: Vec<_> = records.iter().collect();
        let promoted = top_k(&refs, next);
        rung.promoted = promoted.iter().map(|t| t.ordinal).collect();
        survivors = promoted.into_iter().map(|t| t.config.clone()).collect();
        table.rungs.push(rung);
        r = r.saturating_mul(eta).min(max_resource);
    }
    table.complete = true;
    session.brackets.push(table);
    true
}

/// Successive halving over `configs`, starting at resource `r0`.
pub fn successive_halving<E: TrialEvaluator + ?Sized>(
    mut session: Session<'_, E>,
    configs: Vec<Configuration>,
    r0: u32,
    eta: u32,
) -> Result<RunResult, OptimizerError> {
    if configs.is_empty() {
        return Err(OptimizerError::EmptyConfigurations);
    }
    check_eta(eta)?;
    run_bracket(&mut session, configs, r0, eta, 0, 0, 0);
    session.finish(Variant::SuccessiveHalving)
}

/// Repeats the most exploratory bracket with fresh random configurations
/// until the budget runs out.
pub fn repeated_successive_halving<E: TrialEvaluator + ?Sized>(
    mut session: Session<'_, E>,
    eta: u32,
) -> Result<RunResult, OptimizerError> {
    check_eta(eta)?;
    let (n, r0) = hyperband_brackets(session.max_resource, eta)[0];
    let mut sweep = 0;
    while !session.is_exhausted() {
        let configs = (0..n).map(|_| session.sample()).collect();
        let s = s_max(session.max_resource, eta);
        if !run_bracket(&mut session, configs, r0, eta, sweep, s, 0) {
            break;
        }
        sweep += 1;
    }
    session.finish(Variant::SuccessiveHalving)
}

pub fn hyperband<E: TrialEvaluator + ?Sized>(
    session: Session<'_, E>,
    options: HyperbandOptions,
) -> Result<RunResult, OptimizerError> {
    check_eta(options.eta)?;
    sweep_brackets(session, &[], 0.0, options, Variant::Hyperband)
}

/// Hyperband whose first rungs are seeded from `portfolio`.
///
/// Each bracket takes the next unused portfolio entries for up to
/// `ceil((1 - random_share) * n_s)` of its `n_s` slots and fills the rest
/// with fresh random samples. Once the portfolio is used up every slot is
/// random.
pub fn portfolio_hyperband<E: TrialEvaluator + ?Sized>(
    session: Session<'_, E>,
    portfolio: &[Configuration],
    random_share: f64,
    options: HyperbandOptions,
) -> Result<RunResult, OptimizerError> {
    check_eta(options.eta)?;
    if !(0.0..1.0).contains(&random_share) {
        return Err(OptimizerError::InvalidSpec(format!(
            "random share {random_share} outside [0, 1)"
        )));
    }
    for (index, c) in portfolio.iter().enumerate() {
        validate_configuration(session.space, c)
            .map_err(|violation| OptimizerError::InvalidPortfolioEntry { index, violation })?;
    }
    sweep_brackets(
        session,
        portfolio,
        random_share,
        options,
        Variant::PortfolioHyperband,
    )
}

fn sweep_brackets<E: TrialEvaluator + ?Sized>(
    mut session: Session<'_, E>,
    portfolio: &[Configuration],
    random_share: f64,
    options: HyperbandOptions,
    variant: Variant,
) -> Result<RunResult, OptimizerError> {
    let eta = options.eta;
    let schedule = hyperband_brackets(session.max_resource, eta);
    let top = schedule.len() - 1;
    let mut cursor = 0;
    'sweeps: for sweep in 0.. {
        if options.max_sweeps.is_some_and(|m| sweep >= m) {
            break;
        }
        for (i, &(n, r)) in schedule.iter().enumerate() {
            if session.is_exhausted() {
                break 'sweeps;
            }
            let seeded = portfolio_slots(n, random_share).min(n).min(portfolio.len() - cursor);
            let mut configs: Vec<Configuration> = portfolio[cursor..cursor + seeded].to_vec();
            cursor += seeded;
            configs.extend((seeded..n).map(|_| session.sample()));
            if !run_bracket(&mut session, configs, r, eta, sweep, top - i, seeded) {
                break 'sweeps;
            }
        }
    }
    session.finish(variant)
}

fn check_eta(eta: u32) -> Result<(), OptimizerError> {
    if eta < 2 {
        return Err(OptimizerError::InvalidSpec(format!("eta must be >= 2, got {eta}")));
    }
    Ok(())
}
