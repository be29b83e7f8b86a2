use super::session::{top_k, GenerationRecord, RunResult, Session};
use super::{OptimizerError, Variant};
use crate::evaluation::TrialEvaluator;
use crate::search_space::mutate_configuration;

/// Truncation selection with point mutations: keep the top fraction of a
/// generation and replace the population with mutated copies of them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolutionOptions {
    pub population_size: usize,
    pub survivors_fraction: f64,
    pub descendants_per_survivor: usize,
    /// Total generations including the random initial one; `None` runs
    /// until the budget is spent.
    pub generations: Option<usize>,
}

impl Default for EvolutionOptions {
    fn default() -> Self {
        Self {
            population_size: 20,
            survivors_fraction: 0.2,
            descendants_per_survivor: 5,
            generations: None,
        }
    }
}

impl EvolutionOptions {
    pub fn survivors(&self, population: usize) -> usize {
        ((self.survivors_fraction * population as f64 - 1e-9).ceil() as usize).clamp(1, population)
    }
}

pub fn evolutionary_search<E: TrialEvaluator + ?Sized>(
    mut session: Session<'_, E>,
    options: EvolutionOptions,
) -> Result<RunResult, OptimizerError> {
    if options.population_size == 0
        || options.descendants_per_survivor == 0
        || !(options.survivors_fraction > 0.0 && options.survivors_fraction <= 1.0)
        || (options.population_size as f64 * options.survivors_fraction) < 1.0 - 1e-9
    {
        return Err(OptimizerError::InvalidSpec(format!(
            "population {} with survivor fraction {} and {} descendants keeps nobody",
            options.population_size, options.survivors_fraction, options.descendants_per_survivor
        )));
    }
    let full = session.max_resource;
    let mut population: Vec<_> = (0..options.population_size).map(|_| session.sample()).collect();
    for index in 0.. {
        if options.generations.is_some_and(|g| index >= g) {
            break;
        }
        let planned = population.len();
        let records = session.evaluate_batch(population.iter().map(|c| (c.clone(), full)).collect());
        let mut generation = GenerationRecord {
            index,
            members: records.iter().map(|t| t.ordinal).collect(),
            survivors: Vec::new(),
        };
        if records.len() < planned {
            session.generations.push(generation);
            break;
        }
        let refs: Vec<_> = records.iter().collect();
        let survivors = top_k(&refs, options.survivors(planned));
        generation.survivors = survivors.iter().map(|t| t.ordinal).collect();
        session.generations.push(generation);
        let space = session.space;
        population = survivors
            .iter()
            .flat_map(|s| std::iter::repeat_n(&s.config, options.descendants_per_survivor))
            .map(|c| mutate_configuration(space, c, &mut session.rng))
            .collect();
    }
    session.finish(Variant::Evolutionary)
}
