//! Genetic-algorithm phase design: maximizes the closed-form sum rate over
//! RIS phase vectors using only statistical CSI.
//!
//! Each generation ranks the population, carries the top `elites` unchanged,
//! replaces the bottom `culled` with uniform mutants of themselves, and
//! fills the rest with two-point-crossover children of parents chosen by
//! stochastic universal sampling from the middle of the ranking.
//!
//! Operator randomness comes from one stream per generation, consumed in a
//! fixed order (mutation draws, then the SUS spin, then crossover cuts), so
//! fitness evaluation can run on any number of workers without changing the
//! evolution path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::PhaseShifts;
use crate::closed_form::RateModel;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Exec};
use crate::scenario::Scenario;

/// Population split and loop budget.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GaConfig {
    /// Total population size.
    pub population: usize,
    /// Individuals carried unchanged each generation.
    pub elites: usize,
    /// Worst individuals removed and replaced by mutants of themselves.
    pub culled: usize,
    /// Parents drawn by stochastic universal sampling (must be even).
    pub parents: usize,
    /// Children produced by crossover: one per parent pair.
    pub crossover_offspring: usize,
    /// Per-gene mutation probability.
    pub mutation_prob: f64,
    /// Generation budget; `None` means 100·N.
    pub max_generations: Option<usize>,
    /// Stop early after this many generations without improvement
    /// (disabled by default).
    pub stagnation_window: Option<usize>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population: 200,
            elites: 10,
            culled: 40,
            parents: 300,
            crossover_offspring: 150,
            mutation_prob: 0.1,
            max_generations: None,
            stagnation_window: None,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.elites + self.culled + self.crossover_offspring != self.population {
            return Err(Error::Validation(format!(
                "elites + culled + crossover_offspring must equal population: {} + {} + {} != {}",
                self.elites, self.culled, self.crossover_offspring, self.population
            )));
        }
        if !self.parents.is_multiple_of(2) || self.parents == 0 {
            return Err(Error::Validation(format!("parents must be even and nonzero, got {}", self.parents)));
        }
        if self.parents / 2 != self.crossover_offspring {
            return Err(Error::Validation(format!(
                "crossover emits one child per parent pair: parents/2 = {} != crossover_offspring = {}",
                self.parents / 2,
                self.crossover_offspring
            )));
        }
        if self.population == self.elites + self.culled {
            return Err(Error::Validation("no individuals left between elites and culled to select parents from".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(Error::Validation(format!("mutation_prob must be in [0, 1], got {}", self.mutation_prob)));
        }
        Ok(())
    }

    /// Generation budget for an RIS with `n` elements.
    pub fn generations_for(&self, n: usize) -> usize {
        self.max_generations.unwrap_or(100 * n)
    }
}

/// A chromosome with its evaluated fitness (the closed-form sum rate).
#[derive(Clone, Debug, PartialEq)]
pub struct Individual {
    pub phases: PhaseShifts,
    pub fitness: f64,
}

/// Per-generation progress: best/mean fitness and optional chromosome
/// snapshots.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GaTrace {
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TraceRow {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Snapshot {
    pub generation: usize,
    pub phases: PhaseShifts,
}

impl GaTrace {
    /// CSV with a stable `generation,best_fitness,mean_fitness` schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,best_fitness,mean_fitness\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.generation, r.best_fitness, r.mean_fitness));
        }
        out
    }

    pub fn best_final(&self) -> Option<f64> {
        self.rows.last().map(|r| r.best_fitness)
    }
}

/// Result of a GA run: the best individual of the final population plus the
/// trace.
#[derive(Clone, Debug)]
pub struct GaRun {
    pub best: Individual,
    pub trace: GaTrace,
}

fn evaluate_all(model: &RateModel, chromosomes: Vec<PhaseShifts>, exec: Exec) -> Result<Vec<Individual>> {
    let fitness: Vec<Result<f64>> = map_indexed(exec, chromosomes.len(), |i| model.sum_rate(&chromosomes[i]));
    chromosomes
        .into_iter()
        .zip(fitness)
        .map(|(phases, fitness)| Ok(Individual { phases, fitness: fitness? }))
        .collect()
}

/// Initial population: uniform chromosomes on [0, 2π)^N, fitness evaluated.
pub fn init_population(sc: &Scenario, config: &GaConfig, seed: u64) -> Result<Vec<Individual>> {
    config.validate()?;
    let model = RateModel::new(sc);
    init_population_with(&model, sc.dims.n, config, seed, Exec::default())
}

fn init_population_with(
    model: &RateModel,
    n: usize,
    config: &GaConfig,
    seed: u64,
    exec: Exec,
) -> Result<Vec<Individual>> {
    let mut rng = generation_stream(seed, 0);
    let chromosomes = (0..config.population).map(|_| PhaseShifts::uniform(n, &mut rng)).collect();
    evaluate_all(model, chromosomes, exec)
}

/// Stream for generation `g` draws; stream 0 seeds the initial population.
fn generation_stream(seed: u64, generation: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(generation);
    rng
}

/// Stochastic universal sampling: `count` equally spaced pointers over the
/// cumulative-fitness wheel, spun once. Falls back to a uniform wheel when
/// total fitness is zero. Returns indices into `subset`.
pub fn sus_select<R: Rng>(subset: &[Individual], count: usize, rng: &mut R) -> Vec<usize> {
    assert!(!subset.is_empty(), "SUS needs a nonempty subset");
    let total: f64 = subset.iter().map(|ind| ind.fitness).sum();
    let weights: Vec<f64> = if total > 0.0 {
        subset.iter().map(|ind| ind.fitness).collect()
    } else {
        vec![1.0; subset.len()]
    };
    let total: f64 = weights.iter().sum();
    let step = total / count as f64;
    let start = rng.random::<f64>() * step;
    let mut selected = Vec::with_capacity(count);
    let mut cumulative = weights[0];
    let mut idx = 0;
    for j in 0..count {
        let pointer = start + j as f64 * step;
        while pointer >= cumulative && idx + 1 < subset.len() {
            idx += 1;
            cumulative += weights[idx];
        }
        selected.push(idx);
    }
    selected
}

/// Two-point crossover: cut points `1 <= u < v <= N-1`, child takes
/// `a[..u] ++ b[u..v] ++ a[v..]`. Chromosomes shorter than 3 genes have no
/// valid cut pair and the child is a copy of `parent_a`.
pub fn two_point_crossover<R: Rng>(
    parent_a: &PhaseShifts,
    parent_b: &PhaseShifts,
    rng: &mut R,
) -> Result<PhaseShifts> {
    let n = parent_a.len();
    if parent_b.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "parents have lengths {} and {}",
            n,
            parent_b.len()
        )));
    }
    if n < 3 {
        return Ok(parent_a.clone());
    }
    // uniform over the (n-1 choose 2) valid cut pairs, via unranking
    let pairs = (n - 1) * (n - 2) / 2;
    let mut rank = rng.random_range(0..pairs);
    let mut u = 1;
    loop {
        let here = n - 1 - u; // pairs with first cut at u
        if rank < here {
            break;
        }
        rank -= here;
        u += 1;
    }
    let v = u + 1 + rank;
    let a = parent_a.theta();
    let b = parent_b.theta();
    let mut child = Vec::with_capacity(n);
    child.extend_from_slice(&a[..u]);
    child.extend_from_slice(&b[u..v]);
    child.extend_from_slice(&a[v..]);
    Ok(PhaseShifts::new(child))
}

/// Uniform mutation: each gene is independently resampled on [0, 2π) with
/// probability `prob`.
pub fn uniform_mutation<R: Rng>(phases: &PhaseShifts, prob: f64, rng: &mut R) -> PhaseShifts {
    PhaseShifts::new(
        phases
            .theta()
            .iter()
            .map(|&t| {
                if rng.random::<f64>() < prob {
                    rng.random::<f64>() * std::f64::consts::TAU
                } else {
                    t
                }
            })
            .collect(),
    )
}

/// Ranks indices by fitness, best first; ties broken by lower index.
fn rank_indices(population: &[Individual]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..population.len()).collect();
    idx.sort_by(|&a, &b| {
        population[b]
            .fitness
            .partial_cmp(&population[a].fitness)
            .expect("fitness values are finite")
            .then(a.cmp(&b))
    });
    idx
}

/// One generation step. Operator draws consume `rng` in a fixed order:
/// mutation of the culled individuals (rank order), the SUS spin, then
/// crossover cut pairs.
pub fn evolve_generation<R: Rng>(
    population: &[Individual],
    model: &RateModel,
    config: &GaConfig,
    rng: &mut R,
    exec: Exec,
) -> Result<Vec<Individual>> {
    config.validate()?;
    if population.len() != config.population {
        return Err(Error::Validation(format!(
            "population has {} individuals, config expects {}",
            population.len(),
            config.population
        )));
    }
    let ranked = rank_indices(population);
    let elites: Vec<Individual> = ranked[..config.elites].iter().map(|&i| population[i].clone()).collect();
    let culled = &ranked[config.population - config.culled..];
    let middle: Vec<&Individual> = ranked[config.elites..config.population - config.culled]
        .iter()
        .map(|&i| &population[i])
        .collect();

    let mut new_chromosomes: Vec<PhaseShifts> = Vec::with_capacity(config.culled + config.crossover_offspring);
    for &i in culled {
        new_chromosomes.push(uniform_mutation(&population[i].phases, config.mutation_prob, rng));
    }

    let middle_owned: Vec<Individual> = middle.iter().map(|ind| (*ind).clone()).collect();
    let parents = sus_select(&middle_owned, config.parents, rng);
    for pair in parents.chunks_exact(2) {
        new_chromosomes.push(two_point_crossover(
            &middle_owned[pair[0]].phases,
            &middle_owned[pair[1]].phases,
            rng,
        )?);
    }

    let mut next = elites;
    next.extend(evaluate_all(model, new_chromosomes, exec)?);
    debug_assert_eq!(next.len(), config.population);
    Ok(next)
}

/// Runs the GA to its generation budget (or until stagnation, when
/// enabled). Returns the best individual of the final population and the
/// per-generation trace. Deterministic in `(scenario, config, seed)` at any
/// worker count.
pub fn run(sc: &Scenario, config: &GaConfig, seed: u64) -> Result<GaRun> {
    run_with(sc, config, seed, Exec::default(), 0)
}

/// [`run`] with an explicit execution strategy and a chromosome snapshot
/// cadence (`0` disables snapshots; the final best is always available).
pub fn run_with(sc: &Scenario, config: &GaConfig, seed: u64, exec: Exec, snapshot_every: usize) -> Result<GaRun> {
    config.validate()?;
    let model = RateModel::new(sc);
    let n = sc.dims.n;
    let mut population = init_population_with(&model, n, config, seed, exec)?;
    let mut trace = GaTrace::default();
    let budget = config.generations_for(n);

    let record = |trace: &mut GaTrace, generation: usize, population: &[Individual]| {
        let best = population.iter().map(|i| i.fitness).fold(f64::NEG_INFINITY, f64::max);
        let mean = population.iter().map(|i| i.fitness).sum::<f64>() / population.len() as f64;
        trace.rows.push(TraceRow { generation, best_fitness: best, mean_fitness: mean });
        if snapshot_every > 0 && generation.is_multiple_of(snapshot_every) {
            let best_idx = rank_indices(population)[0];
            trace.snapshots.push(Snapshot { generation, phases: population[best_idx].phases.clone() });
        }
        best
    };

    let mut best_so_far = record(&mut trace, 0, &population);
    let mut stagnant = 0usize;
    for generation in 1..=budget {
        let mut rng = generation_stream(seed, generation as u64);
        population = evolve_generation(&population, &model, config, &mut rng, exec)?;
        let best = record(&mut trace, generation, &population);
        if best > best_so_far {
            best_so_far = best;
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if let Some(window) = config.stagnation_window {
            if stagnant >= window {
                break;
            }
        }
    }

    let best_idx = rank_indices(&population)[0];
    Ok(GaRun { best: population[best_idx].clone(), trace })
}
