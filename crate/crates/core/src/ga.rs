//! Simple genetic algorithm over initial strategy distributions.
//!
//! Every individual is a full set of `N × S` strategy tables; agent count,
//! strategy count, memory and threshold are fixed for the whole run. Each
//! generation is evaluated against the in-sample window, then rebuilt from
//! rank-selected parents by crossover and per-bit mutation, with the best
//! `elite_count` individuals carried over unchanged.
//!
//! Randomness is keyed per operation (see [`crate::rng`]), so the result is a
//! function of the config and the window alone, whatever the executor.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::fitness::{demand_distance, FitnessMetric, FitnessValue, ZeroDemand};
use crate::game::{GameVariant, Hyper, StrategyTable, ThirdPartyGame};
use crate::market::Window;
use crate::rng::{self, TAG_BREED, TAG_INIT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossoverGranularity {
    /// Each agent's `S` tables are inherited together.
    #[default]
    Agent,
    /// Each table is inherited independently.
    Strategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Convergence {
    /// Stop after this many consecutive generations without sufficient
    /// improvement. 0 disables early stopping.
    pub stall_generations: usize,
    /// A generation counts as stalled when the best-ever fitness improves by
    /// no more than this.
    pub min_improvement: f64,
}

impl Default for Convergence {
    fn default() -> Self {
        Self {
            stall_generations: 20,
            min_improvement: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub max_generations: usize,
    pub elite_count: usize,
    pub crossover_rate: f64,
    pub mutation_rate_per_bit: f64,
    pub convergence: Convergence,
    pub seed: u64,
    pub variant: GameVariant,
    pub hyper: Hyper,
    pub metric: FitnessMetric,
    pub zero_demand: ZeroDemand,
    pub crossover_granularity: CrossoverGranularity,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            max_generations: 200,
            elite_count: 2,
            crossover_rate: 0.9,
            mutation_rate_per_bit: 0.005,
            convergence: Convergence::default(),
            seed: 0,
            variant: GameVariant::Gcmjg,
            hyper: Hyper::default(),
            metric: FitnessMetric::default(),
            zero_demand: ZeroDemand::default(),
            crossover_granularity: CrossoverGranularity::default(),
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if self.population_size < 2 {
            return bad("population_size must be >= 2");
        }
        if self.elite_count >= self.population_size {
            return bad("elite_count must be < population_size");
        }
        if self.max_generations == 0 {
            return bad("max_generations must be >= 1");
        }
        for (name, p) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate_per_bit", self.mutation_rate_per_bit),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if !self.convergence.min_improvement.is_finite() {
            return bad("convergence.min_improvement must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "GenomeRepr", try_from = "GenomeRepr")]
pub struct Genome {
    agents: usize,
    strategies: usize,
    memory: u8,
    tables: Vec<StrategyTable>,
}

#[derive(Serialize, Deserialize)]
struct GenomeRepr {
    agents: usize,
    strategies: usize,
    memory: u8,
    tables: Vec<u64>,
}

impl From<Genome> for GenomeRepr {
    fn from(g: Genome) -> Self {
        GenomeRepr {
            agents: g.agents,
            strategies: g.strategies,
            memory: g.memory,
            tables: g.tables.iter().map(|t| t.bits()).collect(),
        }
    }
}

impl TryFrom<GenomeRepr> for Genome {
    type Error = Error;

    fn try_from(r: GenomeRepr) -> Result<Self> {
        let tables = r
            .tables
            .iter()
            .map(|&b| StrategyTable::new(r.memory, b))
            .collect::<Result<Vec<_>>>()?;
        Genome::from_tables(r.agents, r.strategies, r.memory, tables)
    }
}

impl Genome {
    pub fn from_tables(
        agents: usize,
        strategies: usize,
        memory: u8,
        tables: Vec<StrategyTable>,
    ) -> Result<Self> {
        if agents == 0
            || strategies == 0
            || tables.len() != agents * strategies
            || tables.iter().any(|t| t.memory() != memory)
        {
            return Err(Error::GenomeMismatch);
        }
        Ok(Self {
            agents,
            strategies,
            memory,
            tables,
        })
    }

    pub fn random<R: Rng + ?Sized>(hyper: &Hyper, rng: &mut R) -> Self {
        Self {
            agents: hyper.agents,
            strategies: hyper.strategies,
            memory: hyper.memory,
            tables: (0..hyper.table_count())
                .map(|_| StrategyTable::random(hyper.memory, rng))
                .collect(),
        }
    }

    /// The initial strategy distribution of `game`.
    pub fn of_game(game: &ThirdPartyGame) -> Self {
        let h = game.hyper();
        Self {
            agents: h.agents,
            strategies: h.strategies,
            memory: h.memory,
            tables: game.tables().to_vec(),
        }
    }

    pub fn tables(&self) -> &[StrategyTable] {
        &self.tables
    }

    pub fn agent_slot(&self, agent: usize) -> &[StrategyTable] {
        &self.tables[agent * self.strategies..(agent + 1) * self.strategies]
    }

    pub fn agents(&self) -> usize {
        self.agents
    }

    pub fn strategies(&self) -> usize {
        self.strategies
    }

    pub fn memory(&self) -> u8 {
        self.memory
    }

    pub fn bit_count(&self) -> usize {
        self.tables.len() << self.memory
    }

    /// Whether this genome fits `hyper`.
    pub fn matches(&self, hyper: &Hyper) -> bool {
        self.agents == hyper.agents
            && self.strategies == hyper.strategies
            && self.memory == hyper.memory
    }

    fn same_shape(&self, other: &Genome) -> bool {
        self.agents == other.agents
            && self.strategies == other.strategies
            && self.memory == other.memory
    }

    pub fn decode(&self, variant: GameVariant, hyper: Hyper) -> Result<ThirdPartyGame> {
        if !self.matches(&hyper) {
            return Err(Error::GenomeMismatch);
        }
        ThirdPartyGame::new(variant, hyper, self.tables.clone())
    }

    /// Fraction of table cells equal to `other`'s, slot by slot.
    pub fn cell_agreement(&self, other: &Genome) -> Option<f64> {
        if !self.same_shape(other) {
            return None;
        }
        let cells = self.bit_count() as f64;
        let differing: u32 = self
            .tables
            .iter()
            .zip(&other.tables)
            .map(|(a, b)| (a.bits() ^ b.bits()).count_ones())
            .sum();
        Some(1.0 - differing as f64 / cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaRunResult {
    pub best_genome: Genome,
    pub best_fitness: FitnessValue,
    pub fitness_trace: Vec<GenerationStats>,
    pub generations_run: usize,
    pub seed: u64,
}

/// `population_size` genomes with i.i.d. uniform table bits.
pub fn init_population<R: Rng + ?Sized>(cfg: &GaConfig, rng: &mut R) -> Result<Vec<Genome>> {
    cfg.validate()?;
    Ok((0..cfg.population_size)
        .map(|_| Genome::random(&cfg.hyper, rng))
        .collect())
}

/// Decodes `genome`, trains it over `window` from zero scores and measures the
/// configured distance.
pub fn evaluate(genome: &Genome, window: &Window<'_>, cfg: &GaConfig) -> Result<FitnessValue> {
    let mut demand = Vec::with_capacity(window.len());
    evaluate_with(genome, window, cfg, &mut demand)
}

fn evaluate_with(
    genome: &Genome,
    window: &Window<'_>,
    cfg: &GaConfig,
    demand: &mut Vec<i32>,
) -> Result<FitnessValue> {
    let mut game = genome.decode(cfg.variant, cfg.hyper)?;
    game.run_demand(window, demand)?;
    demand_distance(cfg.metric, cfg.zero_demand, demand, window)
}

/// Rank-based selection weights: the best of `P` genomes weighs `P`, the worst
/// weighs 1. Tied genomes share the mean of their ranks.
pub fn rank_weights(fitness: &[f64]) -> Vec<f64> {
    let n = fitness.len();
    let order = order_by_fitness(fitness);
    let mut weights = alloc::vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && fitness[order[j]] == fitness[order[i]] {
            j += 1;
        }
        // positions i..j hold ranks i+1..=j
        let mean_rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            weights[k] = n as f64 - mean_rank + 1.0;
        }
        i = j;
    }
    weights
}

/// Indices sorted best first; equal fitness keeps index order.
fn order_by_fitness(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]));
    order
}

/// Weighted sampling with replacement.
#[derive(Debug, Clone)]
pub struct RankSelector {
    cumulative: Vec<f64>,
}

impl RankSelector {
    pub fn new(fitness: &[f64]) -> Result<Self> {
        if fitness.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut acc = 0.0;
        let cumulative = rank_weights(fitness)
            .into_iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self { cumulative })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().unwrap();
        let x = rng.gen::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= x)
            .min(self.cumulative.len() - 1)
    }
}

/// `pairs` parent pairs drawn by rank weight.
pub fn select<R: Rng + ?Sized>(
    fitness: &[f64],
    pairs: usize,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let sel = RankSelector::new(fitness)?;
    Ok((0..pairs)
        .map(|_| (sel.sample(rng), sel.sample(rng)))
        .collect())
}

/// Indices of the `k` fittest genomes, best first.
pub fn elites(fitness: &[f64], k: usize) -> Vec<usize> {
    let mut order = order_by_fitness(fitness);
    order.truncate(k);
    order
}

/// Child of `a` and `b`. With probability `1 - rate` the child is `a`;
/// otherwise every agent slot (or table, per `granularity`) comes from either
/// parent with probability 1/2.
pub fn crossover<R: Rng + ?Sized>(
    a: &Genome,
    b: &Genome,
    rng: &mut R,
    rate: f64,
    granularity: CrossoverGranularity,
) -> Result<Genome> {
    if !a.same_shape(b) {
        return Err(Error::GenomeMismatch);
    }
    if !rng.gen_bool(rate) {
        return Ok(a.clone());
    }
    let mut child = a.clone();
    let unit = match granularity {
        CrossoverGranularity::Agent => a.strategies,
        CrossoverGranularity::Strategy => 1,
    };
    for (dst, src) in child.tables.chunks_mut(unit).zip(b.tables.chunks(unit)) {
        if rng.gen::<bool>() {
            dst.copy_from_slice(src);
        }
    }
    Ok(child)
}

/// Flips every table bit independently with probability `rate`.
pub fn mutate<R: Rng + ?Sized>(genome: &mut Genome, rng: &mut R, rate: f64) {
    if rate <= 0.0 {
        return;
    }
    for table in &mut genome.tables {
        for cell in 0..table.cells() {
            if rng.gen_bool(rate) {
                table.flip(cell);
            }
        }
    }
}

/// Evolves a population against `window` and returns the best genome seen.
pub fn run_ga<E: Executor>(cfg: &GaConfig, window: &Window<'_>, exec: &E) -> Result<GaRunResult> {
    cfg.validate()?;
    if window.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut population = init_population(cfg, &mut rng::stream(cfg.seed, &[TAG_INIT]))?;
    let mut best: Option<(Genome, FitnessValue)> = None;
    let mut trace = Vec::new();
    let mut stall = 0usize;
    let mut generations_run = 0;

    for generation in 0..cfg.max_generations {
        let scored = exec.map_indexed(population.len(), |i| evaluate(&population[i], window, cfg));
        let values = scored.into_iter().collect::<Result<Vec<_>>>()?;
        let fitness: Vec<f64> = values.iter().map(|v| v.fitness).collect();
        let top = elites(&fitness, 1)[0];
        trace.push(GenerationStats {
            generation,
            best_fitness: fitness[top],
            mean_fitness: crate::stats::mean(&fitness),
        });
        generations_run = generation + 1;

        let improvement = best.as_ref().map(|(_, b)| fitness[top] - b.fitness);
        if best.as_ref().is_none_or(|(_, b)| fitness[top] > b.fitness) {
            best = Some((population[top].clone(), values[top]));
        }
        match improvement {
            Some(d) if d <= cfg.convergence.min_improvement => stall += 1,
            _ => stall = 0,
        }

        let perfect = best.as_ref().is_some_and(|(_, b)| b.distance <= 0.0);
        let stalled =
            cfg.convergence.stall_generations > 0 && stall >= cfg.convergence.stall_generations;
        if perfect || stalled || generations_run == cfg.max_generations {
            break;
        }
        population = next_generation(cfg, &population, &fitness, generation, exec)?;
    }

    let (best_genome, best_fitness) = best.expect("at least one generation is evaluated");
    Ok(GaRunResult {
        best_genome,
        best_fitness,
        fitness_trace: trace,
        generations_run,
        seed: cfg.seed,
    })
}

fn next_generation<E: Executor>(
    cfg: &GaConfig,
    population: &[Genome],
    fitness: &[f64],
    generation: usize,
    exec: &E,
) -> Result<Vec<Genome>> {
    let selector = RankSelector::new(fitness)?;
    let mut next: Vec<Genome> = elites(fitness, cfg.elite_count)
        .into_iter()
        .map(|i| population[i].clone())
        .collect();
    let children = exec.map_indexed(cfg.population_size - cfg.elite_count, |child| {
        let mut rng = rng::stream(cfg.seed, &[TAG_BREED, generation as u64, child as u64]);
        let (a, b) = (selector.sample(&mut rng), selector.sample(&mut rng));
        let mut g = crossover(
            &population[a],
            &population[b],
            &mut rng,
            cfg.crossover_rate,
            cfg.crossover_granularity,
        )?;
        mutate(&mut g, &mut rng, cfg.mutation_rate_per_bit);
        Ok(g)
    });
    for child in children {
        next.push(child?);
    }
    Ok(next)
}
