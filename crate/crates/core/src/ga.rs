//! Genetic search over ratio subsets. A chromosome is a bit mask over a
//! fixed universe of ratios; its fitness is the cross-validated accuracy of
//! the hybrid pipeline minus a small penalty per selected ratio.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::pipeline::{self, PipelineConfig, PipelineError};
use crate::ratios::{self, FeatureSet, FeatureSetName, RatioId, RatioVector};

#[derive(Debug, Error)]
pub enum GaError {
    #[error("chromosome selects no ratio")]
    EmptyMask,
    #[error("only {usable} firms have every selected ratio; need at least {needed}")]
    InsufficientUsableFirms { usable: usize, needed: usize },
    #[error("each class needs at least {folds} usable firms for {folds}-fold cross-validation")]
    TooFewPerClass { folds: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Pipeline(Box<PipelineError>),
}

impl From<PipelineError> for GaError {
    fn from(e: PipelineError) -> Self {
        GaError::Pipeline(Box::new(e))
    }
}

/// Bit `i` set means `universe[i]` is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Chromosome {
    mask: u32,
    len: u8,
}

impl Chromosome {
    pub const MAX_LEN: usize = 32;

    /// Bits above `len` are discarded.
    pub fn new(mask: u32, len: usize) -> Self {
        assert!(len >= 1 && len <= Self::MAX_LEN, "chromosome length {len} out of range");
        let keep = if len == 32 { u32::MAX } else { (1u32 << len) - 1 };
        Chromosome { mask: mask & keep, len: len as u8 }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mask = bits.iter().enumerate().fold(0u32, |m, (i, &b)| m | (u32::from(b) << i));
        Chromosome::new(mask, bits.len())
    }

    /// Projection of a ratio set onto the universe.
    pub fn from_members(members: &[RatioId], universe: &[RatioId]) -> Self {
        let mask = universe
            .iter()
            .enumerate()
            .filter(|(_, id)| members.contains(id))
            .fold(0u32, |m, (i, _)| m | (1 << i));
        Chromosome::new(mask, universe.len())
    }

    pub fn mask(self) -> u32 {
        self.mask
    }

    pub fn len(self) -> usize {
        usize::from(self.len)
    }

    pub fn bit(self, i: usize) -> bool {
        self.mask >> i & 1 == 1
    }

    pub fn count(self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.mask == 0
    }

    pub fn flip(self, i: usize) -> Self {
        Chromosome { mask: self.mask ^ (1 << i), len: self.len }
    }

    pub fn members(self, universe: &[RatioId]) -> Vec<RatioId> {
        universe.iter().enumerate().filter(|&(i, _)| self.bit(i)).map(|(_, &id)| id).collect()
    }
}

/// Single-point crossover: children swap every bit at position `point` and above.
pub fn crossover(a: Chromosome, b: Chromosome, point: usize) -> (Chromosome, Chromosome) {
    let high = Chromosome::new(u32::MAX, a.len()).mask & !((1u32 << point) - 1);
    let c1 = (a.mask & !high) | (b.mask & high);
    let c2 = (b.mask & !high) | (a.mask & high);
    (Chromosome::new(c1, a.len()), Chromosome::new(c2, a.len()))
}

/// Flips each bit independently with probability `rate`.
pub fn mutate<R: Rng>(c: Chromosome, rate: f64, rng: &mut R) -> Chromosome {
    (0..c.len()).fold(c, |c, i| if rng.random::<f64>() < rate { c.flip(i) } else { c })
}

/// An empty chromosome gets one random bit.
pub fn repair<R: Rng>(c: Chromosome, rng: &mut R) -> Chromosome {
    if c.is_empty() {
        c.flip(rng.random_range(0..c.len()))
    } else {
        c
    }
}

pub fn penalized_fitness(score: f64, n_selected: usize, n_universe: usize, parsimony_weight: f64) -> f64 {
    score - parsimony_weight * n_selected as f64 / n_universe as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    /// Per-bit flip probability; `1 / L` when unset.
    pub mutation_rate: Option<f64>,
    pub tournament_size: usize,
    pub elitism_count: usize,
    pub parsimony_weight: f64,
    pub cv_folds: usize,
    /// Weight of missed bankruptcies in the CV score; 0.5 is plain accuracy.
    pub type_i_weight: f64,
    pub seed: u64,
    pub universe: Vec<RatioId>,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 100,
            crossover_rate: 0.8,
            mutation_rate: None,
            tournament_size: 3,
            elitism_count: 1,
            parsimony_weight: 0.01,
            cv_folds: 3,
            type_i_weight: 0.5,
            seed: 0,
            universe: RatioId::ALL.to_vec(),
        }
    }
}

impl GaConfig {
    pub fn mutation(&self) -> f64 {
        self.mutation_rate.unwrap_or(1.0 / self.universe.len().max(1) as f64)
    }

    pub fn validate(&self) -> Result<(), GaError> {
        let bad = |m: String| Err(GaError::InvalidConfig(m));
        let l = self.universe.len();
        if l == 0 || l > Chromosome::MAX_LEN {
            return bad(format!("universe must hold 1..=32 ratios, got {l}"));
        }
        let mut sorted = self.universe.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != l {
            return bad("universe contains duplicates".into());
        }
        if self.population_size < 2 {
            return bad("population_size must be >= 2".into());
        }
        if self.generations == 0 {
            return bad("generations must be >= 1".into());
        }
        if self.elitism_count >= self.population_size {
            return bad("elitism_count must be below population_size".into());
        }
        if self.tournament_size == 0 {
            return bad("tournament_size must be >= 1".into());
        }
        for (name, v) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation()),
            ("type_i_weight", self.type_i_weight),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if !(self.parsimony_weight >= 0.0) {
            return bad("parsimony_weight must be >= 0".into());
        }
        if self.cv_folds < 2 {
            return bad("cv_folds must be >= 2".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Chromosome,
    pub best_fitness: f64,
    /// One entry per generation; entry 0 is the initial population.
    pub history: Vec<GenerationStats>,
    /// Distinct chromosomes whose fitness was computed.
    pub evaluations: usize,
    pub universe: Vec<RatioId>,
}

impl GaResult {
    pub fn best_feature_set(&self) -> FeatureSet {
        FeatureSet::custom(self.best.members(&self.universe))
    }
}

pub fn write_history_csv<W: Write>(history: &[GenerationStats], writer: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for row in history {
        wtr.serialize(row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fitness of ratio masks on one dataset: mean stratified CV score of the
/// hybrid minus the parsimony penalty.
pub struct FitnessEvaluator<'a> {
    ratios: Vec<RatioVector>,
    universe: Vec<RatioId>,
    ga: &'a GaConfig,
    pipeline: &'a PipelineConfig,
}

impl<'a> FitnessEvaluator<'a> {
    pub fn new(data: &Dataset, ga: &'a GaConfig, pipeline: &'a PipelineConfig) -> Self {
        let ratios = ratios::compute_all(data).into_iter().filter(|r| r.label.target().is_some()).collect();
        FitnessEvaluator { ratios, universe: ga.universe.clone(), ga, pipeline }
    }

    pub fn evaluate(&self, c: Chromosome) -> Result<f64, GaError> {
        if c.is_empty() {
            return Err(GaError::EmptyMask);
        }
        let members = FeatureSet::custom(c.members(&self.universe)).members;
        let usable: Vec<RatioVector> =
            self.ratios.iter().filter(|r| r.features(&members).is_ok()).cloned().collect();
        let dropped = self.ratios.len() - usable.len();
        if dropped > 0 {
            log::warn!("{dropped} firms lack a ratio in {members:?} and are left out of its fitness");
        }
        if usable.len() < 4 {
            return Err(GaError::InsufficientUsableFirms { usable: usable.len(), needed: 4 });
        }
        let proj = ratios::project_ratios(&usable, &members).map_err(PipelineError::from)?;
        let k = self.ga.cv_folds;
        let positives = proj.y.iter().filter(|&&v| v == 1.0).count();
        if positives < k || proj.y.len() - positives < k {
            return Err(GaError::TooFewPerClass { folds: k });
        }
        let score = pipeline::cross_validate(&proj.x, &proj.y, self.pipeline, k, self.ga.seed, self.ga.type_i_weight)?;
        Ok(penalized_fitness(score, c.count(), c.len(), self.ga.parsimony_weight))
    }
}

pub fn fitness(c: Chromosome, data: &Dataset, ga: &GaConfig, pipeline: &PipelineConfig) -> Result<f64, GaError> {
    FitnessEvaluator::new(data, ga, pipeline).evaluate(c)
}

/// Canonical sets A..E projected onto the universe, skipping empty and
/// repeated projections.
pub fn seed_chromosomes(universe: &[RatioId]) -> Vec<Chromosome> {
    let mut out: Vec<Chromosome> = Vec::new();
    for name in FeatureSetName::CANONICAL {
        let c = Chromosome::from_members(&ratios::feature_set(name).members, universe);
        if !c.is_empty() && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Runs the search with the hybrid pipeline's CV accuracy as fitness.
pub fn evolve(data: &Dataset, ga: &GaConfig, pipeline: &PipelineConfig) -> Result<GaResult, GaError> {
    ga.validate()?;
    let evaluator = FitnessEvaluator::new(data, ga, pipeline);
    run(ga, &seed_chromosomes(&ga.universe), |c| evaluator.evaluate(c))
}

struct Scored {
    chromosome: Chromosome,
    fitness: f64,
}

fn tournament<R: Rng>(pop: &[Scored], size: usize, rng: &mut R) -> Chromosome {
    let mut best = rng.random_range(0..pop.len());
    for _ in 1..size {
        let i = rng.random_range(0..pop.len());
        if pop[i].fitness > pop[best].fitness || (pop[i].fitness == pop[best].fitness && i < best) {
            best = i;
        }
    }
    pop[best].chromosome
}

/// Generic GA loop over any fitness function. Distinct unseen masks of a
/// generation are scored in parallel; results are merged in population
/// order so runs are deterministic for a fixed seed.
pub fn run<F, E>(cfg: &GaConfig, seeds: &[Chromosome], fitness: F) -> Result<GaResult, E>
where
    F: Fn(Chromosome) -> Result<f64, E> + Sync,
    E: Send,
{
    let len = cfg.universe.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut cache: HashMap<Chromosome, f64> = HashMap::new();

    let mut population: Vec<Chromosome> = seeds.iter().copied().take(cfg.population_size).collect();
    while population.len() < cfg.population_size {
        let c = Chromosome::new(rng.random::<u32>(), len);
        population.push(repair(c, &mut rng));
    }

    let mut history = Vec::with_capacity(cfg.generations);
    let mut best: Option<(Chromosome, f64)> = None;
    for generation in 0..cfg.generations {
        if generation > 0 {
            population = breed(cfg, &score(&population, &cache), &mut rng);
        }
        let mut pending: Vec<Chromosome> = Vec::new();
        for c in &population {
            if !cache.contains_key(c) && !pending.contains(c) {
                pending.push(*c);
            }
        }
        let results: Vec<Result<f64, E>> = pending.par_iter().map(|&c| fitness(c)).collect();
        for (c, r) in pending.into_iter().zip(results) {
            cache.insert(c, r?);
        }

        let scored = score(&population, &cache);
        let mut gen_best = &scored[0];
        for s in &scored[1..] {
            if s.fitness > gen_best.fitness {
                gen_best = s;
            }
        }
        if best.is_none_or(|(_, f)| gen_best.fitness > f) {
            best = Some((gen_best.chromosome, gen_best.fitness));
        }
        let mean = scored.iter().map(|s| s.fitness).sum::<f64>() / scored.len() as f64;
        history.push(GenerationStats { generation, best_fitness: gen_best.fitness, mean_fitness: mean });
    }

    let (best, best_fitness) = best.expect("at least one generation");
    Ok(GaResult { best, best_fitness, history, evaluations: cache.len(), universe: cfg.universe.clone() })
}

fn score(population: &[Chromosome], cache: &HashMap<Chromosome, f64>) -> Vec<Scored> {
    population.iter().map(|&c| Scored { chromosome: c, fitness: cache[&c] }).collect()
}

fn breed<R: Rng>(cfg: &GaConfig, pop: &[Scored], rng: &mut R) -> Vec<Chromosome> {
    let len = cfg.universe.len();
    let mut order: Vec<usize> = (0..pop.len()).collect();
    // Stable sort keeps the earlier index first on ties.
    order.sort_by(|&a, &b| pop[b].fitness.total_cmp(&pop[a].fitness));
    let mut next: Vec<Chromosome> = order.iter().take(cfg.elitism_count).map(|&i| pop[i].chromosome).collect();

    let rate = cfg.mutation();
    while next.len() < cfg.population_size {
        let a = tournament(pop, cfg.tournament_size, rng);
        let b = tournament(pop, cfg.tournament_size, rng);
        let (c1, c2) = if len >= 2 && rng.random::<f64>() < cfg.crossover_rate {
            crossover(a, b, rng.random_range(1..len))
        } else {
            (a, b)
        };
        for child in [c1, c2] {
            let child = repair(mutate(child, rate, rng), rng);
            if next.len() < cfg.population_size {
                next.push(child);
            }
        }
    }
    next
}
