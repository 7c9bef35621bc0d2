//! Steady (mu + lambda) genetic algorithm over leg genomes.
//!
//! Each child is bred from two tournament winners by two-point crossover on
//! the spline list, followed by Gaussian control-point noise and occasional
//! structural edits. Parents and children are ranked together and the best
//! `pop_size` survive.

use std::cmp::Ordering;
use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genome::{
    BezierSpline, ControlPoint, LegGenome, POINTS_PER_SPLINE, SPLINES_PER_GENOME, THICKNESS, X_RANGE, Y_RANGE,
    Z_RANGE,
};
use crate::sim::{EvaluationResult, SENTINEL_FITNESS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaConfig {
    pub pop_size: usize,
    pub children_per_gen: usize,
    pub generations: usize,
    pub tournament_size: usize,
    /// Mutation standard deviation as a fraction of each coordinate range.
    pub sigma_fraction: f64,
    pub p_thickness: f64,
    pub p_cp_structural: f64,
    pub p_spline_structural: f64,
    /// Chance that a structural edit adds rather than removes.
    pub p_add_given_structural: f64,
    pub master_seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            pop_size: 20,
            children_per_gen: 20,
            generations: 100,
            tournament_size: 4,
            sigma_fraction: 0.10,
            p_thickness: 0.2,
            p_cp_structural: 0.2,
            p_spline_structural: 0.1,
            p_add_given_structural: 0.5,
            master_seed: 1,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("ga.sigma_fraction", self.sigma_fraction),
            ("ga.p_thickness", self.p_thickness),
            ("ga.p_cp_structural", self.p_cp_structural),
            ("ga.p_spline_structural", self.p_spline_structural),
            ("ga.p_add_given_structural", self.p_add_given_structural),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.pop_size == 0 || self.children_per_gen == 0 || self.tournament_size == 0 {
            return Err(Error::Config("ga sizes must be positive".into()));
        }
        if self.tournament_size > self.pop_size {
            return Err(Error::Config(format!(
                "ga.tournament_size {} exceeds ga.pop_size {}",
                self.tournament_size, self.pop_size
            )));
        }
        Ok(())
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds `parts` into one 64-bit seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C908, |h, &p| mix(h ^ mix(p)))
}

/// Random stream for one individual. Generation 0 is the initial population.
pub fn individual_rng(run_seed: u64, generation: usize, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(&[run_seed, generation as u64, index as u64]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub genome: LegGenome,
    /// `None` when the evaluation itself failed.
    pub result: Option<EvaluationResult>,
    /// Generation in which the individual was created.
    pub born: usize,
}

impl Individual {
    pub fn fitness(&self) -> f64 {
        match &self.result {
            Some(r) => r.fitness,
            None => SENTINEL_FITNESS,
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.result.as_ref().is_none_or(|r| r.is_rejected())
    }

    pub fn occupied_count(&self) -> usize {
        self.result.as_ref().map_or(0, |r| r.occupied_count)
    }
}

/// Ascending fitness, then older first, then lower id.
pub fn rank_order(a: &Individual, b: &Individual) -> Ordering {
    a.fitness()
        .total_cmp(&b.fitness())
        .then(a.born.cmp(&b.born))
        .then(a.genome.id.cmp(&b.genome.id))
}

/// Index of the winner among `size` distinct uniformly drawn members.
pub fn tournament_select<R: Rng + ?Sized>(population: &[Individual], size: usize, rng: &mut R) -> Result<usize> {
    if size == 0 || population.len() < size {
        return Err(Error::Config(format!(
            "tournament of {size} needs at least that many individuals, population has {}",
            population.len()
        )));
    }
    let mut entrants = sample(rng, population.len(), size).into_vec();
    entrants.sort_unstable();
    let mut best = entrants[0];
    for &i in &entrants[1..] {
        if population[i].fitness() < population[best].fitness() {
            best = i;
        }
    }
    Ok(best)
}

/// `p1[..c1] ++ p2[c1..c2] ++ p1[c2..]`; requires `c1 <= c2 <= min(|p1|, |p2|)`.
pub fn crossover_at(p1: &LegGenome, p2: &LegGenome, c1: usize, c2: usize, id: u64) -> LegGenome {
    assert!(c1 <= c2 && c2 <= p1.splines.len().min(p2.splines.len()));
    let mut splines = Vec::with_capacity(p1.splines.len());
    splines.extend_from_slice(&p1.splines[..c1]);
    splines.extend_from_slice(&p2.splines[c1..c2]);
    splines.extend_from_slice(&p1.splines[c2..]);
    LegGenome {
        id,
        parents: vec![p1.id, p2.id],
        splines,
    }
}

/// Two-point crossover with both cut points drawn from the shorter parent.
pub fn crossover<R: Rng + ?Sized>(p1: &LegGenome, p2: &LegGenome, rng: &mut R, id: u64) -> LegGenome {
    let m = p1.splines.len().min(p2.splines.len());
    let a = rng.random_range(0..=m);
    let b = rng.random_range(0..=m);
    crossover_at(p1, p2, a.min(b), a.max(b), id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structural {
    Added,
    Removed,
    Skipped,
}

/// What a call to [`mutate`] did besides the Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MutationReport {
    pub thickness_redrawn: bool,
    pub control_point: Option<Structural>,
    pub spline: Option<Structural>,
}

fn structural<R: Rng + ?Sized>(rng: &mut R, p_add: f64, len: usize, bounds: &std::ops::RangeInclusive<usize>) -> Structural {
    if rng.random_bool(p_add) {
        if len < *bounds.end() {
            Structural::Added
        } else {
            Structural::Skipped
        }
    } else if len > *bounds.start() {
        Structural::Removed
    } else {
        Structural::Skipped
    }
}

/// Mutates `genome` in place and reports the structural edits applied.
pub fn mutate<R: Rng + ?Sized>(genome: &mut LegGenome, cfg: &GaConfig, rng: &mut R) -> MutationReport {
    let mut report = MutationReport::default();
    let noise = |range: f64| Normal::new(0.0, cfg.sigma_fraction * range).expect("finite sigma");
    let (nx, ny, nz) = (noise(X_RANGE), noise(Y_RANGE), noise(Z_RANGE));
    for spline in &mut genome.splines {
        for p in &mut spline.control_points {
            *p = ControlPoint::new(p.x + nx.sample(rng), p.y + ny.sample(rng), p.z + nz.sample(rng)).clamped();
        }
    }

    if rng.random_bool(cfg.p_thickness) {
        let i = rng.random_range(0..genome.splines.len());
        genome.splines[i].thickness = rng.random_range(THICKNESS);
        report.thickness_redrawn = true;
    }

    if rng.random_bool(cfg.p_cp_structural) {
        let i = rng.random_range(0..genome.splines.len());
        let points = &mut genome.splines[i].control_points;
        let op = structural(rng, cfg.p_add_given_structural, points.len(), &POINTS_PER_SPLINE);
        match op {
            Structural::Added => {
                let at = rng.random_range(0..=points.len());
                points.insert(at, ControlPoint::random(rng));
            }
            Structural::Removed => {
                let at = rng.random_range(0..points.len());
                points.remove(at);
            }
            Structural::Skipped => {}
        }
        report.control_point = Some(op);
    }

    if rng.random_bool(cfg.p_spline_structural) {
        let op = structural(rng, cfg.p_add_given_structural, genome.splines.len(), &SPLINES_PER_GENOME);
        match op {
            Structural::Added => genome.splines.push(BezierSpline::random(rng)),
            Structural::Removed => {
                let at = rng.random_range(0..genome.splines.len());
                genome.splines.remove(at);
            }
            Structural::Skipped => {}
        }
        report.spline = Some(op);
    }
    report
}

/// Evaluates genomes on `pool`, keeping input order. A panicking evaluation
/// leaves its slot empty, which ranks as rejected.
pub fn evaluate_all<F>(genomes: &[LegGenome], eval: &F, pool: &rayon::ThreadPool) -> Vec<Option<EvaluationResult>>
where
    F: Fn(&LegGenome) -> EvaluationResult + Sync,
{
    pool.install(|| {
        genomes
            .par_iter()
            .map(|g| catch_unwind(AssertUnwindSafe(|| eval(g))).ok())
            .collect()
    })
}

/// Population and bookkeeping for one run.
#[derive(Debug, Clone)]
pub struct GaState {
    pub config: GaConfig,
    pub run_seed: u64,
    pub generation: usize,
    pub population: Vec<Individual>,
    pub evaluations: usize,
    next_id: u64,
}

impl GaState {
    /// Random, evaluated initial population (generation 0).
    pub fn initialize<F>(config: GaConfig, run_seed: u64, eval: &F, pool: &rayon::ThreadPool) -> Result<Self>
    where
        F: Fn(&LegGenome) -> EvaluationResult + Sync,
    {
        config.validate()?;
        let genomes: Vec<LegGenome> = (0..config.pop_size)
            .map(|i| LegGenome::random(&mut individual_rng(run_seed, 0, i), i as u64))
            .collect();
        let results = evaluate_all(&genomes, eval, pool);
        let population = genomes
            .into_iter()
            .zip(results)
            .map(|(genome, result)| Individual { genome, result, born: 0 })
            .collect();
        Ok(Self {
            config,
            run_seed,
            generation: 0,
            population,
            evaluations: config.pop_size,
            next_id: config.pop_size as u64,
        })
    }

    /// Breeds the children of the next generation without evaluating them.
    pub fn breed(&self) -> Result<Vec<LegGenome>> {
        let generation = self.generation + 1;
        (0..self.config.children_per_gen)
            .map(|i| {
                let mut rng = individual_rng(self.run_seed, generation, i);
                let a = tournament_select(&self.population, self.config.tournament_size, &mut rng)?;
                let b = tournament_select(&self.population, self.config.tournament_size, &mut rng)?;
                let id = self.next_id + i as u64;
                let mut child = crossover(&self.population[a].genome, &self.population[b].genome, &mut rng, id);
                mutate(&mut child, &self.config, &mut rng);
                debug_assert!(child.is_valid());
                Ok(child)
            })
            .collect()
    }

    /// One full generation: breed, evaluate, rank parents and children, truncate.
    pub fn run_generation<F>(&mut self, eval: &F, pool: &rayon::ThreadPool) -> Result<()>
    where
        F: Fn(&LegGenome) -> EvaluationResult + Sync,
    {
        let children = self.breed()?;
        let results = evaluate_all(&children, eval, pool);
        self.generation += 1;
        self.evaluations += children.len();
        self.next_id += children.len() as u64;
        let born = self.generation;
        self.population.extend(
            children
                .into_iter()
                .zip(results)
                .map(|(genome, result)| Individual { genome, result, born }),
        );
        self.survive();
        Ok(())
    }

    fn survive(&mut self) {
        self.population.sort_by(rank_order);
        self.population.truncate(self.config.pop_size);
    }

    pub fn best(&self) -> &Individual {
        self.population
            .iter()
            .min_by(|a, b| rank_order(a, b))
            .expect("population is never empty")
    }
}
