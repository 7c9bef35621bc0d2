//! Orchestration of repeated GA runs and their on-disk layout:
//!
//! ```text
//! <root>/<env>/repeat_NN/
//!     manifest.toml
//!     stats.csv
//!     best.genome.toml  best.obj  best.stl
//!     population/rank_NN.genome.toml  rank_NN.obj  rank_NN.stl
//!     INCOMPLETE        (only while running or after a failure)
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::analytics::{best_leg, generation_stats, GenerationStats};
use crate::error::{Error, Result};
use crate::ga::{derive_seed, GaState, Individual};
use crate::genome::LegGenome;
use crate::mesh::extract_surface;
use crate::sim::EnvironmentKind;
use crate::voxel::Voxelizer;

pub const MANIFEST: &str = "manifest.toml";
pub const STATS: &str = "stats.csv";
pub const BEST_GENOME: &str = "best.genome.toml";
pub const INCOMPLETE: &str = "INCOMPLETE";

pub const SOFTWARE: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Seed of one repeat; the environment takes part so that runs in different
/// media start from different populations.
pub fn run_seed(master_seed: u64, env: EnvironmentKind, repeat: usize) -> u64 {
    let code = EnvironmentKind::ALL.iter().position(|&e| e == env).expect("known kind") as u64;
    derive_seed(&[master_seed, code, repeat as u64])
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub environment: EnvironmentKind,
    pub repeat: usize,
    pub seed: u64,
    pub dir: Option<PathBuf>,
    /// Statistics of the evaluated random population.
    pub initial: GenerationStats,
    /// One entry per generation, starting at generation 1.
    pub history: Vec<GenerationStats>,
    pub final_population: Vec<Individual>,
    pub evaluations: usize,
}

impl RunSummary {
    pub fn best(&self) -> Option<&Individual> {
        best_leg(&self.final_population)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BestRecord {
    pub id: u64,
    pub fitness: f64,
    pub occupied_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub software: String,
    pub environment: EnvironmentKind,
    pub repeat: usize,
    /// Hex string; TOML integers cannot hold every 64-bit seed.
    pub seed: String,
    pub generations: usize,
    pub evaluations: usize,
}

/// Contents of `manifest.toml`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunRecord,
    pub initial: GenerationStats,
    #[serde(rename = "final")]
    pub last: GenerationStats,
    pub best: Option<BestRecord>,
    pub config: ExperimentConfig,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

/// Drives the GA for one repeat, calling `on_generation` after the initial
/// population and after every generation.
pub fn run_repeat(
    cfg: &ExperimentConfig,
    env: EnvironmentKind,
    repeat: usize,
    pool: &rayon::ThreadPool,
    mut on_generation: impl FnMut(&GenerationStats) -> Result<()>,
) -> Result<RunSummary> {
    let seed = run_seed(cfg.ga.master_seed, env, repeat);
    let ev = cfg.evaluator(env);
    let eval = |g: &LegGenome| ev.evaluate(g);
    let mut state = GaState::initialize(cfg.ga, seed, &eval, pool)?;
    let initial = generation_stats(0, &state.population);
    on_generation(&initial)?;
    let mut history = Vec::with_capacity(cfg.ga.generations);
    for _ in 0..cfg.ga.generations {
        state.run_generation(&eval, pool)?;
        let stats = generation_stats(state.generation, &state.population);
        on_generation(&stats)?;
        history.push(stats);
    }
    Ok(RunSummary {
        environment: env,
        repeat,
        seed,
        dir: None,
        initial,
        history,
        final_population: state.population,
        evaluations: state.evaluations,
    })
}

fn ensure_writable(root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let probe = root.join(".legevo-write-test");
    fs::write(&probe, b"").map_err(|e| Error::io(root, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

fn write_individual(cfg: &ExperimentConfig, vox: &Voxelizer, ind: &Individual, stem: &Path) -> Result<()> {
    ind.genome.save(&stem.with_extension("genome.toml"))?;
    if !cfg.export.meshes {
        return Ok(());
    }
    // Rejected legs may still have a phenotype worth inspecting.
    let Ok(grid) = vox.phenotype(&ind.genome) else {
        return Ok(());
    };
    let mut mesh = extract_surface(&grid)?;
    if cfg.export.smooth_iterations > 0 {
        mesh = mesh.smooth(cfg.export.smooth_iterations, cfg.export.smooth_lambda);
    }
    mesh.write_obj(&stem.with_extension("obj"))?;
    mesh.write_stl(&stem.with_extension("stl"))
}

fn persist_repeat(
    cfg: &ExperimentConfig,
    env: EnvironmentKind,
    repeat: usize,
    dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<RunSummary> {
    let stats_path = dir.join(STATS);
    let mut stats = csv::Writer::from_path(&stats_path).map_err(|e| Error::csv(&stats_path, e))?;
    let mut summary = run_repeat(cfg, env, repeat, pool, |row| {
        if row.generation == 0 {
            return Ok(());
        }
        stats.serialize(row).map_err(|e| Error::csv(&stats_path, e))?;
        stats.flush().map_err(|e| Error::io(&stats_path, e))
    })?;
    drop(stats);

    let vox = Voxelizer::new(cfg.sim.samples_per_spline);
    let pop_dir = dir.join("population");
    fs::create_dir_all(&pop_dir).map_err(|e| Error::io(&pop_dir, e))?;
    for (rank, ind) in summary.final_population.iter().enumerate() {
        write_individual(cfg, &vox, ind, &pop_dir.join(format!("rank_{rank:02}")))?;
    }
    let best = summary.best().cloned();
    if let Some(b) = &best {
        write_individual(cfg, &vox, b, &dir.join("best"))?;
    }

    let manifest = Manifest {
        run: RunRecord {
            software: SOFTWARE.into(),
            environment: env,
            repeat,
            seed: format!("{:#018x}", summary.seed),
            generations: cfg.ga.generations,
            evaluations: summary.evaluations,
        },
        initial: summary.initial,
        last: summary.history.last().copied().unwrap_or(summary.initial),
        best: best.map(|b| BestRecord {
            id: b.genome.id,
            fitness: b.fitness(),
            occupied_count: b.occupied_count(),
        }),
        config: cfg.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    summary.dir = Some(dir.to_path_buf());
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub root: PathBuf,
    pub runs: Vec<RunSummary>,
}

pub fn repeat_dir(root: &Path, env: EnvironmentKind, repeat: usize) -> PathBuf {
    root.join(env.name()).join(format!("repeat_{repeat:02}"))
}

/// Runs every configured repeat in every configured environment and writes
/// the artifacts below the resolved output directory.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    output_override: Option<&Path>,
    mut on_run: impl FnMut(&RunSummary),
) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let root = cfg.output_dir(output_override);
    ensure_writable(&root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads())
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let mut runs = Vec::new();
    for &env in &cfg.experiment.environments {
        for repeat in 0..cfg.experiment.repeats {
            let dir = repeat_dir(&root, env, repeat);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            let marker = dir.join(INCOMPLETE);
            fs::write(&marker, "run in progress\n").map_err(|e| Error::io(&marker, e))?;
            match persist_repeat(cfg, env, repeat, &dir, &pool) {
                Ok(summary) => {
                    fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
                    on_run(&summary);
                    runs.push(summary);
                }
                Err(e) => {
                    let _ = fs::write(&marker, format!("run aborted: {e}\n"));
                    return Err(e);
                }
            }
        }
    }
    Ok(ExperimentSummary { root, runs })
}

/// A finished repeat found on disk.
#[derive(Debug, Clone)]
pub struct StoredRun {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub best: LegGenome,
}

fn run_dirs(root: &Path) -> Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    let mut frontier = vec![(root.to_path_buf(), 0)];
    while let Some((dir, depth)) = frontier.pop() {
        if dir.join(MANIFEST).is_file() {
            found.push(dir);
            continue;
        }
        if depth == 2 {
            continue;
        }
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let path = entry.map_err(|e| Error::io(&dir, e))?.path();
            if path.is_dir() {
                frontier.push((path, depth + 1));
            }
        }
    }
    found.sort();
    Ok(found)
}

/// Completed runs below `root` that produced a best leg, ordered by
/// environment then repeat. Runs still marked incomplete are skipped.
pub fn load_runs(root: &Path) -> Result<Vec<StoredRun>> {
    let mut runs = Vec::new();
    for dir in run_dirs(root)? {
        if dir.join(INCOMPLETE).exists() {
            continue;
        }
        let manifest = Manifest::load(&dir.join(MANIFEST))?;
        let best_path = dir.join(BEST_GENOME);
        if manifest.best.is_none() || !best_path.is_file() {
            continue;
        }
        let best = LegGenome::load(&best_path)?;
        runs.push(StoredRun { dir, manifest, best });
    }
    runs.sort_by_key(|r| (r.manifest.run.environment, r.manifest.run.repeat));
    if runs.is_empty() {
        return Err(Error::Config(format!("no completed runs found under {}", root.display())));
    }
    Ok(runs)
}
