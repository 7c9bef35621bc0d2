use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use legevo::analytics::{cross_evaluate, read_stats_csv, similarity_matrix, similarity_summary, Matrix};
use legevo::experiment::{load_runs, plot, run_experiment, ExperimentConfig, StoredRun};
use legevo::mesh::extract_surface;
use legevo::sim::EnvironmentKind;
use legevo::{LegGenome, Result, Voxelizer};

#[derive(Parser)]
#[command(name = "legevo", version, about = "Evolve voxel robot legs for soil, gravel and fluid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured evolution campaign.
    Evolve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the output directory from the config and environment.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Score a single genome in one environment.
    Eval {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        env: EnvironmentKind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write a per-step joint torque trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Export the phenotype surface of a genome.
    Export {
        #[arg(long)]
        genome: PathBuf,
        #[arg(long)]
        obj: PathBuf,
        #[arg(long)]
        stl: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        smooth: usize,
        #[arg(long, default_value_t = 0.5)]
        lambda: f64,
    },
    /// Mean fitness of each environment's best legs in every environment.
    CrossEval {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise voxel similarity of the best legs of all runs.
    Similarity {
        #[arg(long)]
        runs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render fitness progression from a stats file (PNG or ASCII).
    Plot {
        #[arg(long)]
        stats: PathBuf,
        /// `.png` for an image, `-` for the terminal, anything else for text.
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn evolve(config: Option<&Path>, out: Option<&Path>, concurrency: Option<usize>) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(c) = concurrency {
        cfg.experiment.concurrency = c;
    }
    let summary = run_experiment(&cfg, out, |run| {
        let best = run.best().map_or("all rejected".to_string(), |b| format!("{:.6}", b.fitness()));
        eprintln!(
            "{} repeat {:02}: initial best {:.6}, final best {best}, {} evaluations",
            run.environment, run.repeat, run.initial.best, run.evaluations
        );
    })?;
    println!("wrote {} runs to {}", summary.runs.len(), summary.root.display());
    Ok(())
}

fn eval(genome: &Path, env: EnvironmentKind, config: Option<&Path>, trace: Option<&Path>) -> Result<()> {
    let cfg = load_config(config)?;
    let genome = LegGenome::load(genome)?;
    let ev = cfg.evaluator(env);
    let r = ev.evaluate(&genome);
    println!("environment = {env}");
    println!("fitness = {}", r.fitness);
    println!("tau_per_step = {}", r.tau_per_step());
    println!("delta = {}", r.delta);
    println!("occupied = {}", r.occupied_count);
    match r.rejected {
        Some(reason) => println!("rejected = true ({reason})"),
        None => println!("rejected = false"),
    }
    if let Some(path) = trace {
        let grid = ev.voxelizer().phenotype(&genome)?;
        ev.write_trace(&grid, path)?;
    }
    Ok(())
}

fn export(genome: &Path, obj: &Path, stl: Option<&Path>, smooth: usize, lambda: f64) -> Result<()> {
    let genome = LegGenome::load(genome)?;
    let grid = Voxelizer::default().phenotype(&genome)?;
    let mesh = extract_surface(&grid)?.smooth(smooth, lambda);
    mesh.write_obj(obj)?;
    if let Some(p) = stl {
        mesh.write_stl(p)?;
    }
    println!("{} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    Ok(())
}

fn stored(runs: &Path) -> Result<(Vec<StoredRun>, ExperimentConfig)> {
    let runs = load_runs(runs)?;
    let cfg = runs[0].manifest.config.clone();
    Ok((runs, cfg))
}

fn cross_eval(runs: &Path, out: &Path) -> Result<()> {
    let (runs, cfg) = stored(runs)?;
    let mut legs: BTreeMap<EnvironmentKind, Vec<LegGenome>> = BTreeMap::new();
    for r in runs {
        legs.entry(r.manifest.run.environment).or_default().push(r.best);
    }
    let envs: Vec<EnvironmentKind> = EnvironmentKind::ALL.into_iter().filter(|e| legs.contains_key(e)).collect();
    let m = cross_evaluate(&legs, &envs, &cfg.evaluator(envs[0]), &cfg.environment);
    m.write_csv(out)?;
    print_matrix(&m);
    Ok(())
}

fn similarity(runs: &Path, out: &Path) -> Result<()> {
    let (runs, cfg) = stored(runs)?;
    let vox = Voxelizer::new(cfg.sim.samples_per_spline);
    let grids = runs.iter().map(|r| vox.phenotype(&r.best)).collect::<Result<Vec<_>>>()?;
    let values = similarity_matrix(&grids)?;
    let labels: Vec<String> = runs
        .iter()
        .map(|r| format!("{}/{:02}", r.manifest.run.environment, r.manifest.run.repeat))
        .collect();
    let kinds: Vec<EnvironmentKind> = runs.iter().map(|r| r.manifest.run.environment).collect();
    let (within, cross) = similarity_summary(&kinds, &values);
    Matrix {
        rows: labels.clone(),
        cols: labels,
        values,
    }
    .write_csv(out)?;
    let show = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3}"));
    println!("mean within-environment similarity {}", show(within));
    println!("mean cross-environment similarity {}", show(cross));
    Ok(())
}

fn print_matrix(m: &Matrix) {
    print!("{:>10}", "");
    for c in &m.cols {
        print!("{c:>14}");
    }
    println!();
    for (r, row) in m.rows.iter().zip(&m.values) {
        print!("{r:>10}");
        for v in row {
            print!("{v:>14.6}");
        }
        println!();
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Evolve { config, out, concurrency } => evolve(config.as_deref(), out.as_deref(), concurrency),
        Command::Eval { genome, env, config, trace } => eval(&genome, env, config.as_deref(), trace.as_deref()),
        Command::Export { genome, obj, stl, smooth, lambda } => export(&genome, &obj, stl.as_deref(), smooth, lambda),
        Command::CrossEval { runs, out } => cross_eval(&runs, &out),
        Command::Similarity { runs, out } => similarity(&runs, &out),
        Command::Plot { stats, out } => plot::plot_to(&read_stats_csv(&stats)?, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
