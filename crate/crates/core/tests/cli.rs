use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use legevo::experiment::Manifest;
use legevo::mesh::extract_surface;
use legevo::{LegGenome, Voxelizer};

const BIN: &str = env!("CARGO_BIN_EXE_legevo");

fn legevo(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env_remove("LEGEVO_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const QUICK: &str = "\
[experiment]
environments = [\"soil\", \"gravel\"]
repeats = 2
[ga]
generations = 1
[sim.trajectory]
n_steps = 120
dt = 0.025
";

/// One quick campaign shared by the tests below.
fn campaign(dir: &Path) {
    fs::write(dir.join("quick.toml"), QUICK).unwrap();
    let out = Command::new(BIN)
        .args(["evolve", "--config", "quick.toml"])
        .current_dir(dir)
        .env("LEGEVO_OUTPUT_DIR", dir.join("from_env"))
        .output()
        .unwrap();
    ok(out);
}

#[test]
fn evolve_uses_env_output_dir_and_counts_evaluations() {
    let dir = tempfile::tempdir().unwrap();
    campaign(dir.path());
    let run = dir.path().join("from_env/soil/repeat_00");
    let m = Manifest::load(&run.join("manifest.toml")).unwrap();
    assert_eq!(m.run.evaluations, 40);
    let stats = fs::read_to_string(run.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 2);
}

#[test]
fn analysis_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    campaign(dir.path());
    let d = dir.path();
    let printed = ok(legevo(&["cross-eval", "--runs", "from_env", "--out", "cross.csv"], d));
    assert!(printed.contains("gravel"));
    let cross = fs::read_to_string(d.join("cross.csv")).unwrap();
    assert_eq!(cross.lines().next(), Some(",soil,gravel"));
    assert_eq!(cross.lines().count(), 3);

    let printed = ok(legevo(&["similarity", "--runs", "from_env", "--out", "sim.csv"], d));
    assert!(printed.contains("within-environment"));
    let sim = fs::read_to_string(d.join("sim.csv")).unwrap();
    assert_eq!(sim.lines().count(), 5);
    assert!(sim.lines().nth(1).unwrap().starts_with("soil/00,100,"));

    ok(legevo(&["plot", "--stats", "from_env/soil/repeat_00/stats.csv", "--out", "fit.txt"], d));
    assert!(fs::read_to_string(d.join("fit.txt")).unwrap().contains("B best"));
    ok(legevo(&["plot", "--stats", "from_env/soil/repeat_00/stats.csv", "--out", "fit.png"], d));
    assert!(fs::read(d.join("fit.png")).unwrap().starts_with(b"\x89PNG"));
}

fn sample_genome(dir: &Path) -> std::path::PathBuf {
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(77);
    let g = LegGenome::random(&mut rng, 5);
    let path = dir.join("leg.genome.toml");
    g.save(&path).unwrap();
    path
}

#[test]
fn eval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample_genome(dir.path());
    let g = g.to_str().unwrap();
    let a = ok(legevo(&["eval", "--genome", g, "--env", "fluid"], dir.path()));
    let b = ok(legevo(&["eval", "--genome", g, "--env", "fluid"], dir.path()));
    assert_eq!(a, b);
    for key in ["fitness = ", "tau_per_step = ", "delta = ", "rejected = "] {
        assert!(a.contains(key), "{a}");
    }
    ok(legevo(&["eval", "--genome", g, "--env", "soil", "--trace", "trace.csv"], dir.path()));
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 3001);
}

#[test]
fn export_without_smoothing_matches_extraction() {
    let dir = tempfile::tempdir().unwrap();
    let g = sample_genome(dir.path());
    ok(legevo(
        &["export", "--genome", g.to_str().unwrap(), "--obj", "cli.obj", "--stl", "cli.stl", "--smooth", "0"],
        dir.path(),
    ));
    let genome = LegGenome::load(&g).unwrap();
    let mesh = extract_surface(&Voxelizer::default().phenotype(&genome).unwrap()).unwrap();
    mesh.write_obj(&dir.path().join("lib.obj")).unwrap();
    assert_eq!(
        fs::read(dir.path().join("cli.obj")).unwrap(),
        fs::read(dir.path().join("lib.obj")).unwrap()
    );
    let stl = fs::metadata(dir.path().join("cli.stl")).unwrap().len();
    assert_eq!(stl, 84 + 50 * mesh.triangles.len() as u64);
}

#[test]
fn usage_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["eval", "--bogus"], &["eval", "--genome", "x", "--env", "lava"], &[]] {
        let out = legevo(args, dir.path());
        assert!(!out.status.success(), "{args:?}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains("Usage") || err.contains("invalid value"), "{args:?}: {err}");
    }
    let out = legevo(&["eval", "--genome", "missing.toml", "--env", "soil"], dir.path());
    assert!(!out.status.success());
    fs::write(dir.path().join("bad.toml"), "[ga]\nunknown = 1\n").unwrap();
    let out = legevo(&["evolve", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown"));
}
