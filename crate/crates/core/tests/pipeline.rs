use legevo::ga::{crossover, evaluate_all, mutate, GaConfig};
use legevo::genome::{BezierSpline, ControlPoint};
use legevo::mesh::{extract_surface, TriangleMesh};
use legevo::sim::{EnvironmentKind, EnvironmentParams, Evaluator, SimConfig};
use legevo::structcheck::StructConfig;
use legevo::{LegGenome, Voxelizer};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimal OBJ reader: `v x y z` and `f a b c` lines only.
fn read_obj(text: &str) -> TriangleMesh {
    let mut mesh = TriangleMesh {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    for line in text.lines() {
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let v: Vec<f64> = parts.map(|p| p.parse().unwrap()).collect();
                mesh.vertices.push([v[0], v[1], v[2]]);
            }
            Some("f") => {
                let f: Vec<u32> = parts.map(|p| p.parse::<u32>().unwrap() - 1).collect();
                mesh.triangles.push([f[0], f[1], f[2]]);
            }
            _ => {}
        }
    }
    mesh
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Random sequences of breeding, mutation and persistence never leave
    /// the genome bounds and always yield a non-empty phenotype.
    #[test]
    fn random_operation_pipelines_preserve_invariants(seed in any::<u64>(), ops in proptest::collection::vec(0u8..3, 1..40)) {
        let cfg = GaConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vox = Voxelizer::default();
        let mut pool: Vec<LegGenome> = (0..4).map(|i| LegGenome::random(&mut rng, i)).collect();
        for (step, op) in ops.into_iter().enumerate() {
            let i = rng.random_range(0..pool.len());
            let next = match op {
                0 => {
                    let j = rng.random_range(0..pool.len());
                    crossover(&pool[i], &pool[j], &mut rng, 100 + step as u64)
                }
                1 => {
                    let mut g = pool[i].clone();
                    mutate(&mut g, &cfg, &mut rng);
                    g
                }
                _ => LegGenome::from_text(&pool[i].to_text()).unwrap(),
            };
            prop_assert!(next.is_valid());
            if let Ok(grid) = vox.phenotype(&next) {
                prop_assert!(grid.count() > 0);
                prop_assert!(grid.layer_count(0) > 0 && grid.layer_count(31) > 0);
            }
            pool.push(next);
        }
    }
}

#[test]
fn obj_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let vox = Voxelizer::default();
    for i in 0..5 {
        let grid = vox.phenotype(&LegGenome::random(&mut rng, i)).unwrap();
        let mesh = extract_surface(&grid).unwrap().smooth(2, 0.3);
        let path = dir.path().join("m.obj");
        mesh.write_obj(&path).unwrap();
        let back = read_obj(&std::fs::read_to_string(&path).unwrap());
        assert_eq!(back.triangles, mesh.triangles);
        assert_eq!(back.vertices, mesh.vertices);
    }
}

#[test]
fn upper_boundary_samples_land_in_last_cells() {
    let points = vec![
        ControlPoint::new(16.0, 0.0, 16.0),
        ControlPoint::new(16.0, 16.0, 16.0),
        ControlPoint::new(16.0, 32.0, 16.0),
    ];
    let s = BezierSpline::new(points, 1).unwrap();
    let g = LegGenome::new(0, vec![s; 5]).unwrap();
    let grid = Voxelizer::default().phenotype(&g).unwrap();
    assert_eq!(grid.count(), 32);
    assert!((0..32).all(|iy| grid.get(15, iy, 15)));
}

#[test]
fn evaluation_order_does_not_matter() {
    let mut sim = SimConfig::default();
    sim.trajectory.n_steps = 200;
    sim.trajectory.dt = 0.015;
    let ev = Evaluator::new(sim, StructConfig::default(), &EnvironmentParams::default(), EnvironmentKind::Soil);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let genomes: Vec<LegGenome> = (0..24).map(|i| LegGenome::random(&mut rng, i)).collect();
    let eval = |g: &LegGenome| ev.evaluate(g);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let many = rayon::ThreadPoolBuilder::new().num_threads(6).build().unwrap();
    let a = evaluate_all(&genomes, &eval, &one);
    let b = evaluate_all(&genomes, &eval, &many);
    assert_eq!(a, b);
    let mut reversed: Vec<LegGenome> = genomes.clone();
    reversed.reverse();
    let mut c = evaluate_all(&reversed, &eval, &many);
    c.reverse();
    assert_eq!(a, c);
}
