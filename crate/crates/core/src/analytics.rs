//! Per-generation statistics, cross-environment evaluation and morphology
//! similarity.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::{rank_order, Individual};
use crate::genome::LegGenome;
use crate::sim::{EnvironmentKind, EnvironmentParams, Evaluator};
use crate::voxel::{voxel_similarity, VoxelGrid};

/// One row of the per-generation statistics file. Rejected individuals are
/// counted but left out of every moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub worst: f64,
    /// Population standard deviation.
    pub stddev: f64,
    pub reject_count: usize,
    pub best_voxel_count: usize,
    /// Set when nothing survived the structural gate; the moments are NaN.
    #[serde(skip)]
    pub all_rejected: bool,
}

pub fn generation_stats(generation: usize, population: &[Individual]) -> GenerationStats {
    let valid: Vec<&Individual> = population.iter().filter(|i| !i.is_rejected()).collect();
    let reject_count = population.len() - valid.len();
    let Some(best) = valid.iter().copied().min_by(|a, b| rank_order(a, b)) else {
        return GenerationStats {
            generation,
            best: f64::NAN,
            mean: f64::NAN,
            worst: f64::NAN,
            stddev: f64::NAN,
            reject_count,
            best_voxel_count: 0,
            all_rejected: true,
        };
    };
    let n = valid.len() as f64;
    let mean = valid.iter().map(|i| i.fitness()).sum::<f64>() / n;
    let var = valid.iter().map(|i| (i.fitness() - mean).powi(2)).sum::<f64>() / n;
    let worst = valid.iter().map(|i| i.fitness()).fold(f64::NEG_INFINITY, f64::max);
    GenerationStats {
        generation,
        best: best.fitness(),
        mean,
        worst,
        stddev: var.sqrt(),
        reject_count,
        best_voxel_count: best.occupied_count(),
        all_rejected: false,
    }
}

/// Lowest-ranked individual that passed the structural gate.
pub fn best_leg(population: &[Individual]) -> Option<&Individual> {
    population
        .iter()
        .filter(|i| !i.is_rejected())
        .min_by(|a, b| rank_order(a, b))
}

pub fn write_stats_csv(path: &Path, rows: &[GenerationStats]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_stats_csv(path: &Path) -> Result<Vec<GenerationStats>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    r.deserialize()
        .map(|row| {
            let mut s: GenerationStats = row.map_err(|e| Error::csv(path, e))?;
            s.all_rejected = s.best.is_nan();
            Ok(s)
        })
        .collect()
}

/// Labelled dense matrix written as CSV with a header row and a label column.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r][c]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        let header = std::iter::once(String::new()).chain(self.cols.iter().cloned());
        w.write_record(header).map_err(|e| Error::csv(path, e))?;
        for (label, row) in self.rows.iter().zip(&self.values) {
            let record = std::iter::once(label.clone()).chain(row.iter().map(|v| v.to_string()));
            w.write_record(record).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Entry `(r, c)` is the mean fitness in environment `envs[c]` of the legs
/// trained in environment `r`. Rows follow `envs`, skipping environments with
/// no legs.
pub fn cross_evaluate(
    best_legs: &BTreeMap<EnvironmentKind, Vec<LegGenome>>,
    envs: &[EnvironmentKind],
    base: &Evaluator,
    params: &EnvironmentParams,
) -> Matrix {
    let rows: Vec<EnvironmentKind> = envs
        .iter()
        .copied()
        .filter(|e| best_legs.get(e).is_some_and(|v| !v.is_empty()))
        .collect();
    let values = rows
        .iter()
        .map(|r| {
            let legs = &best_legs[r];
            envs.par_iter()
                .map(|&c| {
                    let ev = Evaluator::new(base.sim, base.structure, params, c);
                    let total: f64 = legs.par_iter().map(|g| ev.evaluate(g).fitness).sum();
                    total / legs.len() as f64
                })
                .collect()
        })
        .collect();
    Matrix {
        rows: rows.iter().map(|e| e.to_string()).collect(),
        cols: envs.iter().map(|e| e.to_string()).collect(),
        values,
    }
}

/// Pairwise voxel agreement, percent.
pub fn similarity_matrix(grids: &[VoxelGrid]) -> Result<Vec<Vec<f64>>> {
    if grids.len() < 2 {
        return Err(Error::Config(format!(
            "similarity needs at least two legs, got {}",
            grids.len()
        )));
    }
    let n = grids.len();
    let mut m = vec![vec![100.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = voxel_similarity(&grids[i], &grids[j]);
            m[i][j] = s;
            m[j][i] = s;
        }
    }
    Ok(m)
}

/// Mean off-diagonal similarity for pairs sharing a label and for pairs that
/// do not; `None` where no such pair exists.
pub fn similarity_summary<T: PartialEq>(labels: &[T], matrix: &[Vec<f64>]) -> (Option<f64>, Option<f64>) {
    let (mut within, mut wn, mut cross, mut cn) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            if labels[i] == labels[j] {
                within += matrix[i][j];
                wn += 1;
            } else {
                cross += matrix[i][j];
                cn += 1;
            }
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    (mean(within, wn), mean(cross, cn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{EvaluationResult, SimConfig, SENTINEL_FITNESS};
    use crate::structcheck::StructConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn individual(fitness: f64, voxels: usize, id: u64) -> Individual {
        let mut rng = ChaCha8Rng::seed_from_u64(id);
        Individual {
            genome: LegGenome::random(&mut rng, id),
            result: Some(EvaluationResult {
                environment: EnvironmentKind::Soil,
                tau: 0.0,
                joint_tau: [0.0; 3],
                n_steps: 1,
                occupied_count: voxels,
                delta: 0.0,
                fitness,
                rejected: (fitness == SENTINEL_FITNESS).then_some(crate::sim::RejectReason::Disconnected),
            }),
            born: 0,
        }
    }

    #[test]
    fn stats_of_plain_population() {
        let pop = [individual(9.0, 10, 0), individual(8.0, 20, 1), individual(10.0, 30, 2)];
        let s = generation_stats(4, &pop);
        assert_eq!((s.best, s.mean, s.worst), (8.0, 9.0, 10.0));
        assert_eq!(s.best_voxel_count, 20);
        assert!((s.stddev - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(!s.all_rejected);
    }

    #[test]
    fn sentinels_are_excluded() {
        let pop = [individual(8.0, 5, 0), individual(SENTINEL_FITNESS, 7, 1)];
        let s = generation_stats(0, &pop);
        assert_eq!((s.best, s.mean, s.worst, s.reject_count), (8.0, 8.0, 8.0, 1));
        let dead = [individual(SENTINEL_FITNESS, 7, 1)];
        let s = generation_stats(0, &dead);
        assert!(s.all_rejected && s.best.is_nan());
        assert_eq!(s.reject_count, 1);
        assert!(best_leg(&dead).is_none());
    }

    #[test]
    fn stats_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stats.csv");
        let rows = vec![
            generation_stats(1, &[individual(8.0, 5, 0), individual(9.5, 5, 1)]),
            generation_stats(2, &[individual(SENTINEL_FITNESS, 5, 2)]),
        ];
        write_stats_csv(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("generation,best,mean,worst,stddev,reject_count,best_voxel_count\n"));
        let back = read_stats_csv(&path).unwrap();
        assert_eq!(back[0], rows[0]);
        assert!(back[1].all_rejected);
    }

    #[test]
    fn cross_evaluation_reproduces_training_fitness() {
        let mut sim = SimConfig::default();
        sim.trajectory.n_steps = 200;
        sim.trajectory.dt = 0.015;
        let params = EnvironmentParams::default();
        let ev = Evaluator::new(sim, StructConfig::default(), &params, EnvironmentKind::Gravel);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let leg = (0..50)
            .map(|i| LegGenome::random(&mut rng, i))
            .find(|g| !ev.evaluate(g).is_rejected())
            .unwrap();
        let trained = ev.evaluate(&leg).fitness;
        let legs = BTreeMap::from([(EnvironmentKind::Gravel, vec![leg])]);
        let m = cross_evaluate(&legs, &EnvironmentKind::ALL, &ev, &params);
        assert_eq!(m.rows, ["gravel"]);
        assert_eq!(m.cols.len(), 3);
        assert_eq!(m.get(0, 1), trained);
    }

    #[test]
    fn similarity_matrix_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let vox = crate::voxel::Voxelizer::default();
        let grids: Vec<VoxelGrid> = (0..5)
            .map(|i| vox.phenotype(&LegGenome::random(&mut rng, i)).unwrap())
            .collect();
        let m = similarity_matrix(&grids).unwrap();
        for i in 0..5 {
            assert_eq!(m[i][i], 100.0);
            for j in 0..5 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
        assert!(similarity_matrix(&grids[..1]).is_err());
        let (w, c) = similarity_summary(&["a", "a", "b", "b", "b"], &m);
        let expect_w = (m[0][1] + m[2][3] + m[2][4] + m[3][4]) / 4.0;
        assert!((w.unwrap() - expect_w).abs() < 1e-12);
        assert!(c.is_some());
    }

    #[test]
    fn matrix_csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let m = Matrix {
            rows: vec!["soil".into()],
            cols: vec!["soil".into(), "fluid".into()],
            values: vec![vec![1.5, 2.0]],
        };
        m.write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), ",soil,fluid\nsoil,1.5,2\n");
    }
}
