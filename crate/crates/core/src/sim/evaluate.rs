//! One stride through a medium, torque accumulation, and the fitness
//! `f = tau/n + (tau/n) * delta/5`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kinematics::{projected_faces, KinematicChain, LegBody, Vec3};
use super::medium::{EnvironmentKind, EnvironmentModel, EnvironmentParams};
use super::trajectory::JointTrajectory;
use crate::error::{Error, Result};
use crate::genome::LegGenome;
use crate::structcheck::{Gate, StructConfig};
use crate::voxel::{occupancy_stats, VoxelGrid, Voxelizer, NX, NY, VOXEL_EDGE_M};

/// Fitness assigned to legs that fail the structural gate or cannot be built.
pub const SENTINEL_FITNESS: f64 = 1e9;

/// Area of one voxel face, m^2.
pub const FACE_AREA_M2: f64 = VOXEL_EDGE_M * VOXEL_EDGE_M;

#[inline]
pub fn fitness(tau: f64, n_steps: usize, delta: f64) -> f64 {
    let per_step = tau / n_steps as f64;
    per_step + per_step * (delta / 5.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    DegenerateLength,
    Disconnected,
}

impl std::fmt::Display for RejectReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::DegenerateLength => "degenerate length",
            Self::Disconnected => "top and bottom disconnected",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub environment: EnvironmentKind,
    /// Sum over steps of `|tau_coxa| + |tau_femur| + |tau_tibia|`, N m.
    pub tau: f64,
    /// Per-joint share of `tau`.
    pub joint_tau: [f64; 3],
    pub n_steps: usize,
    pub occupied_count: usize,
    pub delta: f64,
    pub fitness: f64,
    pub rejected: Option<RejectReason>,
}

impl EvaluationResult {
    pub fn is_rejected(&self) -> bool {
        self.rejected.is_some()
    }

    pub fn tau_per_step(&self) -> f64 {
        self.tau / self.n_steps as f64
    }

    fn rejected(environment: EnvironmentKind, n_steps: usize, grid: Option<&VoxelGrid>, reason: RejectReason) -> Self {
        let stats = grid.map(occupancy_stats);
        Self {
            environment,
            tau: 0.0,
            joint_tau: [0.0; 3],
            n_steps,
            occupied_count: stats.map_or(0, |s| s.occupied_count),
            delta: stats.map_or(0.0, |s| s.delta),
            fitness: SENTINEL_FITNESS,
            rejected: Some(reason),
        }
    }
}

/// Everything needed to score a leg apart from the genome and the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub trajectory: JointTrajectory,
    pub chain: KinematicChain,
    pub samples_per_spline: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trajectory: JointTrajectory::default(),
            chain: KinematicChain::default(),
            samples_per_spline: crate::voxel::DEFAULT_SAMPLES_PER_SPLINE,
        }
    }
}

/// Bundles the configuration for evaluating legs in one medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub sim: SimConfig,
    pub structure: StructConfig,
    pub env: EnvironmentModel,
}

/// Per-step record for debugging traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepTorque {
    pub step: usize,
    pub joint: [f64; 3],
    pub immersed: usize,
    pub lift: f64,
}

impl Evaluator {
    pub fn new(sim: SimConfig, structure: StructConfig, params: &EnvironmentParams, kind: EnvironmentKind) -> Self {
        Self {
            sim,
            structure,
            env: params.model(kind),
        }
    }

    pub fn with_env(&self, env: EnvironmentModel) -> Self {
        Self { env, ..*self }
    }

    pub fn voxelizer(&self) -> Voxelizer {
        Voxelizer::new(self.sim.samples_per_spline)
    }

    /// Rescale, rasterize, structural gate, then one simulated stride.
    pub fn evaluate(&self, genome: &LegGenome) -> EvaluationResult {
        let n = self.sim.trajectory.n_steps;
        let grid = match self.voxelizer().phenotype(genome) {
            Ok(g) => g,
            Err(_) => {
                return EvaluationResult::rejected(self.env.kind, n, None, RejectReason::DegenerateLength)
            }
        };
        self.evaluate_grid(&grid)
    }

    pub fn evaluate_grid(&self, grid: &VoxelGrid) -> EvaluationResult {
        let n = self.sim.trajectory.n_steps;
        let (_, gate) = self.structure.check(grid);
        if gate == Gate::Reject {
            return EvaluationResult::rejected(self.env.kind, n, Some(grid), RejectReason::Disconnected);
        }
        let stats = occupancy_stats(grid);
        let mut joint_tau = [0.0; 3];
        self.stride(grid, |s| {
            for (acc, t) in joint_tau.iter_mut().zip(s.joint) {
                *acc += t.abs();
            }
        });
        let tau = joint_tau[0] + joint_tau[1] + joint_tau[2];
        EvaluationResult {
            environment: self.env.kind,
            tau,
            joint_tau,
            n_steps: n,
            occupied_count: stats.occupied_count,
            delta: stats.delta,
            fitness: fitness(tau, n, stats.delta),
            rejected: None,
        }
    }

    /// Runs the stride and hands each step's net joint torques to `sink`.
    pub fn stride(&self, grid: &VoxelGrid, mut sink: impl FnMut(StepTorque)) {
        let body = LegBody::from_grid(grid);
        let traj = &self.sim.trajectory;
        let env = &self.env;
        // Largest |x| or |z| of a voxel centre in the grid frame.
        let half = (NX as f64 / 2.0 - 0.5) * VOXEL_EDGE_M;
        let mut immersed: Vec<(Vec3, u8)> = Vec::new();
        let mut contacts: Vec<(f64, f64)> = Vec::new();
        for step in 0..traj.n_steps {
            let angles = traj.angles_at(step).expect("step in range");
            let rates = traj.rates_at(step).expect("step in range");
            let pose = self.sim.chain.pose(angles, rates);
            let rot = &pose.rotation;

            // Collect voxels under the surface, skipping layers that cannot be.
            immersed.clear();
            let zx = rot[(2, 0)].abs() * half;
            let zz = rot[(2, 2)].abs() * half;
            for iy in 0..NY {
                let layer = body.layer(iy);
                let Some(first) = layer.first() else { continue };
                let centre_z = pose.tibia_joint.z + rot[(2, 1)] * first.local.y;
                if centre_z - zx - zz >= env.medium_depth {
                    continue;
                }
                for v in layer {
                    let p = pose.to_world(&v.local);
                    if p.z < env.medium_depth {
                        immersed.push((p, v.exposed));
                    }
                }
            }

            let mut lift = 0.0;
            if env.bears_load() && !immersed.is_empty() {
                contacts.clear();
                let down = -Vec3::z();
                for (p, exposed) in &immersed {
                    let a = projected_faces(*exposed, rot, &down);
                    if a > 0.0 {
                        contacts.push((env.medium_depth - p.z, a * FACE_AREA_M2));
                    }
                }
                lift = env.support_lift(&mut contacts);
            }

            let mut joint = [0.0; 3];
            let mut count = 0;
            for (p, exposed) in &immersed {
                let raised = Vec3::new(p.x, p.y, p.z + lift);
                if raised.z >= env.medium_depth {
                    continue;
                }
                let mut v = pose.velocity(p);
                if lift > 0.0 {
                    // Supported legs rest on the medium; the body absorbs vertical motion.
                    v.z = 0.0;
                }
                let speed = v.norm();
                if speed < env.v_eps {
                    continue;
                }
                let area = projected_faces(*exposed, rot, &(v / speed)) * FACE_AREA_M2;
                let f = env.medium_force(&raised, &v, area);
                let t = pose.joint_torques(p, &f);
                for k in 0..3 {
                    joint[k] += t[k];
                }
                count += 1;
            }
            sink(StepTorque {
                step,
                joint,
                immersed: count,
                lift,
            });
        }
    }

    /// Per-step torque trace as CSV: `step,coxa,femur,tibia,immersed,lift`.
    pub fn write_trace(&self, grid: &VoxelGrid, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut err = None;
        let _ = writeln!(w, "step,coxa,femur,tibia,immersed,lift");
        self.stride(grid, |s| {
            if err.is_none() {
                if let Err(e) = writeln!(
                    w,
                    "{},{},{},{},{},{}",
                    s.step, s.joint[0], s.joint[1], s.joint[2], s.immersed, s.lift
                ) {
                    err = Some(e);
                }
            }
        });
        if let Some(e) = err {
            return Err(Error::io(path, e));
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Scores `genome` in `env` with the default structural and simulation settings.
pub fn evaluate_leg(genome: &LegGenome, env: &EnvironmentModel, sim: &SimConfig) -> EvaluationResult {
    Evaluator {
        sim: *sim,
        structure: StructConfig::default(),
        env: *env,
    }
    .evaluate(genome)
}
