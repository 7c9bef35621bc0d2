//! Surrogate stride simulation of a single leg.

pub mod evaluate;
pub mod kinematics;
pub mod medium;
pub mod trajectory;

pub use evaluate::{evaluate_leg, fitness, EvaluationResult, Evaluator, RejectReason, SimConfig, SENTINEL_FITNESS};
pub use kinematics::{surface_voxel_kinematics, KinematicChain, LegBody, Pose};
pub use medium::{EnvironmentKind, EnvironmentModel, EnvironmentParams};
pub use trajectory::{JointAngles, JointTrajectory};
