//! Evolution of voxelized Bezier-spline robot legs against surrogate media.

pub mod analytics;
pub mod error;
pub mod experiment;
pub mod ga;
pub mod genome;
pub mod mesh;
pub mod sim;
pub mod structcheck;
pub mod voxel;

pub use error::{Error, Result};
pub use genome::{BezierSpline, ControlPoint, LegGenome};
pub use mesh::TriangleMesh;
pub use sim::{EnvironmentKind, EvaluationResult, Evaluator};
pub use voxel::{VoxelGrid, Voxelizer};
