//! Forward kinematics of the coxa / femur / tibia chain with the voxel body
//! rigidly attached at the femur tip.
//!
//! World frame: `z` up, container floor at `z = 0`, walking direction `+y`.
//! At zero coxa yaw the leg points along `+x`. The femur and tibia pitch about
//! the horizontal axis perpendicular to the leg plane; positive femur angle
//! lifts the knee, positive absolute tibia pitch swings the foot outward.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::trajectory::JointAngles;
use crate::voxel::{VoxelGrid, NX, NY, NZ, VOXEL_EDGE_M};

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KinematicChain {
    pub coxa_link: f64,
    pub femur_link: f64,
    /// Height of the hip joint above the container floor.
    pub hip_height: f64,
}

impl Default for KinematicChain {
    fn default() -> Self {
        Self {
            coxa_link: 0.05,
            femur_link: 0.10,
            hip_height: 0.18,
        }
    }
}

impl KinematicChain {
    pub fn tibia_length(&self) -> f64 {
        NY as f64 * VOXEL_EDGE_M
    }

    pub fn pose(&self, angles: JointAngles, rates: JointAngles) -> Pose {
        let (sc, cc) = angles.coxa.sin_cos();
        let radial = Vec3::new(cc, sc, 0.0);
        let up = Vec3::z();
        let tangential = up.cross(&radial);
        let pitch_axis = -tangential;

        let hip = Vec3::new(0.0, 0.0, self.hip_height);
        let femur_joint = hip + radial * self.coxa_link;
        let (sf, cf) = angles.femur.sin_cos();
        let tibia_joint = femur_joint + (radial * cf + up * sf) * self.femur_link;

        let (sp, cp) = (angles.femur + angles.tibia).sin_cos();
        let down = -up * cp + radial * sp;
        let outward = radial * cp + up * sp;
        let grid_y = -down;
        let grid_z = outward.cross(&grid_y);
        let rotation = Matrix3::from_columns(&[outward, grid_y, grid_z]);

        Pose {
            hip,
            femur_joint,
            tibia_joint,
            pitch_axis,
            rotation,
            rates,
        }
    }
}

/// Joint frames and body orientation at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub hip: Vec3,
    pub femur_joint: Vec3,
    pub tibia_joint: Vec3,
    /// Shared pitch axis of the femur and tibia joints.
    pub pitch_axis: Vec3,
    /// Columns are the grid `x`, `y`, `z` axes in world coordinates.
    pub rotation: Matrix3<f64>,
    pub rates: JointAngles,
}

impl Pose {
    pub fn coxa_axis(&self) -> Vec3 {
        Vec3::z()
    }

    /// World position of a point given in grid-local metres (origin at the
    /// top-centre of the grid, the attachment point).
    #[inline]
    pub fn to_world(&self, local: &Vec3) -> Vec3 {
        self.tibia_joint + self.rotation * local
    }

    /// Velocity of a world point rigidly attached to the tibia.
    #[inline]
    pub fn velocity(&self, p: &Vec3) -> Vec3 {
        self.coxa_axis().cross(&(p - self.hip)) * self.rates.coxa
            + self.pitch_axis.cross(&(p - self.femur_joint)) * self.rates.femur
            + self.pitch_axis.cross(&(p - self.tibia_joint)) * self.rates.tibia
    }

    /// Torque of force `f` applied at `p` about each joint axis.
    #[inline]
    pub fn joint_torques(&self, p: &Vec3, f: &Vec3) -> [f64; 3] {
        [
            self.coxa_axis().dot(&(p - self.hip).cross(f)),
            self.pitch_axis.dot(&(p - self.femur_joint).cross(f)),
            self.pitch_axis.dot(&(p - self.tibia_joint).cross(f)),
        ]
    }
}

/// Grid-local centre of voxel `(ix, iy, iz)` in metres.
pub fn voxel_local_centre(ix: usize, iy: usize, iz: usize) -> Vec3 {
    Vec3::new(
        (ix as f64 + 0.5 - NX as f64 / 2.0) * VOXEL_EDGE_M,
        (iy as f64 + 0.5 - NY as f64) * VOXEL_EDGE_M,
        (iz as f64 + 0.5 - NZ as f64 / 2.0) * VOXEL_EDGE_M,
    )
}

/// Exposed-face bits: `+x, -x, +y, -y, +z, -z` in that order.
pub const FACE_DIRECTIONS: [(i32, i32, i32); 6] = [
    (1, 0, 0),
    (-1, 0, 0),
    (0, 1, 0),
    (0, -1, 0),
    (0, 0, 1),
    (0, 0, -1),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceVoxel {
    pub cell: (usize, usize, usize),
    pub local: Vec3,
    pub exposed: u8,
}

/// Voxels with at least one exposed face, grouped by layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LegBody {
    pub voxels: Vec<SurfaceVoxel>,
    /// `voxels[layer_start[iy]..layer_start[iy + 1]]` lie in layer `iy`.
    pub layer_start: [usize; NY + 1],
}

impl LegBody {
    pub fn from_grid(grid: &VoxelGrid) -> Self {
        let mut voxels = Vec::new();
        let mut layer_start = [0; NY + 1];
        for iy in 0..NY {
            layer_start[iy] = voxels.len();
            for iz in 0..NZ {
                for ix in 0..NX {
                    if !grid.get(ix, iy, iz) {
                        continue;
                    }
                    let (x, y, z) = (ix as i32, iy as i32, iz as i32);
                    let mut exposed = 0u8;
                    for (bit, (dx, dy, dz)) in FACE_DIRECTIONS.iter().enumerate() {
                        if !grid.get_signed(x + dx, y + dy, z + dz) {
                            exposed |= 1 << bit;
                        }
                    }
                    if exposed != 0 {
                        voxels.push(SurfaceVoxel {
                            cell: (ix, iy, iz),
                            local: voxel_local_centre(ix, iy, iz),
                            exposed,
                        });
                    }
                }
            }
        }
        layer_start[NY] = voxels.len();
        Self {
            voxels,
            layer_start,
        }
    }

    pub fn layer(&self, iy: usize) -> &[SurfaceVoxel] {
        &self.voxels[self.layer_start[iy]..self.layer_start[iy + 1]]
    }
}

/// Projected area (in units of one voxel face) of the exposed faces whose
/// world normals have a positive component along `dir`.
#[inline]
pub fn projected_faces(exposed: u8, rotation: &Matrix3<f64>, dir: &Vec3) -> f64 {
    let mut sum = 0.0;
    for axis in 0..3 {
        let c = rotation.column(axis).dot(dir);
        let (pos_bit, neg_bit) = (1 << (2 * axis), 1 << (2 * axis + 1));
        if c > 0.0 && exposed & pos_bit != 0 {
            sum += c;
        } else if c < 0.0 && exposed & neg_bit != 0 {
            sum -= c;
        }
    }
    sum
}

/// World position and velocity of every surface voxel.
pub fn surface_voxel_kinematics(
    chain: &KinematicChain,
    grid: &VoxelGrid,
    angles: JointAngles,
    rates: JointAngles,
) -> Vec<(Vec3, Vec3)> {
    let pose = chain.pose(angles, rates);
    LegBody::from_grid(grid)
        .voxels
        .iter()
        .map(|v| {
            let p = pose.to_world(&v.local);
            (p, pose.velocity(&p))
        })
        .collect()
}
