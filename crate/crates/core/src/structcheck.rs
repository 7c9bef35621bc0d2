//! Structural pre-check standing in for finite-element analysis.
//!
//! Material in any horizontal layer whose mean stress under the design load
//! exceeds the allowed stress is deleted, then the leg must still connect the
//! actuator layer (`iy = 31`) to the foot layer (`iy = 0`) through
//! face-adjacent voxels.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::voxel::{cell_coords, cell_index, VoxelGrid, CELLS, NX, NY, NZ, VOXEL_EDGE_MM};

/// Cross-section of one voxel in mm^2.
pub const VOXEL_AREA_MM2: f64 = VOXEL_EDGE_MM * VOXEL_EDGE_MM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructConfig {
    pub load_newtons: f64,
    /// Allowed layer stress in N/mm^2.
    pub sigma_max: f64,
}

impl Default for StructConfig {
    fn default() -> Self {
        Self {
            load_newtons: 60.0,
            sigma_max: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate {
    Pass,
    Reject,
}

/// Mean stress in layer `iy`, N/mm^2; infinite for an empty layer under load.
pub fn layer_stress(grid: &VoxelGrid, iy: usize, load_newtons: f64) -> f64 {
    let area = grid.layer_count(iy) as f64 * VOXEL_AREA_MM2;
    if load_newtons == 0.0 {
        0.0
    } else {
        load_newtons / area
    }
}

pub fn stress_filter(grid: &VoxelGrid, load_newtons: f64, sigma_max: f64) -> VoxelGrid {
    let mut out = grid.clone();
    for iy in 0..NY {
        if grid.layer_count(iy) > 0 && layer_stress(grid, iy, load_newtons) > sigma_max {
            out.clear_layer(iy);
        }
    }
    out
}

/// Breadth-first flood fill from every occupied top-layer voxel.
pub fn connectivity_gate(grid: &VoxelGrid) -> Gate {
    let mut seen = vec![false; CELLS];
    let mut queue = VecDeque::new();
    for iz in 0..NZ {
        for ix in 0..NX {
            let i = cell_index(ix, NY - 1, iz);
            if grid.get_index(i) {
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y, z) = cell_coords(i);
        if y == 0 {
            return Gate::Pass;
        }
        let (x, y, z) = (x as i32, y as i32, z as i32);
        for (dx, dy, dz) in [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)] {
            let (nx, ny, nz) = (x + dx, y + dy, z + dz);
            if grid.get_signed(nx, ny, nz) {
                let j = cell_index(nx as usize, ny as usize, nz as usize);
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    Gate::Reject
}

impl StructConfig {
    /// Filter then gate; returns the filtered grid alongside the verdict.
    pub fn check(&self, grid: &VoxelGrid) -> (VoxelGrid, Gate) {
        let filtered = stress_filter(grid, self.load_newtons, self.sigma_max);
        let gate = connectivity_gate(&filtered);
        (filtered, gate)
    }
}
