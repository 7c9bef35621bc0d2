//! Genotype to phenotype: rescaling along the leg axis and rasterization onto
//! the fixed 16 x 32 x 16 occupancy grid.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::genome::{de_casteljau, ControlPoint, LegGenome, Y_RANGE};

pub const NX: usize = 16;
pub const NY: usize = 32;
pub const NZ: usize = 16;
pub const CELLS: usize = NX * NY * NZ;

/// Physical edge of one voxel in metres.
pub const VOXEL_EDGE_M: f64 = 0.005;
/// Physical edge of one voxel in millimetres.
pub const VOXEL_EDGE_MM: f64 = 5.0;

pub const DEFAULT_SAMPLES_PER_SPLINE: usize = 256;

const WORDS: usize = CELLS / 64;

/// Boolean occupancy over the fixed grid.
///
/// Cells are stored as a bitset with `ix` fastest, then `iz`, then `iy`, so
/// each horizontal layer is a contiguous run of 256 bits.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VoxelGrid {
    words: [u64; WORDS],
}

impl std::fmt::Debug for VoxelGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "VoxelGrid({} occupied)", self.count())
    }
}

impl Default for VoxelGrid {
    fn default() -> Self {
        Self::empty()
    }
}

#[inline]
pub const fn cell_index(ix: usize, iy: usize, iz: usize) -> usize {
    ix + NX * (iz + NZ * iy)
}

#[inline]
pub const fn cell_coords(index: usize) -> (usize, usize, usize) {
    (index % NX, index / (NX * NZ), (index / NX) % NZ)
}

impl VoxelGrid {
    pub const fn empty() -> Self {
        Self { words: [0; WORDS] }
    }

    pub const fn full() -> Self {
        Self {
            words: [u64::MAX; WORDS],
        }
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.get_index(cell_index(ix, iy, iz))
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Occupancy with out-of-grid coordinates reading as empty.
    #[inline]
    pub fn get_signed(&self, ix: i32, iy: i32, iz: i32) -> bool {
        (0..NX as i32).contains(&ix)
            && (0..NY as i32).contains(&iy)
            && (0..NZ as i32).contains(&iz)
            && self.get(ix as usize, iy as usize, iz as usize)
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, iz: usize, value: bool) {
        self.set_index(cell_index(ix, iy, iz), value);
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn layer_count(&self, iy: usize) -> usize {
        let per_layer = NX * NZ / 64;
        self.words[iy * per_layer..(iy + 1) * per_layer]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum()
    }

    pub fn clear_layer(&mut self, iy: usize) {
        let per_layer = NX * NZ / 64;
        self.words[iy * per_layer..(iy + 1) * per_layer].fill(0);
    }

    /// Occupied cells as `(ix, iy, iz)` in storage order.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        (0..CELLS).filter(|&i| self.get_index(i)).map(cell_coords)
    }

    /// True when every cell occupied in `self` is also occupied in `other`.
    pub fn is_subset_of(&self, other: &VoxelGrid) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn agreement_count(&self, other: &VoxelGrid) -> usize {
        CELLS
            - self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| (a ^ b).count_ones() as usize)
                .sum::<usize>()
    }

    pub fn complement(&self) -> VoxelGrid {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out
    }

    /// Layered ASCII art, one block per `iy` from the top layer down.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        for iy in (0..NY).rev() {
            let _ = writeln!(out, "iy={iy}");
            for iz in 0..NZ {
                for ix in 0..NX {
                    out.push(if self.get(ix, iy, iz) { '#' } else { '.' });
                }
                out.push('\n');
            }
        }
        out
    }

    /// Raw bitset, 1024 bytes. Bit `i` of the grid is bit `i % 8` (LSB first)
    /// of byte `i / 8`, with `i = ix + 16 * (iz + 16 * iy)`.
    pub fn to_bitset_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_bitset_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != CELLS / 8 {
            return Err(Error::Parse(format!(
                "bitset length {} (expected {})",
                bytes.len(),
                CELLS / 8
            )));
        }
        let mut words = [0u64; WORDS];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        }
        Ok(Self { words })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyStats {
    pub occupied_count: usize,
    /// Percentage of occupied cells, `100 * occupied / 8192`.
    pub delta: f64,
}

pub fn occupancy_stats(grid: &VoxelGrid) -> OccupancyStats {
    let occupied_count = grid.count();
    OccupancyStats {
        occupied_count,
        delta: 100.0 * occupied_count as f64 / CELLS as f64,
    }
}

/// Percentage of cells on which the two grids agree (both occupied or both empty).
pub fn voxel_similarity(a: &VoxelGrid, b: &VoxelGrid) -> f64 {
    100.0 * a.agreement_count(b) as f64 / CELLS as f64
}

/// Intersection over union of the occupied sets, in percent. Two empty grids score 100.
pub fn jaccard_similarity(a: &VoxelGrid, b: &VoxelGrid) -> f64 {
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        100.0
    } else {
        100.0 * f64::from(inter) / f64::from(union)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RescaledCurve {
    pub control_points: Vec<[f64; 3]>,
    pub thickness: u8,
}

/// A genome whose curves have been stretched along `y` to span the full grid.
///
/// Control points may fall outside `[0, 32]` in `y` when a control polygon
/// overshoots its curve; the sampled curve itself always spans exactly `[0, 32]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledLeg {
    pub curves: Vec<RescaledCurve>,
    /// Map applied to every `y`: `y' = (y - offset) * scale`.
    pub offset: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Voxelizer {
    pub samples_per_spline: usize,
}

impl Default for Voxelizer {
    fn default() -> Self {
        Self {
            samples_per_spline: DEFAULT_SAMPLES_PER_SPLINE,
        }
    }
}

impl Voxelizer {
    pub fn new(samples_per_spline: usize) -> Self {
        Self {
            samples_per_spline: samples_per_spline.max(2),
        }
    }

    fn params(&self) -> impl Iterator<Item = f64> {
        let n = self.samples_per_spline;
        (0..n).map(move |i| i as f64 / (n - 1) as f64)
    }

    /// Affinely maps `y` so the lowest sampled curve point lands on 0 and the
    /// highest on 32.
    pub fn rescale_to_full_length(&self, genome: &LegGenome) -> Result<RescaledLeg> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for spline in genome.splines() {
            for t in self.params() {
                let y = de_casteljau(spline.control_points(), t)[1];
                lo = lo.min(y);
                hi = hi.max(y);
            }
        }
        let extent = hi - lo;
        if extent.is_nan() || extent <= 1e-9 {
            return Err(Error::DegenerateLength);
        }
        let scale = Y_RANGE / extent;
        let curves = genome
            .splines()
            .iter()
            .map(|s| RescaledCurve {
                control_points: s
                    .control_points()
                    .iter()
                    .map(|p| [p.x, (p.y - lo) * scale, p.z])
                    .collect(),
                thickness: s.thickness(),
            })
            .collect();
        Ok(RescaledLeg {
            curves,
            offset: lo,
            scale,
        })
    }

    /// Sample points of every curve of a rescaled leg, clamped into the grid box.
    pub fn sample_points(&self, leg: &RescaledLeg) -> Vec<(Vec<[f64; 3]>, u8)> {
        leg.curves
            .iter()
            .map(|c| {
                let pts: Vec<ControlPoint> = c
                    .control_points
                    .iter()
                    .map(|&[x, y, z]| ControlPoint::new(x, y, z))
                    .collect();
                let samples = self
                    .params()
                    .map(|t| {
                        let [x, y, z] = de_casteljau(&pts, t);
                        [
                            x.clamp(0.0, NX as f64),
                            y.clamp(0.0, NY as f64),
                            z.clamp(0.0, NZ as f64),
                        ]
                    })
                    .collect();
                (samples, c.thickness)
            })
            .collect()
    }

    /// Marks the voxel containing each sample plus every voxel whose centre is
    /// within `thickness / 2` of the sample.
    pub fn rasterize(&self, leg: &RescaledLeg) -> VoxelGrid {
        let mut grid = VoxelGrid::empty();
        for (samples, thickness) in self.sample_points(leg) {
            let r = f64::from(thickness) / 2.0;
            let r2 = r * r;
            for p in samples {
                let containing = [
                    (p[0] as usize).min(NX - 1),
                    (p[1] as usize).min(NY - 1),
                    (p[2] as usize).min(NZ - 1),
                ];
                grid.set(containing[0], containing[1], containing[2], true);
                let range = |c: f64, n: usize| {
                    let lo = (c - r - 0.5).floor().max(0.0) as usize;
                    let hi = ((c + r - 0.5).ceil().max(0.0) as usize).min(n - 1);
                    lo..=hi
                };
                for iy in range(p[1], NY) {
                    let dy = iy as f64 + 0.5 - p[1];
                    for iz in range(p[2], NZ) {
                        let dz = iz as f64 + 0.5 - p[2];
                        for ix in range(p[0], NX) {
                            let dx = ix as f64 + 0.5 - p[0];
                            if dx * dx + dy * dy + dz * dz <= r2 {
                                grid.set(ix, iy, iz, true);
                            }
                        }
                    }
                }
            }
        }
        grid
    }

    /// Rescale then rasterize.
    pub fn phenotype(&self, genome: &LegGenome) -> Result<VoxelGrid> {
        Ok(self.rasterize(&self.rescale_to_full_length(genome)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genome::BezierSpline;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn straight_leg(thickness: u8) -> LegGenome {
        let s = BezierSpline::new(
            vec![
                ControlPoint::new(8.0, 0.0, 8.0),
                ControlPoint::new(8.0, 16.0, 8.0),
                ControlPoint::new(8.0, 32.0, 8.0),
            ],
            thickness,
        )
        .unwrap();
        LegGenome::new(0, vec![s; 5]).unwrap()
    }

    #[test]
    fn index_round_trip() {
        for i in [0, 1, 15, 16, 255, 256, 8191] {
            let (x, y, z) = cell_coords(i);
            assert_eq!(cell_index(x, y, z), i);
        }
        assert_eq!(cell_coords(cell_index(3, 20, 11)), (3, 20, 11));
    }

    #[test]
    fn rescale_affine_arithmetic() {
        // Straight vertical curves spanning y in [4, 20].
        let s = BezierSpline::new(
            vec![
                ControlPoint::new(2.0, 4.0, 2.0),
                ControlPoint::new(2.0, 12.0, 2.0),
                ControlPoint::new(2.0, 20.0, 2.0),
            ],
            1,
        )
        .unwrap();
        let g = LegGenome::new(0, vec![s; 6]).unwrap();
        let r = Voxelizer::default().rescale_to_full_length(&g).unwrap();
        let y = r.curves[0].control_points[1][1];
        assert!((y - 16.0).abs() < 1e-12, "{y}");
        assert!((r.curves[0].control_points[0][1]).abs() < 1e-12);
        assert!((r.curves[0].control_points[2][1] - 32.0).abs() < 1e-12);
        // x and z untouched
        assert_eq!(r.curves[0].control_points[1][0], 2.0);
        assert_eq!(r.curves[0].control_points[1][2], 2.0);
    }

    #[test]
    fn rescale_full_span_is_identity() {
        let g = straight_leg(1);
        let r = Voxelizer::default().rescale_to_full_length(&g).unwrap();
        for (c, s) in r.curves.iter().zip(g.splines()) {
            for (a, b) in c.control_points.iter().zip(s.control_points()) {
                assert!((a[1] - b.y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flat_genome_is_degenerate() {
        let s = BezierSpline::new(
            vec![
                ControlPoint::new(1.0, 7.0, 2.0),
                ControlPoint::new(5.0, 7.0, 9.0),
                ControlPoint::new(13.0, 7.0, 4.0),
            ],
            2,
        )
        .unwrap();
        let g = LegGenome::new(0, vec![s; 5]).unwrap();
        assert!(matches!(
            Voxelizer::default().phenotype(&g),
            Err(Error::DegenerateLength)
        ));
    }

    #[test]
    fn straight_column_thickness_one() {
        let grid = Voxelizer::default().phenotype(&straight_leg(1)).unwrap();
        assert_eq!(grid.count(), 32);
        for iy in 0..NY {
            assert!(grid.get(8, iy, 8));
        }
    }

    #[test]
    fn thicker_column_is_superset() {
        let v = Voxelizer::default();
        let g1 = v.phenotype(&straight_leg(1)).unwrap();
        let g2 = v.phenotype(&straight_leg(2)).unwrap();
        let g3 = v.phenotype(&straight_leg(3)).unwrap();
        assert!(g1.is_subset_of(&g2) && g2.is_subset_of(&g3));
        assert!(g3.count() > g1.count());
    }

    #[test]
    fn random_phenotypes_touch_top_and_bottom() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let v = Voxelizer::default();
        for i in 0..200 {
            let g = LegGenome::random(&mut rng, i);
            let grid = v.phenotype(&g).unwrap();
            assert!(grid.count() > 0);
            assert!(grid.layer_count(0) > 0 && grid.layer_count(NY - 1) > 0);
            assert_eq!(grid, v.phenotype(&g).unwrap());
        }
    }

    #[test]
    fn occupancy_arithmetic() {
        let mut g = VoxelGrid::empty();
        assert_eq!(occupancy_stats(&g).delta, 0.0);
        for iy in 0..32 {
            g.set(8, iy, 8, true);
        }
        assert_eq!(occupancy_stats(&g).delta, 0.390625);
        assert_eq!(occupancy_stats(&VoxelGrid::full()).delta, 100.0);
        assert_eq!(VoxelGrid::full().count(), CELLS);
    }

    #[test]
    fn similarity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = Voxelizer::default()
            .phenotype(&LegGenome::random(&mut rng, 0))
            .unwrap();
        assert_eq!(voxel_similarity(&g, &g), 100.0);
        assert_eq!(voxel_similarity(&g, &g.complement()), 0.0);
        let mut a = VoxelGrid::empty();
        for i in 0..100 {
            a.set_index(i * 7, true);
        }
        let expected = 100.0 * (CELLS - 100) as f64 / CELLS as f64;
        assert_eq!(voxel_similarity(&a, &VoxelGrid::empty()), expected);
        assert!((expected - 98.78).abs() < 0.01);
        assert_eq!(jaccard_similarity(&a, &a), 100.0);
        assert_eq!(jaccard_similarity(&a, &VoxelGrid::empty()), 0.0);
    }

    #[test]
    fn bitset_round_trip_and_order() {
        let mut g = VoxelGrid::empty();
        g.set(1, 0, 0, true);
        g.set(0, 0, 1, true);
        g.set(0, 1, 0, true);
        let bytes = g.to_bitset_bytes();
        assert_eq!(bytes.len(), 1024);
        assert_eq!(bytes[0], 0b10);
        assert_eq!(bytes[2], 1); // iz = 1 starts at bit 16
        assert_eq!(bytes[32], 1); // iy = 1 starts at bit 256
        assert_eq!(VoxelGrid::from_bitset_bytes(&bytes).unwrap(), g);
    }

    #[test]
    fn ascii_dump_shape() {
        let grid = Voxelizer::default().phenotype(&straight_leg(1)).unwrap();
        let art = grid.to_ascii();
        assert_eq!(art.lines().count(), NY * (NZ + 1));
        assert_eq!(art.matches('#').count(), 32);
    }
}
