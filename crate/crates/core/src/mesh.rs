//! Blocky surface extraction from a voxel grid, Laplacian smoothing, and
//! OBJ / binary STL export.

use std::collections::HashMap;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::voxel::{cell_index, VoxelGrid, NX, NY, NZ, VOXEL_EDGE_MM};

/// Triangle surface with vertices in millimetres and counter-clockwise
/// (outward-facing) winding.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

// Corner offsets of each face, ordered counter-clockwise seen from outside.
const FACES: [([i32; 3], [[i32; 3]; 4]); 6] = [
    ([1, 0, 0], [[1, 0, 0], [1, 1, 0], [1, 1, 1], [1, 0, 1]]),
    ([-1, 0, 0], [[0, 0, 0], [0, 0, 1], [0, 1, 1], [0, 1, 0]]),
    ([0, 1, 0], [[0, 1, 0], [0, 1, 1], [1, 1, 1], [1, 1, 0]]),
    ([0, -1, 0], [[0, 0, 0], [1, 0, 0], [1, 0, 1], [0, 0, 1]]),
    ([0, 0, 1], [[0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]]),
    ([0, 0, -1], [[0, 0, 0], [0, 1, 0], [1, 1, 0], [1, 0, 0]]),
];

const LX: usize = NX + 1;
const LY: usize = NY + 1;
const LZ: usize = NZ + 1;

fn lattice_index(p: [i32; 3]) -> usize {
    p[0] as usize + LX * (p[2] as usize + LZ * p[1] as usize)
}

/// Whether the four cells around the lattice edge `a`-`b` are occupied in a
/// diagonal pattern, which makes four faces meet at that edge.
fn is_pinched_edge(grid: &VoxelGrid, a: [i32; 3], b: [i32; 3]) -> bool {
    let axis = (0..3).find(|&k| a[k] != b[k]).expect("distinct corners");
    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
    let base = a[axis].min(b[axis]);
    let cell = |du: i32, dv: i32| {
        let mut c = [0i32; 3];
        c[axis] = base;
        c[u] = a[u] - 1 + du;
        c[v] = a[v] - 1 + dv;
        grid.get_signed(c[0], c[1], c[2])
    };
    let (c00, c11, c01, c10) = (cell(0, 0), cell(1, 1), cell(0, 1), cell(1, 0));
    c00 == c11 && c01 == c10 && c00 != c01
}

struct Builder {
    vertices: Vec<[f64; 3]>,
    lattice: Vec<u32>,
    midpoints: HashMap<(usize, usize, usize), u32>,
}

impl Builder {
    fn push(&mut self, p: [f64; 3]) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    fn lattice_vertex(&mut self, p: [i32; 3]) -> u32 {
        let idx = lattice_index(p);
        if self.lattice[idx] == u32::MAX {
            let pos = p.map(|c| f64::from(c) * VOXEL_EDGE_MM);
            self.lattice[idx] = self.push(pos);
        }
        self.lattice[idx]
    }

    /// One midpoint per (edge, owning voxel) so the two voxels meeting along a
    /// pinched edge get separate edge vertices.
    fn midpoint_vertex(&mut self, a: [i32; 3], b: [i32; 3], voxel: usize) -> u32 {
        let key = (lattice_index(a).min(lattice_index(b)), lattice_index(a).max(lattice_index(b)), voxel);
        if let Some(&v) = self.midpoints.get(&key) {
            return v;
        }
        let pos = [0, 1, 2].map(|k| f64::from(a[k] + b[k]) * 0.5 * VOXEL_EDGE_MM);
        let v = self.push(pos);
        self.midpoints.insert(key, v);
        v
    }
}

/// Two triangles per exposed voxel face (six-neighbourhood, grid boundary
/// counts as empty).
pub fn extract_surface(grid: &VoxelGrid) -> Result<TriangleMesh> {
    if grid.is_empty() {
        return Err(Error::EmptyPhenotype);
    }
    let mut b = Builder {
        vertices: Vec::new(),
        lattice: vec![u32::MAX; LX * LY * LZ],
        midpoints: HashMap::new(),
    };
    let mut triangles = Vec::new();
    for (ix, iy, iz) in grid.occupied() {
        let cell = [ix as i32, iy as i32, iz as i32];
        let voxel = cell_index(ix, iy, iz);
        for (normal, corners) in FACES {
            if grid.get_signed(cell[0] + normal[0], cell[1] + normal[1], cell[2] + normal[2]) {
                continue;
            }
            let pts = corners.map(|o| [cell[0] + o[0], cell[1] + o[1], cell[2] + o[2]]);
            let ids = pts.map(|p| b.lattice_vertex(p));
            let pinched: Vec<bool> = (0..4)
                .map(|m| is_pinched_edge(grid, pts[m], pts[(m + 1) % 4]))
                .collect();
            if !pinched.contains(&true) {
                triangles.push([ids[0], ids[1], ids[2]]);
                triangles.push([ids[0], ids[2], ids[3]]);
                continue;
            }
            let mut ring = Vec::with_capacity(8);
            for m in 0..4 {
                ring.push(ids[m]);
                if pinched[m] {
                    ring.push(b.midpoint_vertex(pts[m], pts[(m + 1) % 4], voxel));
                }
            }
            let centre = [0, 1, 2].map(|k| {
                pts.iter().map(|p| f64::from(p[k])).sum::<f64>() * 0.25 * VOXEL_EDGE_MM
            });
            let c = b.push(centre);
            for m in 0..ring.len() {
                triangles.push([c, ring[m], ring[(m + 1) % ring.len()]]);
            }
        }
    }
    Ok(TriangleMesh {
        vertices: b.vertices,
        triangles,
    })
}

impl TriangleMesh {
    /// Signed enclosed volume in mm^3 via the divergence theorem.
    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = t.map(|i| self.vertices[i as usize]);
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum::<f64>()
            / 6.0
    }

    /// Every undirected edge with its incident triangle count.
    pub fn edge_incidence(&self) -> HashMap<(u32, u32), usize> {
        let mut edges = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *edges.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        edges
    }

    /// Every edge is shared by exactly two triangles.
    pub fn is_closed(&self) -> bool {
        self.edge_incidence().values().all(|&n| n == 2)
    }

    pub fn bounding_box(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    fn neighbours(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for (a, b) in self.edge_incidence().into_keys() {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Laplacian smoothing: each pass moves every vertex a fraction `lambda`
    /// of the way to the centroid of its edge neighbours.
    pub fn smooth(&self, iterations: usize, lambda: f64) -> TriangleMesh {
        let mut out = self.clone();
        if iterations == 0 {
            return out;
        }
        let adj = self.neighbours();
        for _ in 0..iterations {
            let prev = out.vertices.clone();
            for (v, nbrs) in out.vertices.iter_mut().zip(&adj) {
                if nbrs.is_empty() {
                    continue;
                }
                let mut centroid = [0.0; 3];
                for &n in nbrs {
                    for k in 0..3 {
                        centroid[k] += prev[n as usize][k];
                    }
                }
                for k in 0..3 {
                    centroid[k] /= nbrs.len() as f64;
                    v[k] += lambda * (centroid[k] - v[k]);
                }
            }
        }
        out
    }

    pub fn write_obj(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<std::fs::File>| -> std::io::Result<()> {
            writeln!(w, "# legevo tibia, units mm")?;
            for v in &self.vertices {
                writeln!(w, "v {} {} {}", v[0], v[1], v[2])?;
            }
            for t in &self.triangles {
                writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
            }
            w.flush()
        };
        write(&mut w).map_err(|e| Error::io(path, e))
    }

    /// Binary STL bytes: 80-byte header, u32 count, 50 bytes per triangle.
    pub fn to_stl_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(84 + 50 * self.triangles.len());
        let mut header = [0u8; 80];
        let tag = b"legevo binary STL";
        header[..tag.len()].copy_from_slice(tag);
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.triangles.len() as u32).to_le_bytes());
        for t in &self.triangles {
            let [a, b, c] = t.map(|i| self.vertices[i as usize]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let mut n = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            if len > 0.0 {
                n = n.map(|x| x / len);
            }
            for x in n.iter().chain(&a).chain(&b).chain(&c) {
                out.extend_from_slice(&(*x as f32).to_le_bytes());
            }
            out.extend_from_slice(&0u16.to_le_bytes());
        }
        out
    }

    pub fn write_stl(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_stl_bytes()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_of(cells: &[(usize, usize, usize)]) -> VoxelGrid {
        let mut g = VoxelGrid::empty();
        for &(x, y, z) in cells {
            g.set(x, y, z, true);
        }
        g
    }

    /// Independent count: exposed faces by scanning neighbours of every cell.
    fn exposed_faces(g: &VoxelGrid) -> usize {
        g.occupied()
            .map(|(x, y, z)| {
                let (x, y, z) = (x as i32, y as i32, z as i32);
                [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)]
                    .iter()
                    .filter(|(dx, dy, dz)| !g.get_signed(x + dx, y + dy, z + dz))
                    .count()
            })
            .sum()
    }

    #[test]
    fn single_cube() {
        let m = extract_surface(&grid_of(&[(3, 4, 5)])).unwrap();
        assert_eq!(m.vertices.len(), 8);
        assert_eq!(m.triangles.len(), 12);
        assert!(m.is_closed());
        assert!((m.signed_volume() - 125.0).abs() < 1e-9);
    }

    #[test]
    fn bar_of_two() {
        let g = grid_of(&[(3, 4, 5), (4, 4, 5)]);
        assert_eq!(exposed_faces(&g), 10);
        let m = extract_surface(&g).unwrap();
        assert_eq!(m.triangles.len(), 20);
        assert!(m.is_closed());
        assert!((m.signed_volume() - 250.0).abs() < 1e-9);
    }

    #[test]
    fn full_block() {
        let m = extract_surface(&VoxelGrid::full()).unwrap();
        assert_eq!(m.triangles.len(), 2 * 2 * (16 * 32 + 32 * 16 + 16 * 16));
        assert_eq!(m.triangles.len(), 5120);
        assert!(m.is_closed());
        let expected = 8192.0 * 125.0;
        assert!((m.signed_volume() - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn edge_contact_stays_closed() {
        // Two cubes sharing only an edge, bridged through the layer above.
        let g = grid_of(&[(0, 0, 0), (1, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1)]);
        let m = extract_surface(&g).unwrap();
        assert!(m.is_closed(), "{:?}", m.edge_incidence().values().filter(|&&n| n != 2).count());
        assert!((m.signed_volume() - 5.0 * 125.0).abs() < 1e-9);
        // and the same pinch with the upper layer full
        let g = grid_of(&[(0, 0, 0), (1, 1, 0), (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]);
        let m = extract_surface(&g).unwrap();
        assert!(m.is_closed());
        assert!((m.signed_volume() - 6.0 * 125.0).abs() < 1e-9);
    }

    #[test]
    fn empty_grid_is_error() {
        assert!(matches!(
            extract_surface(&VoxelGrid::empty()),
            Err(Error::EmptyPhenotype)
        ));
    }

    #[test]
    fn smoothing_identity_and_contraction() {
        let m = extract_surface(&grid_of(&[(3, 4, 5)])).unwrap();
        assert_eq!(m.smooth(0, 0.5), m);
        let s = m.smooth(1, 0.5);
        assert_eq!(s.triangles, m.triangles);
        assert_eq!(s.vertices.len(), m.vertices.len());
        let (lo0, hi0) = m.bounding_box();
        let (lo1, hi1) = s.bounding_box();
        for k in 0..3 {
            assert!(lo1[k] > lo0[k] && hi1[k] < hi0[k]);
        }
    }

    #[test]
    fn stl_size() {
        let m = extract_surface(&grid_of(&[(0, 0, 0)])).unwrap();
        let bytes = m.to_stl_bytes();
        assert_eq!(bytes.len(), 684);
        assert_eq!(u32::from_le_bytes(bytes[80..84].try_into().unwrap()), 12);
    }
}
