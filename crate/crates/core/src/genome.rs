//! Spline-bundle genotype of a tibia.
//!
//! A [`LegGenome`] is a variable-length list of thickened Bezier curves whose
//! control points live in the continuous box `[0,16] x [0,32] x [0,16]`
//! (grid units, `y` along the leg).

use std::fmt::Write as _;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const X_RANGE: f64 = 16.0;
pub const Y_RANGE: f64 = 32.0;
pub const Z_RANGE: f64 = 16.0;

pub const SPLINES_PER_GENOME: RangeInclusive<usize> = 5..=10;
pub const POINTS_PER_SPLINE: RangeInclusive<usize> = 3..=8;
pub const THICKNESS: RangeInclusive<u8> = 1..=3;

/// Version tag written into every genome file.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ControlPoint {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    /// Clamp every coordinate into its allowed range.
    pub fn clamped(self) -> Self {
        Self {
            x: self.x.clamp(0.0, X_RANGE),
            y: self.y.clamp(0.0, Y_RANGE),
            z: self.z.clamp(0.0, Z_RANGE),
        }
    }

    pub fn in_bounds(&self) -> bool {
        (0.0..=X_RANGE).contains(&self.x)
            && (0.0..=Y_RANGE).contains(&self.y)
            && (0.0..=Z_RANGE).contains(&self.z)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub(crate) fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            x: rng.random_range(0.0..=X_RANGE),
            y: rng.random_range(0.0..=Y_RANGE),
            z: rng.random_range(0.0..=Z_RANGE),
        }
    }
}

/// One Bezier curve of the bundle together with its voxel thickness.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierSpline {
    pub(crate) control_points: Vec<ControlPoint>,
    pub(crate) thickness: u8,
}

impl BezierSpline {
    pub fn new(control_points: Vec<ControlPoint>, thickness: u8) -> Result<Self> {
        let spline = Self {
            control_points,
            thickness,
        };
        spline.check("spline")?;
        Ok(spline)
    }

    pub fn control_points(&self) -> &[ControlPoint] {
        &self.control_points
    }

    pub fn thickness(&self) -> u8 {
        self.thickness
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let n = rng.random_range(POINTS_PER_SPLINE);
        let control_points = (0..n).map(|_| ControlPoint::random(rng)).collect();
        Self {
            control_points,
            thickness: rng.random_range(THICKNESS),
        }
    }

    /// Point on the curve at parameter `t`; errors when `t` leaves `[0, 1]`.
    pub fn evaluate(&self, t: f64) -> Result<[f64; 3]> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain {
                name: "t",
                value: t,
                min: 0.0,
                max: 1.0,
            });
        }
        Ok(de_casteljau(&self.control_points, t))
    }

    /// `n` uniformly spaced samples including both endpoints.
    pub fn sample(&self, n: usize) -> Vec<[f64; 3]> {
        sample_curve(&self.control_points, n)
    }

    fn check(&self, field: &str) -> Result<()> {
        if !THICKNESS.contains(&self.thickness) {
            return Err(Error::Parse(format!(
                "{field}.thickness out of range: {} not in {}..={}",
                self.thickness,
                THICKNESS.start(),
                THICKNESS.end()
            )));
        }
        let n = self.control_points.len();
        if !POINTS_PER_SPLINE.contains(&n) {
            return Err(Error::Parse(format!(
                "{field}.control_points count out of range: {n} not in {}..={}",
                POINTS_PER_SPLINE.start(),
                POINTS_PER_SPLINE.end()
            )));
        }
        for (i, p) in self.control_points.iter().enumerate() {
            if !p.in_bounds() {
                return Err(Error::Parse(format!(
                    "{field}.control_points[{i}] out of range: ({}, {}, {})",
                    p.x, p.y, p.z
                )));
            }
        }
        Ok(())
    }
}

/// Evaluates a Bezier curve by repeated linear interpolation.
pub(crate) fn de_casteljau(points: &[ControlPoint], t: f64) -> [f64; 3] {
    let mut work: Vec<[f64; 3]> = points.iter().map(ControlPoint::as_array).collect();
    for level in (1..work.len()).rev() {
        for i in 0..level {
            let (a, b) = (work[i], work[i + 1]);
            work[i] = [
                a[0] + (b[0] - a[0]) * t,
                a[1] + (b[1] - a[1]) * t,
                a[2] + (b[2] - a[2]) * t,
            ];
        }
    }
    work[0]
}

pub(crate) fn sample_curve(points: &[ControlPoint], n: usize) -> Vec<[f64; 3]> {
    match n {
        0 => Vec::new(),
        1 => vec![de_casteljau(points, 0.0)],
        _ => (0..n)
            .map(|i| de_casteljau(points, i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Leg genotype: 5 to 10 thickened Bezier curves.
#[derive(Debug, Clone, PartialEq)]
pub struct LegGenome {
    pub id: u64,
    /// Ids of the parents this genome was bred from; empty for random genomes.
    pub parents: Vec<u64>,
    pub(crate) splines: Vec<BezierSpline>,
}

impl LegGenome {
    pub fn new(id: u64, splines: Vec<BezierSpline>) -> Result<Self> {
        let genome = Self {
            id,
            parents: Vec::new(),
            splines,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn splines(&self) -> &[BezierSpline] {
        &self.splines
    }

    /// Uniform draw over every bounded quantity of the encoding.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, id: u64) -> Self {
        let n = rng.random_range(SPLINES_PER_GENOME);
        Self {
            id,
            parents: Vec::new(),
            splines: (0..n).map(|_| BezierSpline::random(rng)).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.splines.len();
        if !SPLINES_PER_GENOME.contains(&n) {
            return Err(Error::Parse(format!(
                "splines count out of range: {n} not in {}..={}",
                SPLINES_PER_GENOME.start(),
                SPLINES_PER_GENOME.end()
            )));
        }
        for (i, s) in self.splines.iter().enumerate() {
            s.check(&format!("splines[{i}]"))?;
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn to_text(&self) -> String {
        let record = GenomeRecord {
            version: FORMAT_VERSION,
            id: self.id,
            parents: self.parents.clone(),
            splines: self
                .splines
                .iter()
                .map(|s| SplineRecord {
                    thickness: i64::from(s.thickness),
                    control_points: s.control_points.iter().map(ControlPoint::as_array).collect(),
                })
                .collect(),
        };
        // Header comment for people opening the file by hand.
        let mut out = String::new();
        let _ = writeln!(out, "# legevo genome");
        out.push_str(&toml::to_string(&record).expect("genome record serializes"));
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let record: GenomeRecord =
            toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))?;
        if record.version != FORMAT_VERSION {
            return Err(Error::Parse(format!(
                "version unsupported: {} (expected {FORMAT_VERSION})",
                record.version
            )));
        }
        let mut splines = Vec::with_capacity(record.splines.len());
        for (i, s) in record.splines.into_iter().enumerate() {
            let thickness = u8::try_from(s.thickness)
                .ok()
                .filter(|t| THICKNESS.contains(t))
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "splines[{i}].thickness out of range: {} not in {}..={}",
                        s.thickness,
                        THICKNESS.start(),
                        THICKNESS.end()
                    ))
                })?;
            let control_points = s
                .control_points
                .into_iter()
                .map(|[x, y, z]| ControlPoint::new(x, y, z))
                .collect();
            splines.push(BezierSpline {
                control_points,
                thickness,
            });
        }
        let genome = Self {
            id: record.id,
            parents: record.parents,
            splines,
        };
        genome.validate()?;
        Ok(genome)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenomeRecord {
    version: u32,
    id: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    parents: Vec<u64>,
    splines: Vec<SplineRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplineRecord {
    thickness: i64,
    control_points: Vec<[f64; 3]>,
}
