//! Resistive-force surrogates for the three media.
//!
//! Every law opposes the velocity of an immersed voxel and scales with the
//! face area it presents to the motion:
//!
//! * soil: `k * depth * A + c * A * |v|`
//! * gravel: `k * depth * A`
//! * fluid: `0.5 * rho * C_d * A * |v|^2`
//!
//! Soil and gravel also bear the leg: sinkage stops where the downward-facing
//! immersed area, times the bearing modulus and depth, carries the nominal leg
//! load. The fluid bears nothing.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::kinematics::Vec3;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvironmentKind {
    Soil,
    Gravel,
    Fluid,
}

impl EnvironmentKind {
    pub const ALL: [EnvironmentKind; 3] = [Self::Soil, Self::Gravel, Self::Fluid];

    pub fn name(self) -> &'static str {
        match self {
            Self::Soil => "soil",
            Self::Gravel => "gravel",
            Self::Fluid => "fluid",
        }
    }
}

impl fmt::Display for EnvironmentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnvironmentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "soil" => Ok(Self::Soil),
            "gravel" => Ok(Self::Gravel),
            "fluid" => Ok(Self::Fluid),
            other => Err(Error::Config(format!(
                "unknown environment {other:?} (expected soil, gravel or fluid)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoilParams {
    /// Pressure-sinkage resistance, N per (m depth * m^2).
    pub k: f64,
    /// Viscous resistance, N per (m^2 * m/s).
    pub c: f64,
    /// Bearing modulus, N per (m depth * m^2) of downward-facing area.
    pub bearing_modulus: f64,
}

impl Default for SoilParams {
    fn default() -> Self {
        Self {
            k: 5.0e5,
            c: 2.0e5,
            bearing_modulus: 5.0e7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GravelParams {
    pub k: f64,
    pub bearing_modulus: f64,
}

impl Default for GravelParams {
    fn default() -> Self {
        Self {
            k: 2.0e5,
            bearing_modulus: 1.0e7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluidParams {
    /// kg/m^3
    pub density: f64,
    pub drag_coefficient: f64,
}

impl Default for FluidParams {
    fn default() -> Self {
        Self {
            density: 1000.0,
            drag_coefficient: 1.0,
        }
    }
}

/// Parameters shared by all media plus one parameter block per medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentParams {
    /// Height of the medium surface above the container floor, m.
    pub medium_depth: f64,
    /// Load carried by the leg when the medium supports it, N.
    pub support_load: f64,
    /// Speeds below this are treated as rest, m/s.
    pub v_eps: f64,
    pub soil: SoilParams,
    pub gravel: GravelParams,
    pub fluid: FluidParams,
}

impl Default for EnvironmentParams {
    fn default() -> Self {
        Self {
            medium_depth: 0.07,
            support_load: 10.0,
            v_eps: 1e-6,
            soil: SoilParams::default(),
            gravel: GravelParams::default(),
            fluid: FluidParams::default(),
        }
    }
}

impl EnvironmentParams {
    pub fn model(&self, kind: EnvironmentKind) -> EnvironmentModel {
        let base = EnvironmentModel {
            kind,
            pressure: 0.0,
            viscous: 0.0,
            quadratic: 0.0,
            bearing_modulus: 0.0,
            support_load: self.support_load,
            medium_depth: self.medium_depth,
            v_eps: self.v_eps,
        };
        match kind {
            EnvironmentKind::Soil => EnvironmentModel {
                pressure: self.soil.k,
                viscous: self.soil.c,
                bearing_modulus: self.soil.bearing_modulus,
                ..base
            },
            EnvironmentKind::Gravel => EnvironmentModel {
                pressure: self.gravel.k,
                bearing_modulus: self.gravel.bearing_modulus,
                ..base
            },
            EnvironmentKind::Fluid => EnvironmentModel {
                quadratic: 0.5 * self.fluid.density * self.fluid.drag_coefficient,
                ..base
            },
        }
    }
}

/// Resolved force law for one medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvironmentModel {
    pub kind: EnvironmentKind,
    pub pressure: f64,
    pub viscous: f64,
    /// `0.5 * rho * C_d`
    pub quadratic: f64,
    pub bearing_modulus: f64,
    pub support_load: f64,
    pub medium_depth: f64,
    pub v_eps: f64,
}

impl EnvironmentModel {
    pub fn new(kind: EnvironmentKind) -> Self {
        EnvironmentParams::default().model(kind)
    }

    /// All resistance coefficients multiplied by `c`; bearing is unchanged.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            pressure: self.pressure * c,
            viscous: self.viscous * c,
            quadratic: self.quadratic * c,
            ..*self
        }
    }

    pub fn bears_load(&self) -> bool {
        self.bearing_modulus > 0.0 && self.support_load > 0.0
    }

    /// Force on a voxel presenting `area` m^2 to its motion.
    #[inline]
    pub fn medium_force(&self, position: &Vec3, velocity: &Vec3, area: f64) -> Vec3 {
        let depth = self.medium_depth - position.z;
        if depth <= 0.0 {
            return Vec3::zeros();
        }
        let speed = velocity.norm();
        if speed < self.v_eps {
            return Vec3::zeros();
        }
        let magnitude = (self.pressure * depth + self.viscous * speed + self.quadratic * speed * speed) * area;
        velocity * (-magnitude / speed)
    }

    /// Upward shift of the leg at which the bearing reaction of the immersed
    /// downward-facing area equals the support load. `contacts` holds
    /// `(depth, downward area)` pairs with positive depth. Zero when the medium
    /// cannot carry the load at the commanded depth.
    pub fn support_lift(&self, contacts: &mut [(f64, f64)]) -> f64 {
        if !self.bears_load() || contacts.is_empty() {
            return 0.0;
        }
        let target = self.support_load / self.bearing_modulus;
        let capacity: f64 = contacts.iter().map(|(d, a)| d * a).sum();
        if capacity <= target {
            return 0.0;
        }
        contacts.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));
        // Deepest m contacts active: sum a_i (d_i - h) = target.
        let (mut sum_ad, mut sum_a) = (0.0, 0.0);
        for m in 0..contacts.len() {
            sum_ad += contacts[m].0 * contacts[m].1;
            sum_a += contacts[m].1;
            if sum_a <= 0.0 {
                continue;
            }
            let h = (sum_ad - target) / sum_a;
            let next = contacts.get(m + 1).map_or(0.0, |c| c.0);
            if h >= next {
                return h.max(0.0);
            }
        }
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fluid_drag_substitution() {
        let env = EnvironmentModel::new(EnvironmentKind::Fluid);
        let f = env.medium_force(&Vec3::new(0.0, 0.0, 0.01), &Vec3::new(1.0, 0.0, 0.0), 25e-6);
        assert!((f.norm() - 0.0125).abs() < 1e-15);
        assert!(f.x < 0.0);
    }

    #[test]
    fn no_force_above_surface_or_at_rest() {
        for kind in EnvironmentKind::ALL {
            let env = EnvironmentModel::new(kind);
            let above = env.medium_force(&Vec3::new(0.1, 0.0, 0.08), &Vec3::new(0.3, 0.1, -0.2), 25e-6);
            assert_eq!(above, Vec3::zeros());
            let rest = env.medium_force(&Vec3::new(0.1, 0.0, 0.01), &Vec3::zeros(), 25e-6);
            assert_eq!(rest, Vec3::zeros());
        }
    }

    #[test]
    fn soil_and_gravel_laws() {
        let p = Vec3::new(0.0, 0.0, 0.05); // 2 cm deep
        let v = Vec3::new(0.0, 0.5, 0.0);
        let a = 25e-6;
        let soil = EnvironmentModel::new(EnvironmentKind::Soil);
        let expected = (soil.pressure * 0.02 + soil.viscous * 0.5) * a;
        assert!((soil.medium_force(&p, &v, a).norm() - expected).abs() < 1e-12);
        let gravel = EnvironmentModel::new(EnvironmentKind::Gravel);
        let slow = gravel.medium_force(&p, &(v * 0.1), a).norm();
        let fast = gravel.medium_force(&p, &v, a).norm();
        assert!((slow - fast).abs() < 1e-15);
        assert!((fast - gravel.pressure * 0.02 * a).abs() < 1e-12);
    }

    #[test]
    fn support_lift_balances_load() {
        let env = EnvironmentModel::new(EnvironmentKind::Gravel);
        let a = 25e-6;
        let mut contacts: Vec<(f64, f64)> = (0..256).map(|i| (0.03 + 1e-5 * i as f64, a)).collect();
        let h = env.support_lift(&mut contacts);
        assert!(h > 0.0);
        let reaction: f64 = contacts
            .iter()
            .map(|(d, a)| env.bearing_modulus * (d - h).max(0.0) * a)
            .sum();
        assert!((reaction - env.support_load).abs() < 1e-9, "{reaction}");
        // a single shallow voxel cannot carry the load in gravel
        let mut single = vec![(0.03, a)];
        assert_eq!(env.support_lift(&mut single), 0.0);
        // fluid never bears
        let fluid = EnvironmentModel::new(EnvironmentKind::Fluid);
        assert_eq!(fluid.support_lift(&mut contacts), 0.0);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("Gravel".parse::<EnvironmentKind>().unwrap(), EnvironmentKind::Gravel);
        assert!("lava".parse::<EnvironmentKind>().is_err());
    }
}
