use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Joint angles (radians) or joint rates (rad/s), coxa / femur / tibia.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointAngles {
    pub coxa: f64,
    pub femur: f64,
    pub tibia: f64,
}

impl JointAngles {
    pub const fn new(coxa: f64, femur: f64, tibia: f64) -> Self {
        Self { coxa, femur, tibia }
    }

    pub fn scaled(self, s: f64) -> Self {
        Self::new(self.coxa * s, self.femur * s, self.tibia * s)
    }
}

/// One commanded stride.
///
/// The coxa sweeps linearly from `+amplitude` to `-amplitude`. The femur
/// starts elevated, lowers to neutral at midstride and rises again; the tibia
/// mirrors the femur with opposite sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct JointTrajectory {
    pub n_steps: usize,
    /// Step length in seconds.
    pub dt: f64,
    pub coxa_amplitude_deg: f64,
    pub femur_amplitude_deg: f64,
    pub tibia_amplitude_deg: f64,
}

impl Default for JointTrajectory {
    fn default() -> Self {
        Self {
            n_steps: 3000,
            dt: 0.001,
            coxa_amplitude_deg: 30.0,
            femur_amplitude_deg: 30.0,
            tibia_amplitude_deg: 30.0,
        }
    }
}

impl JointTrajectory {
    pub fn duration(&self) -> f64 {
        self.n_steps as f64 * self.dt
    }

    fn phase(&self, step: usize) -> Result<f64> {
        if step > self.n_steps {
            return Err(Error::Domain {
                name: "step",
                value: step as f64,
                min: 0.0,
                max: self.n_steps as f64,
            });
        }
        Ok(step as f64 / self.n_steps as f64)
    }

    pub fn angles_at(&self, step: usize) -> Result<JointAngles> {
        let s = self.phase(step)?;
        let swing = 1.0 - 2.0 * s;
        Ok(JointAngles::new(
            self.coxa_amplitude_deg.to_radians() * swing,
            self.femur_amplitude_deg.to_radians() * swing.abs(),
            -self.tibia_amplitude_deg.to_radians() * swing.abs(),
        ))
    }

    /// Joint rates at `step`; at the midstride kink the rising half applies.
    pub fn rates_at(&self, step: usize) -> Result<JointAngles> {
        let s = self.phase(step)?;
        let t = self.duration();
        let descending = if s < 0.5 { -1.0 } else { 1.0 };
        Ok(JointAngles::new(
            -2.0 * self.coxa_amplitude_deg.to_radians() / t,
            descending * 2.0 * self.femur_amplitude_deg.to_radians() / t,
            -descending * 2.0 * self.tibia_amplitude_deg.to_radians() / t,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(a: JointAngles) -> [f64; 3] {
        [a.coxa.to_degrees(), a.femur.to_degrees(), a.tibia.to_degrees()]
    }

    fn close(a: [f64; 3], b: [f64; 3]) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() < 1e-9)
    }

    #[test]
    fn profile_endpoints_and_midpoint() {
        let t = JointTrajectory::default();
        assert!(close(deg(t.angles_at(0).unwrap()), [30.0, 30.0, -30.0]));
        assert!(close(deg(t.angles_at(1500).unwrap()), [0.0, 0.0, 0.0]));
        assert!(close(deg(t.angles_at(3000).unwrap()), [-30.0, 30.0, -30.0]));
        assert!(close(deg(t.angles_at(750).unwrap()), [15.0, 15.0, -15.0]));
    }

    #[test]
    fn out_of_range_step() {
        let t = JointTrajectory::default();
        assert!(matches!(t.angles_at(3001), Err(Error::Domain { .. })));
        assert!(t.rates_at(3001).is_err());
    }

    #[test]
    fn rates_match_finite_differences() {
        let t = JointTrajectory::default();
        for step in [10, 700, 1499, 1500, 2200, 2999] {
            let a = t.angles_at(step).unwrap();
            let b = t.angles_at(step + 1).unwrap();
            let r = t.rates_at(step).unwrap();
            let fd = [(b.coxa - a.coxa) / t.dt, (b.femur - a.femur) / t.dt, (b.tibia - a.tibia) / t.dt];
            assert!(close([r.coxa, r.femur, r.tibia], fd), "step {step}");
        }
    }
}
