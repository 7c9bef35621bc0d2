use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ga::GaConfig;
use crate::sim::{EnvironmentKind, EnvironmentParams, Evaluator, SimConfig};
use crate::structcheck::StructConfig;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LEGEVO_OUTPUT_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Each listed environment gets `repeats` independent runs.
    pub environments: Vec<EnvironmentKind>,
    pub repeats: usize,
    /// Worker threads for evaluation; 0 uses every available core.
    pub concurrency: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            environments: EnvironmentKind::ALL.to_vec(),
            repeats: 10,
            concurrency: 0,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExportConfig {
    /// Write OBJ and STL files for the final population.
    pub meshes: bool,
    pub smooth_iterations: usize,
    pub smooth_lambda: f64,
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            meshes: true,
            smooth_iterations: 0,
            smooth_lambda: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    pub ga: GaConfig,
    pub sim: SimConfig,
    pub structure: StructConfig,
    pub environment: EnvironmentParams,
    pub export: ExportConfig,
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let ex = &self.experiment;
        check(!ex.environments.is_empty(), || "experiment.environments is empty".into())?;
        for (i, e) in ex.environments.iter().enumerate() {
            check(!ex.environments[..i].contains(e), || format!("environment {e} listed twice"))?;
        }
        check(ex.repeats > 0, || "experiment.repeats must be positive".into())?;
        self.ga.validate()?;
        check(self.ga.master_seed <= i64::MAX as u64, || "ga.master_seed must fit in a signed 64-bit integer".into())?;

        let t = &self.sim.trajectory;
        check(t.n_steps > 0, || "sim.trajectory.n_steps must be positive".into())?;
        check(t.dt > 0.0, || "sim.trajectory.dt must be positive".into())?;
        let c = &self.sim.chain;
        check(c.coxa_link > 0.0 && c.femur_link > 0.0, || "sim.chain link lengths must be positive".into())?;
        check(self.sim.samples_per_spline >= 2, || "sim.samples_per_spline must be at least 2".into())?;

        check(self.structure.load_newtons >= 0.0, || "structure.load_newtons must be non-negative".into())?;
        check(self.structure.sigma_max > 0.0, || "structure.sigma_max must be positive".into())?;

        let env = &self.environment;
        check(env.medium_depth > 0.0, || "environment.medium_depth must be positive".into())?;
        let coefficients = [
            ("environment.support_load", env.support_load),
            ("environment.v_eps", env.v_eps),
            ("environment.soil.k", env.soil.k),
            ("environment.soil.c", env.soil.c),
            ("environment.soil.bearing_modulus", env.soil.bearing_modulus),
            ("environment.gravel.k", env.gravel.k),
            ("environment.gravel.bearing_modulus", env.gravel.bearing_modulus),
            ("environment.fluid.density", env.fluid.density),
            ("environment.fluid.drag_coefficient", env.fluid.drag_coefficient),
        ];
        for (name, v) in coefficients {
            check(v.is_finite() && v >= 0.0, || format!("{name} must be a non-negative number, got {v}"))?;
        }
        check((0.0..=1.0).contains(&self.export.smooth_lambda), || {
            "export.smooth_lambda must lie in [0, 1]".into()
        })?;
        Ok(())
    }

    /// Explicit override, then the config file, then the environment
    /// variable, then `./runs`.
    pub fn output_dir(&self, override_dir: Option<&Path>) -> PathBuf {
        if let Some(p) = override_dir {
            return p.to_path_buf();
        }
        if let Some(p) = &self.experiment.output_dir {
            return p.clone();
        }
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(p) if !p.is_empty() => PathBuf::from(p),
            _ => PathBuf::from("runs"),
        }
    }

    pub fn threads(&self) -> usize {
        match self.experiment.concurrency {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            n => n,
        }
    }

    pub fn evaluator(&self, kind: EnvironmentKind) -> Evaluator {
        Evaluator::new(self.sim, self.structure, &self.environment, kind)
    }
}
