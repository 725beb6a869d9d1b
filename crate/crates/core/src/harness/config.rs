use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::full_system::{validate_alpha, validate_eps, FullParams, DEFAULT_R};
use crate::geometry::{Geometry, Grid1D};
use crate::noise::{master_step, CovarianceSpec, NoiseModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Converge,
    EnergyAudit,
    OuCheck,
    SplitCheck,
    BoundCheck,
    Simulate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Converge,
        Experiment::EnergyAudit,
        Experiment::OuCheck,
        Experiment::SplitCheck,
        Experiment::BoundCheck,
        Experiment::Simulate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Converge => "converge",
            Experiment::EnergyAudit => "energy-audit",
            Experiment::OuCheck => "ou-check",
            Experiment::SplitCheck => "split-check",
            Experiment::BoundCheck => "bound-check",
            Experiment::Simulate => "simulate",
        }
    }

    pub fn default_replicas(self) -> usize {
        match self {
            Experiment::Converge => 100,
            Experiment::OuCheck => 2000,
            Experiment::EnergyAudit | Experiment::BoundCheck => 500,
            Experiment::SplitCheck | Experiment::Simulate => 1,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub c: f64,
    pub gamma: f64,
    pub modes: usize,
    pub boundary_left: f64,
    pub boundary_right: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 2.0,
            modes: 50,
            boundary_left: 0.5,
            boundary_right: 0.5,
        }
    }
}

impl NoiseConfig {
    pub fn interior(&self) -> CovarianceSpec {
        CovarianceSpec::Interior {
            c: self.c,
            gamma: self.gamma,
            modes: self.modes,
        }
    }

    pub fn boundary(&self) -> CovarianceSpec {
        CovarianceSpec::Boundary {
            left: self.boundary_left,
            right: self.boundary_right,
        }
    }

    /// Same spec with every eigenvalue zero.
    pub fn silenced(&self) -> Self {
        Self {
            c: 0.0,
            boundary_left: 0.0,
            boundary_right: 0.0,
            ..*self
        }
    }
}

/// One experiment run, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub alpha: f64,
    pub eps_ladder: Vec<f64>,
    pub n_interior: usize,
    /// Full system step is `eps / dt_full_factor`.
    pub dt_full_factor: f64,
    /// Step of the limit systems.
    pub dt_limit: f64,
    pub t_end: f64,
    /// Defaults per experiment when absent.
    pub replicas: Option<usize>,
    pub seed: u64,
    pub noise: NoiseConfig,
    pub r: f64,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            alpha: 0.5,
            eps_ladder: (2..=6).map(|k| 0.5f64.powi(k)).collect(),
            n_interior: 64,
            dt_full_factor: 10.0,
            dt_limit: 1e-3,
            t_end: 1.0,
            replicas: None,
            seed: 1,
            noise: NoiseConfig::default(),
            r: DEFAULT_R,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment: Some(experiment),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment
            .ok_or_else(|| Error::Config("missing key `experiment`".into()))
    }

    pub fn replicas(&self) -> Result<usize> {
        Ok(self.replicas.unwrap_or(self.experiment()?.default_replicas()))
    }

    pub fn validate(&self) -> Result<()> {
        validate_alpha(self.alpha)?;
        if self.eps_ladder.is_empty() {
            return Err(Error::Config("eps_ladder is empty".into()));
        }
        for &eps in &self.eps_ladder {
            validate_eps(eps)?;
        }
        if self.eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config(format!(
                "eps_ladder must be strictly decreasing, got {:?}",
                self.eps_ladder
            )));
        }
        if !(self.dt_full_factor >= 10.0 && self.dt_full_factor.is_finite()) {
            return Err(Error::param(
                "dt_full_factor",
                format!("must be at least 10, got {}", self.dt_full_factor),
            ));
        }
        if !(self.dt_limit > 0.0 && self.dt_limit.is_finite()) {
            return Err(Error::param("dt_limit", format!("must be positive, got {}", self.dt_limit)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::param("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if self.replicas == Some(0) {
            return Err(Error::param("replicas", "must be at least 1"));
        }
        for &eps in &self.eps_ladder {
            FullParams::new(eps, self.alpha, self.dt_full(eps), self.t_end)?.with_r(self.r)?;
        }
        Grid1D::new(self.n_interior)?;
        self.noise.interior().validate()?;
        self.noise.boundary().validate()?;
        if self.noise.modes > self.n_interior {
            return Err(Error::param(
                "noise.modes",
                format!("cannot exceed n_interior = {}, got {}", self.n_interior, self.noise.modes),
            ));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Ok(Geometry::new(Grid1D::new(self.n_interior)?))
    }

    pub fn dt_full(&self, eps: f64) -> f64 {
        eps / self.dt_full_factor
    }

    /// Noise model on the finest grid that every step in `dts` aggregates.
    pub fn noise_model(&self, dts: &[f64]) -> Result<NoiseModel> {
        self.noise_model_with(self.noise, dts)
    }

    pub fn noise_model_with(&self, noise: NoiseConfig, dts: &[f64]) -> Result<NoiseModel> {
        NoiseModel::new(
            Grid1D::new(self.n_interior)?,
            noise.interior(),
            noise.boundary(),
            master_step(dts)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_ladder() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.eps_ladder, vec![0.25, 0.125, 0.0625, 0.03125, 0.015625]);
        assert_eq!(cfg.n_interior, 64);
        assert_eq!(cfg.dt_full_factor, 10.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn parses_every_documented_key() {
        let text = r#"
            experiment = "ou-check"
            alpha = 2.0
            eps_ladder = [0.1]
            n_interior = 32
            dt_full_factor = 20
            dt_limit = 0.002
            t_end = 0.5
            replicas = 7
            seed = 99
            r = 0.04
            out_dir = "results"
            [noise]
            c = 0.5
            gamma = 3.0
            modes = 8
            boundary_left = 0.1
            boundary_right = 0.2
        "#;
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.experiment, Some(Experiment::OuCheck));
        assert_eq!(cfg.replicas().unwrap(), 7);
        assert_eq!(cfg.noise.modes, 8);
        assert_eq!(cfg.out_dir, PathBuf::from("results"));
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        for text in [
            "eps_ladder = [0.1, 0.2]",
            "eps_ladder = []",
            "eps_ladder = [0.6]",
            "alpha = 1.0",
            "alpha = 0.3",
            "replicas = 0",
            "dt_full_factor = 5",
            "n_interior = 4",
            "bogus = 1",
            "experiment = \"nope\"",
            "[noise]\nmodes = 100",
            "[noise]\ngamma = 1.0",
            "r = 0.2",
        ] {
            assert!(ExperimentConfig::from_toml(text).is_err(), "{text}");
        }
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
    }
}
