//! The JSON run-configuration file: a strict schema over
//! [`ExplorationConfig`] whose errors name the offending key.

use std::collections::BTreeMap;
use std::fmt;

use regime_scout::dynamics::{Axis, Horizon, SystemKind, SystemSpec};
use regime_scout::explorer::{ExplorationConfig, GpSettings, Sampling, StopRule};
use regime_scout::{ClusterParams, EmbeddingConfig};
use serde::{Deserialize, Serialize};

/// A configuration problem located by its key path, e.g.
/// `system.free_axes[0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl fmt::Display) -> Self {
        ConfigError {
            path: path.into(),
            message: message.to_string(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub system: SystemSection,
    #[serde(default)]
    pub embedding: EmbeddingSection,
    pub cluster: ClusterSection,
    #[serde(default)]
    pub gp: GpSection,
    pub stop: StopSection,
    #[serde(default)]
    pub sampling: SamplingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub kind: SystemKind,
    #[serde(default)]
    pub coefficients: BTreeMap<String, f64>,
    #[serde(default)]
    pub ics: BTreeMap<String, f64>,
    pub free_axes: Vec<AxisSection>,
    /// Fixed termination time; exclusive with `forcing_periods`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<f64>,
    /// Horizon in forcing periods (duffing only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing_periods: Option<f64>,
    pub n_t: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSection {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EmbeddingSection {
    pub n_f: usize,
    pub transient_fraction: f64,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        let d = EmbeddingConfig::default();
        EmbeddingSection {
            n_f: d.n_f,
            transient_fraction: d.transient_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSection {
    pub eps: f64,
    pub min_pts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GpSection {
    pub sigma_n: [f64; 2],
    pub length_scale: [f64; 2],
    pub sigma_l_min: f64,
    pub sigma_l_max: Option<f64>,
    pub zeta_ei: f64,
    pub n_starts: usize,
    pub refit_every: usize,
}

impl Default for GpSection {
    fn default() -> Self {
        let d = GpSettings::default();
        GpSection {
            sigma_n: [d.sigma_n.0, d.sigma_n.1],
            length_scale: [d.length_scale.0, d.length_scale.1],
            sigma_l_min: d.sigma_l_min,
            sigma_l_max: d.sigma_l_max,
            zeta_ei: d.zeta_ei,
            n_starts: d.n_starts,
            refit_every: d.refit_every,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(default)]
    pub zeta_stop: Option<f64>,
    #[serde(default)]
    pub t_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSection {
    pub budget: usize,
    pub initial_fraction: f64,
    pub n_candidates: usize,
    pub grid_resolution: usize,
    pub seed: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        let d = Sampling::default();
        SamplingSection {
            budget: d.budget,
            initial_fraction: d.initial_fraction,
            n_candidates: d.n_candidates,
            grid_resolution: d.grid_resolution,
            seed: d.seed,
        }
    }
}

/// Parse a configuration document; unknown keys are rejected.
pub fn parse(text: &str) -> Result<RunConfigFile, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ConfigError::at(path, e.into_inner())
    })
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfigFile {
    /// Check every field and build the exploration settings.
    pub fn to_exploration(&self) -> Result<ExplorationConfig, ConfigError> {
        let system = self.system_spec()?;
        let e = &self.embedding;
        let embedding = EmbeddingConfig::new(e.n_f, e.transient_fraction).map_err(|err| ConfigError::at("embedding", err))?;
        let retained = embedding.retained(system.n_t);
        if retained < embedding.n_f {
            return Err(ConfigError::at(
                "embedding.n_f",
                format!(
                    "{} samples remain after the transient cut, fewer than n_f = {}",
                    retained, embedding.n_f
                ),
            ));
        }
        positive("cluster.eps", self.cluster.eps)?;
        if self.cluster.min_pts == 0 {
            return Err(ConfigError::at("cluster.min_pts", "must be at least 1"));
        }
        let cluster = ClusterParams::new(self.cluster.eps, self.cluster.min_pts).map_err(|err| ConfigError::at("cluster", err))?;

        let g = &self.gp;
        for (name, [lo, hi]) in [("gp.sigma_n", g.sigma_n), ("gp.length_scale", g.length_scale)] {
            positive(name, lo)?;
            positive(name, hi)?;
            if lo > hi {
                return Err(ConfigError::at(name, format!("lower bound {lo} exceeds upper bound {hi}")));
            }
        }
        positive("gp.sigma_l_min", g.sigma_l_min)?;
        if let Some(hi) = g.sigma_l_max {
            positive("gp.sigma_l_max", hi)?;
            if hi < g.sigma_l_min {
                return Err(ConfigError::at("gp.sigma_l_max", "must not be below sigma_l_min"));
            }
        }
        if !(g.zeta_ei >= 0.0 && g.zeta_ei.is_finite()) {
            return Err(ConfigError::at("gp.zeta_ei", "must be finite and non-negative"));
        }
        if g.n_starts == 0 {
            return Err(ConfigError::at("gp.n_starts", "must be at least 1"));
        }
        let gp = GpSettings {
            sigma_n: (g.sigma_n[0], g.sigma_n[1]),
            length_scale: (g.length_scale[0], g.length_scale[1]),
            sigma_l_min: g.sigma_l_min,
            sigma_l_max: g.sigma_l_max,
            zeta_ei: g.zeta_ei,
            n_starts: g.n_starts,
            refit_every: g.refit_every,
        };

        let stop = StopRule {
            zeta_stop: self.stop.zeta_stop,
            t_max: self.stop.t_max,
        };
        if stop.zeta_stop.is_none() && stop.t_max.is_none() {
            return Err(ConfigError::at("stop", "set zeta_stop, t_max or both"));
        }
        if let Some(z) = stop.zeta_stop {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(ConfigError::at("stop.zeta_stop", "must be finite and non-negative"));
            }
        }

        let s = &self.sampling;
        if !(s.initial_fraction > 0.0 && s.initial_fraction < 1.0) {
            return Err(ConfigError::at("sampling.initial_fraction", "must lie strictly between 0 and 1"));
        }
        if s.budget < cluster.min_pts + 2 {
            return Err(ConfigError::at(
                "sampling.budget",
                format!("must be at least min_pts + 2 = {}", cluster.min_pts + 2),
            ));
        }
        if s.n_candidates == 0 {
            return Err(ConfigError::at("sampling.n_candidates", "must be at least 1"));
        }
        if s.grid_resolution < 2 {
            return Err(ConfigError::at("sampling.grid_resolution", "must be at least 2"));
        }
        let sampling = Sampling {
            budget: s.budget,
            initial_fraction: s.initial_fraction,
            n_candidates: s.n_candidates,
            grid_resolution: s.grid_resolution,
            seed: s.seed,
        };
        let config = ExplorationConfig {
            system,
            embedding,
            cluster,
            gp,
            stop,
            sampling,
        };
        config.validate().map_err(|err| ConfigError::at("", err))?;
        Ok(config)
    }

    /// The dynamical system alone (enough for `simulate` and `oracle`).
    pub fn system_spec(&self) -> Result<SystemSpec, ConfigError> {
        let s = &self.system;
        let mut axes = Vec::with_capacity(s.free_axes.len());
        if s.free_axes.is_empty() {
            return Err(ConfigError::at("system.free_axes", "at least one free axis is required"));
        }
        for (i, a) in s.free_axes.iter().enumerate() {
            let path = format!("system.free_axes[{i}]");
            if !(a.min.is_finite() && a.max.is_finite()) {
                return Err(ConfigError::at(path, "bounds must be finite"));
            }
            if a.min >= a.max {
                return Err(ConfigError::at(path, format!("min {} must be below max {}", a.min, a.max)));
            }
            axes.push(Axis::new(a.name.clone(), a.min, a.max));
        }
        let horizon = match (s.t_f, s.forcing_periods) {
            (Some(t), None) => {
                positive("system.t_f", t)?;
                Horizon::Fixed(t)
            }
            (None, Some(p)) => {
                positive("system.forcing_periods", p)?;
                Horizon::ForcingPeriods(p)
            }
            (Some(_), Some(_)) => {
                return Err(ConfigError::at("system", "give either t_f or forcing_periods, not both"));
            }
            (None, None) => return Err(ConfigError::at("system.t_f", "missing (or give forcing_periods)")),
        };
        if let Some(h) = s.max_step {
            positive("system.max_step", h)?;
        }
        let spec = SystemSpec {
            kind: s.kind,
            coefficients: s.coefficients.clone(),
            initial_conditions: s.ics.clone(),
            free_axes: axes,
            horizon,
            n_t: s.n_t,
            max_step: s.max_step.unwrap_or_else(|| s.kind.default_max_step()),
        };
        spec.validate().map_err(|err| ConfigError::at("system", err))?;
        Ok(spec)
    }
}

/// Bundled benchmark configurations.
pub mod presets {
    pub const PENDULUM: &str = include_str!("../presets/pendulum.json");
    pub const LORENZ: &str = include_str!("../presets/lorenz.json");
    pub const DUFFING: &str = include_str!("../presets/duffing.json");

    pub fn by_name(name: &str) -> Option<&'static str> {
        match name {
            "pendulum" => Some(PENDULUM),
            "lorenz" => Some(LORENZ),
            "duffing" => Some(DUFFING),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for text in [presets::PENDULUM, presets::LORENZ, presets::DUFFING] {
            parse(text).unwrap().to_exploration().unwrap();
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let text = presets::PENDULUM.replace("\"n_t\"", "\"n_tt\"");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("system"), "{err}");
        assert!(err.to_string().contains("n_tt"), "{err}");
    }

    #[test]
    fn inverted_axis_is_named() {
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.system.free_axes[0].min = 5.0;
        let err = cfg.to_exploration().unwrap_err();
        assert_eq!(err.path, "system.free_axes[0]");
    }

    #[test]
    fn horizon_needs_exactly_one_form() {
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.system.forcing_periods = Some(3.0);
        assert_eq!(cfg.to_exploration().unwrap_err().path, "system");
        cfg.system.t_f = None;
        // pendulum has no forcing
        assert_eq!(cfg.to_exploration().unwrap_err().path, "system");
        cfg.system.forcing_periods = None;
        assert_eq!(cfg.to_exploration().unwrap_err().path, "system.t_f");
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = parse(presets::DUFFING).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
    }

    #[test]
    fn loop_settings_are_checked() {
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.sampling.initial_fraction = 0.0;
        assert_eq!(cfg.to_exploration().unwrap_err().path, "sampling.initial_fraction");
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.stop = StopSection::default();
        assert_eq!(cfg.to_exploration().unwrap_err().path, "stop");
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.gp.sigma_n = [0.5, 0.1];
        assert_eq!(cfg.to_exploration().unwrap_err().path, "gp.sigma_n");
        let mut cfg = parse(presets::PENDULUM).unwrap();
        cfg.embedding.n_f = 4096;
        assert_eq!(cfg.to_exploration().unwrap_err().path, "embedding.n_f");
    }
}
