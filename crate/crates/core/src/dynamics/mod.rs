//! Benchmark dynamical systems, their fixed-step integrator, and the
//! analytic / brute-force oracles used to grade explorations.
//!
//! A [`SystemSpec`] binds every coefficient and initial condition of a system
//! exactly once: either to a fixed value or to one of the free axes of the
//! search box. A [`ParameterVector`] is a point in that box, and
//! [`simulate`] turns it into a uniformly sampled [`TimeSeries`].

mod integrator;
pub mod oracle;
mod systems;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use integrator::{integrate, rk4_step};
pub use oracle::{
    duffing_amplitude_oracle, duffing_frc, duffing_stable_amplitudes, lorenz_settles,
    oracle_label, pendulum_rotates, pendulum_separatrix, DuffingParams, OracleRegime,
    StableAmplitudes,
};
pub use systems::{simulate, simulate_states};

/// Magnitude beyond which a state is treated as divergent.
pub const BLOW_UP_THRESHOLD: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    /// `x'' + lambda x' + omega^2 sin(x) = 0`
    Pendulum,
    /// Classical Lorenz convection model with coefficients `s`, `b`, `rho`.
    Lorenz,
    /// Weakly forced, weakly damped hardening Duffing oscillator.
    Duffing,
    /// `x'' = -x`, used to check the integrator.
    Harmonic,
}

impl SystemKind {
    pub fn coefficient_names(self) -> &'static [&'static str] {
        match self {
            SystemKind::Pendulum => &["omega", "lambda"],
            SystemKind::Lorenz => &["s", "b", "rho"],
            SystemKind::Duffing => &["epsilon", "sigma", "force", "alpha", "lambda"],
            SystemKind::Harmonic => &[],
        }
    }

    pub fn initial_condition_names(self) -> &'static [&'static str] {
        match self {
            SystemKind::Lorenz => &["x0", "y0", "z0"],
            _ => &["x0", "v0"],
        }
    }

    /// Names of the full state vector.
    pub fn state_names(self) -> &'static [&'static str] {
        match self {
            SystemKind::Lorenz => &["x", "y", "z"],
            _ => &["x", "v"],
        }
    }

    /// Channels that make up the observed response. Second-order systems
    /// are observed through their displacement only.
    pub fn observed_channels(self) -> &'static [usize] {
        match self {
            SystemKind::Lorenz => &[0, 1, 2],
            _ => &[0],
        }
    }

    /// Default upper bound on the internal integration step.
    pub fn default_max_step(self) -> f64 {
        match self {
            SystemKind::Pendulum => 0.02,
            SystemKind::Lorenz => 0.005,
            SystemKind::Duffing => 0.1,
            SystemKind::Harmonic => f64::INFINITY,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Pendulum => "pendulum",
            SystemKind::Lorenz => "lorenz",
            SystemKind::Duffing => "duffing",
            SystemKind::Harmonic => "harmonic",
        }
    }
}

/// One free dimension of the search box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

impl Axis {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Axis {
            name: name.into(),
            lower,
            upper,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn validate(&self) -> Result<()> {
        if !self.lower.is_finite() || !self.upper.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "axis `{}` has non-finite bounds",
                self.name
            )));
        }
        if self.lower >= self.upper {
            return Err(Error::InvalidSpec(format!(
                "axis `{}` needs lower < upper, got [{}, {}]",
                self.name, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// The bounded search region: an ordered list of axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterBox {
    axes: Vec<Axis>,
}

impl ParameterBox {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidSpec("search box needs at least one axis".into()));
        }
        for axis in &axes {
            axis.validate()?;
        }
        Ok(ParameterBox { axes })
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, theta: &ParameterVector) -> bool {
        theta.len() == self.dim()
            && theta
                .iter()
                .zip(&self.axes)
                .all(|(&v, a)| v >= a.lower && v <= a.upper)
    }

    pub fn check(&self, theta: &ParameterVector) -> Result<()> {
        if theta.len() != self.dim() {
            return Err(Error::InvalidParameter(format!(
                "expected {} components, got {}",
                self.dim(),
                theta.len()
            )));
        }
        for (v, a) in theta.iter().zip(&self.axes) {
            if !(*v >= a.lower && *v <= a.upper) {
                return Err(Error::InvalidParameter(format!(
                    "{} = {} outside [{}, {}]",
                    a.name, v, a.lower, a.upper
                )));
            }
        }
        Ok(())
    }

    /// Map a point of the box to the unit hypercube.
    pub fn to_unit(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(&self.axes)
            .map(|(&v, a)| (v - a.lower) / a.width())
            .collect()
    }

    pub fn from_unit(&self, unit: &[f64]) -> ParameterVector {
        ParameterVector(
            unit.iter()
                .zip(&self.axes)
                .map(|(&u, a)| a.lower + u * a.width())
                .collect(),
        )
    }
}

/// A point of the search box, components aligned with the free axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn new(components: Vec<f64>) -> Self {
        ParameterVector(components)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for ParameterVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ParameterVector {
    fn from(v: Vec<f64>) -> Self {
        ParameterVector(v)
    }
}

/// Simulation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    /// A fixed termination time.
    Fixed(f64),
    /// A whole number of forcing periods `2 pi / (1 + epsilon sigma)`
    /// (Duffing only), so the forcing line lands on the same FFT bin for
    /// every detuning.
    ForcingPeriods(f64),
}

/// Everything needed to turn a parameter vector into a response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub kind: SystemKind,
    /// Coefficients held fixed during exploration.
    pub coefficients: BTreeMap<String, f64>,
    /// Initial conditions held fixed during exploration.
    pub initial_conditions: BTreeMap<String, f64>,
    pub free_axes: Vec<Axis>,
    pub horizon: Horizon,
    /// Number of output samples, including `t = 0` and `t = t_f`.
    pub n_t: usize,
    /// Upper bound on the internal RK4 step; each output interval is split
    /// into `ceil(dt / max_step)` equal substeps.
    pub max_step: f64,
}

/// Coefficients and initial conditions in the canonical order of
/// [`SystemKind::coefficient_names`] / [`SystemKind::initial_condition_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub coefficients: Vec<f64>,
    pub initial_conditions: Vec<f64>,
}

impl SystemSpec {
    pub fn validate(&self) -> Result<()> {
        let kind = self.kind;
        let coeff_names = kind.coefficient_names();
        let ic_names = kind.initial_condition_names();

        for name in self.coefficients.keys() {
            if !coeff_names.contains(&name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "{} has no coefficient `{}`",
                    kind.name(),
                    name
                )));
            }
        }
        for name in self.initial_conditions.keys() {
            if !ic_names.contains(&name.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "{} has no initial condition `{}`",
                    kind.name(),
                    name
                )));
            }
        }
        for (i, axis) in self.free_axes.iter().enumerate() {
            axis.validate()?;
            let name = axis.name.as_str();
            if !coeff_names.contains(&name) && !ic_names.contains(&name) {
                return Err(Error::InvalidSpec(format!(
                    "free axis `{}` names neither a coefficient nor an initial condition of {}",
                    name,
                    kind.name()
                )));
            }
            if self.free_axes[..i].iter().any(|a| a.name == axis.name) {
                return Err(Error::InvalidSpec(format!("free axis `{name}` is listed twice")));
            }
            if self.coefficients.contains_key(name) || self.initial_conditions.contains_key(name)
            {
                return Err(Error::InvalidSpec(format!(
                    "`{name}` is bound both as a fixed value and as a free axis"
                )));
            }
        }
        if self.free_axes.is_empty() {
            return Err(Error::InvalidSpec("at least one free axis is required".into()));
        }
        for name in coeff_names.iter().chain(ic_names) {
            let bound = self.coefficients.contains_key(*name)
                || self.initial_conditions.contains_key(*name)
                || self.free_axes.iter().any(|a| a.name == *name);
            if !bound {
                return Err(Error::InvalidSpec(format!(
                    "{} `{}` is not bound (fix it or make it a free axis)",
                    kind.name(),
                    name
                )));
            }
        }
        for (name, v) in self.coefficients.iter().chain(&self.initial_conditions) {
            if !v.is_finite() {
                return Err(Error::InvalidSpec(format!("`{name}` must be finite")));
            }
        }
        match self.horizon {
            Horizon::Fixed(t_f) if !(t_f > 0.0 && t_f.is_finite()) => {
                return Err(Error::InvalidSpec(format!("t_f must be positive, got {t_f}")));
            }
            Horizon::ForcingPeriods(p) => {
                if kind != SystemKind::Duffing {
                    return Err(Error::InvalidSpec(
                        "a forcing-period horizon only applies to the duffing system".into(),
                    ));
                }
                if !(p > 0.0 && p.is_finite()) {
                    return Err(Error::InvalidSpec(format!(
                        "forcing_periods must be positive, got {p}"
                    )));
                }
            }
            _ => {}
        }
        if self.n_t < 2 {
            return Err(Error::InvalidSpec(format!("n_t must be at least 2, got {}", self.n_t)));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidSpec("max_step must be positive".into()));
        }
        Ok(())
    }

    pub fn parameter_box(&self) -> Result<ParameterBox> {
        ParameterBox::new(self.free_axes.clone())
    }

    /// Resolve every coefficient and initial condition for `theta`.
    pub fn resolve(&self, theta: &ParameterVector) -> Result<Resolved> {
        self.parameter_box()?.check(theta)?;
        let lookup = |name: &str, fixed: &BTreeMap<String, f64>| -> f64 {
            if let Some(i) = self.free_axes.iter().position(|a| a.name == name) {
                theta[i]
            } else {
                fixed[name]
            }
        };
        Ok(Resolved {
            coefficients: self
                .kind
                .coefficient_names()
                .iter()
                .map(|n| lookup(n, &self.coefficients))
                .collect(),
            initial_conditions: self
                .kind
                .initial_condition_names()
                .iter()
                .map(|n| lookup(n, &self.initial_conditions))
                .collect(),
        })
    }

    /// Value of a named coefficient or initial condition at `theta`.
    pub fn value_of(&self, name: &str, theta: &ParameterVector) -> Option<f64> {
        if let Some(i) = self.free_axes.iter().position(|a| a.name == name) {
            return theta.get(i).copied();
        }
        self.coefficients
            .get(name)
            .or_else(|| self.initial_conditions.get(name))
            .copied()
    }

    /// Termination time for a resolved parameter set.
    pub fn termination_time(&self, resolved: &Resolved) -> f64 {
        match self.horizon {
            Horizon::Fixed(t_f) => t_f,
            Horizon::ForcingPeriods(periods) => {
                let c = &resolved.coefficients;
                // epsilon, sigma
                periods * 2.0 * PI / (1.0 + c[0] * c[1])
            }
        }
    }

    /// Undamped pendulum of the oscillation/rotation benchmark over the
    /// `(x0, v0)` plane.
    pub fn pendulum_benchmark() -> Self {
        SystemSpec {
            kind: SystemKind::Pendulum,
            coefficients: named(&[("omega", 1.0), ("lambda", 0.0)]),
            initial_conditions: BTreeMap::new(),
            free_axes: vec![Axis::new("x0", -3.5, 3.5), Axis::new("v0", -2.5, 2.5)],
            horizon: Horizon::Fixed(200.0),
            n_t: 1024,
            max_step: SystemKind::Pendulum.default_max_step(),
        }
    }

    /// Lorenz system over the `(x0, rho)` plane with `y0 = z0 = 0`.
    pub fn lorenz_benchmark() -> Self {
        SystemSpec {
            kind: SystemKind::Lorenz,
            coefficients: named(&[("s", 10.0), ("b", 8.0 / 3.0)]),
            initial_conditions: named(&[("y0", 0.0), ("z0", 0.0)]),
            free_axes: vec![Axis::new("x0", -10.0, 10.0), Axis::new("rho", 20.0, 30.0)],
            horizon: Horizon::Fixed(100.0),
            n_t: 8192,
            max_step: SystemKind::Lorenz.default_max_step(),
        }
    }

    /// Duffing oscillator over the `(sigma, x0)` plane with `v0 = 0`.
    pub fn duffing_benchmark() -> Self {
        SystemSpec {
            kind: SystemKind::Duffing,
            coefficients: named(&[
                ("epsilon", 0.01),
                ("force", 2.0),
                ("alpha", 6.0),
                ("lambda", 0.5),
            ]),
            initial_conditions: named(&[("v0", 0.0)]),
            free_axes: vec![Axis::new("sigma", 0.0, 12.0), Axis::new("x0", -2.5, 2.5)],
            horizon: Horizon::ForcingPeriods(400.0),
            n_t: 8192,
            max_step: SystemKind::Duffing.default_max_step(),
        }
    }
}

fn named(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Uniformly sampled multi-channel response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub dt: f64,
    pub channels: Vec<String>,
    /// `values[c][k]` is channel `c` at time `k * dt`.
    pub values: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn n_samples(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn n_channels(&self) -> usize {
        self.values.len()
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.channels
            .iter()
            .position(|c| c == name)
            .map(|i| self.values[i].as_slice())
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benchmark_specs_validate() {
        for spec in [
            SystemSpec::pendulum_benchmark(),
            SystemSpec::lorenz_benchmark(),
            SystemSpec::duffing_benchmark(),
        ] {
            spec.validate().unwrap();
        }
    }

    #[test]
    fn unbound_and_double_bound_names_are_rejected() {
        let mut spec = SystemSpec::pendulum_benchmark();
        spec.coefficients.remove("omega");
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));

        let mut spec = SystemSpec::pendulum_benchmark();
        spec.initial_conditions.insert("x0".into(), 0.0);
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));

        let mut spec = SystemSpec::pendulum_benchmark();
        spec.coefficients.insert("gamma".into(), 0.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn inverted_axis_is_rejected() {
        let mut spec = SystemSpec::pendulum_benchmark();
        spec.free_axes[0] = Axis::new("x0", 1.0, -1.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn short_or_empty_horizons_are_rejected() {
        let mut spec = SystemSpec::pendulum_benchmark();
        spec.n_t = 1;
        assert!(spec.validate().is_err());
        let mut spec = SystemSpec::pendulum_benchmark();
        spec.horizon = Horizon::Fixed(0.0);
        assert!(spec.validate().is_err());
        let mut spec = SystemSpec::pendulum_benchmark();
        spec.horizon = Horizon::ForcingPeriods(10.0);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn resolve_maps_free_axes_and_fixed_values() {
        let spec = SystemSpec::lorenz_benchmark();
        let r = spec.resolve(&ParameterVector::new(vec![1.0, 23.0])).unwrap();
        assert_eq!(r.coefficients, vec![10.0, 8.0 / 3.0, 23.0]);
        assert_eq!(r.initial_conditions, vec![1.0, 0.0, 0.0]);
        assert!(spec.resolve(&ParameterVector::new(vec![1.0, 31.0])).is_err());
        assert!(spec.resolve(&ParameterVector::new(vec![1.0])).is_err());
    }

    #[test]
    fn unit_cube_round_trip() {
        let b = SystemSpec::lorenz_benchmark().parameter_box().unwrap();
        let theta = ParameterVector::new(vec![-2.5, 27.5]);
        let u = b.to_unit(&theta);
        assert_eq!(u, vec![0.375, 0.75]);
        assert_eq!(b.from_unit(&u), theta);
    }

    #[test]
    fn forcing_period_horizon_tracks_detuning() {
        let spec = SystemSpec::duffing_benchmark();
        let r = spec.resolve(&ParameterVector::new(vec![6.0, 0.0])).unwrap();
        let expected = 400.0 * 2.0 * PI / 1.06;
        assert!((spec.termination_time(&r) - expected).abs() < 1e-9);
    }
}
