//! Ground truth for the three benchmark systems.
//!
//! None of this is used by the exploration loop itself; it grades what the
//! loop learned.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{simulate, Horizon, ParameterVector, SystemKind, SystemSpec, TimeSeries};
use crate::error::{Error, Result};
use crate::explorer::MonitorGrid;

/// Upper half of the undamped pendulum separatrix through the origin,
/// `v0 = sqrt(2 (1 - cos x0))` (unit natural frequency).
pub fn pendulum_separatrix(x0: f64) -> f64 {
    (2.0 * (1.0 - x0.cos())).max(0.0).sqrt()
}

/// Whether the undamped pendulum `x'' = -omega^2 sin x` started at
/// `(x0, v0)` rotates.
///
/// The separatrix above is written with the angle measured from the upright
/// position; in the simulation's coordinates (angle from the hanging rest
/// position) it is evaluated at `x0 - pi`. The test is the equivalent energy
/// form `v0^2 / 2 + omega^2 (1 - cos x0) >= 2 omega^2`.
pub fn pendulum_rotates(omega: f64, x0: f64, v0: f64) -> bool {
    v0.abs() >= omega.abs() * pendulum_separatrix(x0 - PI)
}

/// Whether every channel has settled: the variance over the final quarter of
/// the record is at most `1e-3` of the variance over the whole record.
pub fn lorenz_settles(ts: &TimeSeries) -> bool {
    const RATIO: f64 = 1e-3;
    ts.values.iter().all(|channel| {
        let tail = &channel[channel.len() * 3 / 4..];
        variance(tail) <= RATIO * variance(channel)
    })
}

fn variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Duffing coefficients at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub force: f64,
    pub alpha: f64,
    pub lambda: f64,
}

impl DuffingParams {
    pub fn from_spec(spec: &SystemSpec, theta: &ParameterVector) -> Result<Self> {
        if spec.kind != SystemKind::Duffing {
            return Err(Error::InvalidSpec(format!(
                "expected a duffing system, got {}",
                spec.kind.name()
            )));
        }
        let c = spec.resolve(theta)?.coefficients;
        Ok(DuffingParams {
            epsilon: c[0],
            sigma: c[1],
            force: c[2],
            alpha: c[3],
            lambda: c[4],
        })
    }

    /// Largest amplitude on the response curve, `F / (2 lambda)`.
    fn peak_amplitude(&self) -> f64 {
        self.force.abs() / (2.0 * self.lambda.abs())
    }

    fn discriminant(&self, a: f64) -> f64 {
        self.force * self.force / (4.0 * a * a) - self.lambda * self.lambda
    }
}

/// The two detuning branches `(sigma_minus, sigma_plus)` of the frequency
/// response curve at steady-state amplitude `a`:
/// `sigma = (3 alpha / 8) a^2 -/+ sqrt(F^2 / (4 a^2) - lambda^2)`.
pub fn duffing_frc(a: f64, params: &DuffingParams) -> Result<(f64, f64)> {
    if !(a > 0.0) {
        return Err(Error::InvalidInput(format!("amplitude must be positive, got {a}")));
    }
    let disc = params.discriminant(a);
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant { amplitude: a });
    }
    let backbone = 3.0 * params.alpha / 8.0 * a * a;
    let root = disc.sqrt();
    Ok((backbone - root, backbone + root))
}

/// Stable steady-state amplitudes at the detuning `params.sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StableAmplitudes {
    /// Non-resonant branch (small amplitude).
    pub low: Option<f64>,
    /// Resonant branch (large amplitude).
    pub high: Option<f64>,
}

impl StableAmplitudes {
    /// Amplitude separating the two basins, if both branches exist.
    pub fn threshold(&self) -> Option<f64> {
        match (self.low, self.high) {
            (Some(lo), Some(hi)) => Some(0.5 * (lo + hi)),
            _ => None,
        }
    }
}

/// Invert the response curve for the stable amplitudes of a hardening
/// (`alpha > 0`) oscillator at detuning `params.sigma`.
///
/// The resonant branch is the `-` branch, monotone in `a` up to the peak
/// `a = F / (2 lambda)`. The non-resonant branch is the part of the `+`
/// branch below its fold (the minimum of `sigma_plus(a)`).
pub fn duffing_stable_amplitudes(params: &DuffingParams) -> Result<StableAmplitudes> {
    if !(params.alpha > 0.0 && params.lambda > 0.0 && params.force != 0.0) {
        return Err(Error::InvalidInput(
            "stable branches need alpha > 0, lambda > 0 and nonzero forcing".into(),
        ));
    }
    let a_max = params.peak_amplitude();
    let sigma = params.sigma;
    let minus = |a: f64| duffing_frc(a, params).map(|s| s.0).unwrap_or(f64::INFINITY);
    let plus = |a: f64| duffing_frc(a, params).map(|s| s.1).unwrap_or(f64::INFINITY);

    let tiny = a_max * 1e-12;
    let high = if sigma <= minus(a_max) {
        Some(bisect(|a| minus(a) - sigma, tiny, a_max))
    } else {
        None
    };

    let a_fold = golden_min(&plus, tiny, a_max);
    let low = if sigma >= plus(a_fold) {
        Some(bisect(|a| plus(a) - sigma, tiny, a_fold))
    } else {
        None
    };
    Ok(StableAmplitudes { low, high })
}

/// Root of a function that changes sign on `[lo, hi]`.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (f(mid) < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn golden_min(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-13 * b.abs().max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    // the minimum may sit on the upper end when the fold is absent
    if f(b) <= f(mid) {
        b
    } else {
        mid
    }
}

/// Steady-state amplitude by brute force: integrate for four times the
/// configured horizon at the same sampling interval and take `max |x|` over
/// the final quarter.
pub fn duffing_amplitude_oracle(spec: &SystemSpec, theta: &ParameterVector) -> Result<f64> {
    let mut long = spec.clone();
    long.horizon = match spec.horizon {
        Horizon::Fixed(t_f) => Horizon::Fixed(4.0 * t_f),
        Horizon::ForcingPeriods(p) => Horizon::ForcingPeriods(4.0 * p),
    };
    long.n_t = 4 * (spec.n_t - 1) + 1;
    let ts = simulate(&long, theta)?;
    let x = &ts.values[0];
    Ok(x[x.len() * 3 / 4..].iter().fold(0.0, |m, v| m.max(v.abs())))
}

/// Ground-truth regime of a benchmark system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleRegime {
    Oscillation,
    Rotation,
    SteadyState,
    Chaotic,
    LowAmplitude,
    HighAmplitude,
}

impl OracleRegime {
    /// Binary index within its own system (0 or 1).
    pub fn index(self) -> usize {
        match self {
            OracleRegime::Oscillation | OracleRegime::SteadyState | OracleRegime::LowAmplitude => 0,
            OracleRegime::Rotation | OracleRegime::Chaotic | OracleRegime::HighAmplitude => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleRegime::Oscillation => "oscillation",
            OracleRegime::Rotation => "rotation",
            OracleRegime::SteadyState => "steady_state",
            OracleRegime::Chaotic => "chaotic",
            OracleRegime::LowAmplitude => "low_amplitude",
            OracleRegime::HighAmplitude => "high_amplitude",
        }
    }
}

/// Label `theta` with the system-specific brute-force rule:
///
/// * pendulum — energy test against the separatrix (undamped only);
/// * Lorenz — last-quarter variance convergence test;
/// * Duffing — long-run amplitude against the midpoint of the two stable
///   branch amplitudes at the point's detuning (a single branch labels every
///   point with that branch).
pub fn oracle_label(spec: &SystemSpec, theta: &ParameterVector) -> Result<OracleRegime> {
    match spec.kind {
        SystemKind::Pendulum => {
            let r = spec.resolve(theta)?;
            if r.coefficients[1] != 0.0 {
                return Err(Error::InvalidInput(
                    "the separatrix oracle only holds for the undamped pendulum".into(),
                ));
            }
            let (omega, x0, v0) = (r.coefficients[0], r.initial_conditions[0], r.initial_conditions[1]);
            Ok(if pendulum_rotates(omega, x0, v0) {
                OracleRegime::Rotation
            } else {
                OracleRegime::Oscillation
            })
        }
        SystemKind::Lorenz => {
            let ts = simulate(spec, theta)?;
            Ok(if lorenz_settles(&ts) {
                OracleRegime::SteadyState
            } else {
                OracleRegime::Chaotic
            })
        }
        SystemKind::Duffing => {
            let params = DuffingParams::from_spec(spec, theta)?;
            let branches = duffing_stable_amplitudes(&params)?;
            let high = match (branches.threshold(), branches.low, branches.high) {
                (Some(cut), _, _) => duffing_amplitude_oracle(spec, theta)? > cut,
                (None, _, Some(_)) => true,
                (None, Some(_), None) => false,
                (None, None, None) => {
                    return Err(Error::InvalidInput(format!(
                        "no stable branch at sigma = {}",
                        params.sigma
                    )))
                }
            };
            Ok(if high {
                OracleRegime::HighAmplitude
            } else {
                OracleRegime::LowAmplitude
            })
        }
        SystemKind::Harmonic => Err(Error::InvalidInput(
            "the harmonic test system has a single regime and no oracle".into(),
        )),
    }
}

/// Oracle labels at every node of a `resolution`-per-axis grid over the
/// free axes, in grid order.
pub fn oracle_grid(spec: &SystemSpec, resolution: usize) -> Result<(MonitorGrid, Vec<OracleRegime>)> {
    let grid = MonitorGrid::new(&spec.parameter_box()?, resolution);
    let labels = (0..grid.len())
        .into_par_iter()
        .map(|k| oracle_label(spec, &grid.node(k)))
        .collect::<Result<Vec<_>>>()?;
    Ok((grid, labels))
}
