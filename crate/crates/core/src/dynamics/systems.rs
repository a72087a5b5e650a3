use super::{integrate, ParameterVector, SystemKind, SystemSpec, TimeSeries};
use crate::error::Result;

/// Integrate the full state of `spec` at `theta`.
pub fn simulate_states(spec: &SystemSpec, theta: &ParameterVector) -> Result<TimeSeries> {
    spec.validate()?;
    let resolved = spec.resolve(theta)?;
    let t_f = spec.termination_time(&resolved);
    let n_t = spec.n_t;
    let dt = t_f / (n_t - 1) as f64;
    let substeps = ((dt / spec.max_step).ceil() as usize).max(1);
    let c = &resolved.coefficients;
    let ic = &resolved.initial_conditions;

    let values = match spec.kind {
        SystemKind::Pendulum => {
            let (omega2, lambda) = (c[0] * c[0], c[1]);
            let states = integrate(
                |_t, y: &[f64; 2]| [y[1], -lambda * y[1] - omega2 * y[0].sin()],
                [ic[0], ic[1]],
                t_f,
                n_t,
                substeps,
            )?;
            unzip(&states)
        }
        SystemKind::Lorenz => {
            let (s, b, rho) = (c[0], c[1], c[2]);
            let states = integrate(
                |_t, y: &[f64; 3]| {
                    [
                        s * (y[1] - y[0]),
                        y[0] * (rho - y[2]) - y[1],
                        y[0] * y[1] - b * y[2],
                    ]
                },
                [ic[0], ic[1], ic[2]],
                t_f,
                n_t,
                substeps,
            )?;
            unzip(&states)
        }
        SystemKind::Duffing => {
            let (eps, sigma, force, alpha, lambda) = (c[0], c[1], c[2], c[3], c[4]);
            let damping = 2.0 * eps * lambda;
            let cubic = eps * alpha;
            let drive = eps * force;
            let freq = 1.0 + eps * sigma;
            let states = integrate(
                |t, y: &[f64; 2]| {
                    [
                        y[1],
                        -damping * y[1] - y[0] - cubic * y[0] * y[0] * y[0]
                            + drive * (freq * t).sin(),
                    ]
                },
                [ic[0], ic[1]],
                t_f,
                n_t,
                substeps,
            )?;
            unzip(&states)
        }
        SystemKind::Harmonic => {
            let states = integrate(
                |_t, y: &[f64; 2]| [y[1], -y[0]],
                [ic[0], ic[1]],
                t_f,
                n_t,
                substeps,
            )?;
            unzip(&states)
        }
    };

    Ok(TimeSeries {
        dt,
        channels: spec.kind.state_names().iter().map(|s| s.to_string()).collect(),
        values,
    })
}

/// Integrate `spec` at `theta` and keep the observed channels
/// (displacement for second-order systems, all three for Lorenz).
pub fn simulate(spec: &SystemSpec, theta: &ParameterVector) -> Result<TimeSeries> {
    let full = simulate_states(spec, theta)?;
    let observed = spec.kind.observed_channels();
    Ok(TimeSeries {
        dt: full.dt,
        channels: observed.iter().map(|&i| full.channels[i].clone()).collect(),
        values: observed.iter().map(|&i| full.values[i].clone()).collect(),
    })
}

fn unzip<const D: usize>(states: &[[f64; D]]) -> Vec<Vec<f64>> {
    (0..D).map(|i| states.iter().map(|y| y[i]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{lorenz_settles, Axis, Horizon};
    use crate::error::Error;
    use std::collections::BTreeMap;

    fn theta(v: &[f64]) -> ParameterVector {
        ParameterVector::new(v.to_vec())
    }

    #[test]
    fn pendulum_equilibrium_stays_at_rest() {
        let spec = SystemSpec::pendulum_benchmark();
        let ts = simulate(&spec, &theta(&[0.0, 0.0])).unwrap();
        assert_eq!(ts.channels, vec!["x"]);
        assert_eq!(ts.n_samples(), spec.n_t);
        assert!(ts.values[0].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pendulum_angle_is_not_wrapped() {
        let spec = SystemSpec::pendulum_benchmark();
        let ts = simulate(&spec, &theta(&[0.0, 2.5])).unwrap();
        let last = *ts.values[0].last().unwrap();
        assert!(last > 20.0 * std::f64::consts::PI, "last angle {last}");
    }

    #[test]
    fn undamped_pendulum_conserves_energy() {
        let spec = SystemSpec {
            n_t: 1000,
            ..SystemSpec::pendulum_benchmark()
        };
        for p in [[0.5, 0.3], [3.0, 0.0], [-1.0, 2.4], [3.4, -1.0]] {
            let ts = simulate_states(&spec, &theta(&p)).unwrap();
            let energy = |k: usize| {
                let (x, v) = (ts.values[0][k], ts.values[1][k]);
                0.5 * v * v + (1.0 - x.cos())
            };
            let e0 = energy(0);
            let drift = (0..ts.n_samples())
                .map(|k| ((energy(k) - e0) / e0).abs())
                .fold(0.0, f64::max);
            assert!(drift < 1e-6, "{p:?}: drift {drift}");
        }
    }

    #[test]
    fn simulate_is_bit_reproducible() {
        let spec = SystemSpec::lorenz_benchmark();
        let a = simulate(&spec, &theta(&[1.0, 25.0])).unwrap();
        let b = simulate(&spec, &theta(&[1.0, 25.0])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lorenz_rho_23_settles_and_rho_25_does_not() {
        let spec = SystemSpec::lorenz_benchmark();
        let steady = simulate(&spec, &theta(&[1.0, 23.0])).unwrap();
        let chaotic = simulate(&spec, &theta(&[1.0, 25.0])).unwrap();
        assert_eq!(steady.n_channels(), 3);
        assert!(lorenz_settles(&steady));
        assert!(!lorenz_settles(&chaotic));
    }

    #[test]
    fn sampling_grid_spans_zero_to_t_f() {
        let spec = SystemSpec::pendulum_benchmark();
        let ts = simulate(&spec, &theta(&[0.1, 0.0])).unwrap();
        assert_eq!(ts.time(0), 0.0);
        assert!((ts.time(ts.n_samples() - 1) - 200.0).abs() < 1e-9);
    }

    #[test]
    fn divergence_is_an_error() {
        // a negative-stiffness "harmonic" would need a new kind, so drive the
        // Lorenz system with a huge rho and no dissipation instead
        let spec = SystemSpec {
            kind: SystemKind::Lorenz,
            coefficients: BTreeMap::from([("s".into(), -10.0), ("b".into(), -8.0)]),
            initial_conditions: BTreeMap::from([("y0".into(), 1.0), ("z0".into(), 1.0)]),
            free_axes: vec![Axis::new("x0", 0.0, 2.0), Axis::new("rho", 0.0, 100.0)],
            horizon: Horizon::Fixed(50.0),
            n_t: 500,
            max_step: 0.01,
        };
        let err = simulate(&spec, &theta(&[1.0, 50.0])).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }), "{err:?}");
    }
}
