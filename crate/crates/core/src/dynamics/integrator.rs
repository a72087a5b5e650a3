//! Classical fixed-step fourth-order Runge–Kutta.

use super::BLOW_UP_THRESHOLD;
use crate::error::{Error, Result};

/// One RK4 step of size `h` from `(t, y)`.
#[inline]
pub fn rk4_step<const D: usize, F>(rhs: &F, t: f64, y: &[f64; D], h: f64) -> [f64; D]
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    let k1 = rhs(t, y);
    let k2 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = rhs(t + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = rhs(t + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..D {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const D: usize>(y: &[f64; D], a: f64, k: &[f64; D]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        out[i] += a * k[i];
    }
    out
}

/// Integrate over `[0, t_f]`, returning `n_t` equally spaced states
/// (the first is `y0`). Each output interval is covered by `substeps`
/// RK4 steps.
///
/// Fails with [`Error::NonFinite`] as soon as any component becomes NaN or
/// exceeds [`BLOW_UP_THRESHOLD`] in magnitude; `step` is the index of the
/// offending output sample.
pub fn integrate<const D: usize, F>(
    rhs: F,
    y0: [f64; D],
    t_f: f64,
    n_t: usize,
    substeps: usize,
) -> Result<Vec<[f64; D]>>
where
    F: Fn(f64, &[f64; D]) -> [f64; D],
{
    assert!(n_t >= 2 && substeps >= 1);
    let dt = t_f / (n_t - 1) as f64;
    let h = dt / substeps as f64;
    let mut out = Vec::with_capacity(n_t);
    out.push(y0);
    let mut y = y0;
    for k in 1..n_t {
        let t0 = (k - 1) as f64 * dt;
        for s in 0..substeps {
            y = rk4_step(&rhs, t0 + s as f64 * h, &y, h);
        }
        if y.iter().any(|v| !(v.abs() <= BLOW_UP_THRESHOLD)) {
            return Err(Error::NonFinite {
                step: k,
                t: k as f64 * dt,
            });
        }
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    fn max_error(n_t: usize) -> f64 {
        let t_f = 10.0;
        let ys = integrate(harmonic, [1.0, 0.0], t_f, n_t, 1).unwrap();
        let dt = t_f / (n_t - 1) as f64;
        ys.iter()
            .enumerate()
            .map(|(k, y)| (y[0] - (k as f64 * dt).cos()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn fourth_order_convergence_on_harmonic_oscillator() {
        // analytic solution cos(t) is the oracle
        for n in [51usize, 101, 201] {
            let ratio = max_error(n) / max_error(2 * n - 1);
            assert!((ratio - 16.0).abs() < 3.0, "n = {n}: ratio {ratio}");
        }
    }

    #[test]
    fn substeps_match_a_finer_output_grid() {
        let coarse = integrate(harmonic, [1.0, 0.0], 5.0, 11, 4).unwrap();
        let fine = integrate(harmonic, [1.0, 0.0], 5.0, 41, 1).unwrap();
        for (k, y) in coarse.iter().enumerate() {
            assert!((y[0] - fine[4 * k][0]).abs() < 1e-13);
        }
    }

    #[test]
    fn blow_up_reports_the_offending_step() {
        let err = integrate(|_t, y: &[f64; 1]| [y[0] * y[0]], [1.0], 2.0, 201, 1).unwrap_err();
        match err {
            Error::NonFinite { step, t } => {
                // y = 1 / (1 - t) diverges at t = 1
                assert!(step > 90 && step < 130, "step {step}");
                assert!(t > 0.9 && t < 1.3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_is_caught() {
        let err = integrate(|_t, _y: &[f64; 1]| [f64::NAN], [0.0], 1.0, 3, 1).unwrap_err();
        assert_eq!(err, Error::NonFinite { step: 1, t: 0.5 });
    }
}
