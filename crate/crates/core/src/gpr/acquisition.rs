use super::Posterior;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal CDF; accurate in the far lower tail through `erfc`.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Expected exceedance of `beta_max + zeta`; zero where the posterior has
/// no spread.
pub fn expected_improvement(post: &Posterior, beta_max: f64, zeta: f64) -> f64 {
    if !(post.std > 0.0) {
        return 0.0;
    }
    let gain = post.mean - beta_max - zeta;
    let z = gain / post.std;
    (gain * normal_cdf(z) + post.std * normal_pdf(z)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn post(mean: f64, std: f64) -> Posterior {
        Posterior { mean, std }
    }

    #[test]
    fn zero_spread_is_zero() {
        assert_eq!(expected_improvement(&post(5.0, 0.0), 1.0, 0.01), 0.0);
    }

    #[test]
    fn at_threshold_equals_pdf_at_zero() {
        let ei = expected_improvement(&post(2.01, 1.0), 2.0, 0.01);
        assert!((ei - 0.398_942_3).abs() < 1e-6);
        let ei = expected_improvement(&post(1.0, 0.25), 1.0, 0.0);
        assert!((ei - 0.25 * 0.398_942_3).abs() < 1e-6);
    }

    #[test]
    fn far_below_threshold_is_tiny() {
        // gain = -10 sigma: phi(10) - 10 (1 - Phi(10)) ~ 7.7e-24
        let ei = expected_improvement(&post(-10.0, 1.0), 0.0, 0.0);
        assert!(ei < 1e-20);
        assert!(ei >= 0.0);
    }

    #[test]
    fn cdf_known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-12);
        // Phi(-10) = 7.619853024160527e-24
        assert!((normal_cdf(-10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn grows_with_spread() {
        for &(m, b) in &[(0.0, 1.0), (1.0, 0.0), (0.3, 0.3), (-2.0, 0.5)] {
            let mut prev = expected_improvement(&post(m, 0.05), b, 0.01);
            for i in 2..60 {
                let s = 0.05 * i as f64;
                let ei = expected_improvement(&post(m, s), b, 0.01);
                let z = (m - b - 0.01) / s;
                // far from the threshold the increment drops below one ulp
                if z.abs() < 8.0 {
                    assert!(ei > prev, "mean {m} beta {b} std {s}");
                } else {
                    assert!(ei >= prev, "mean {m} beta {b} std {s}");
                }
                prev = ei;
            }
        }
    }
}
