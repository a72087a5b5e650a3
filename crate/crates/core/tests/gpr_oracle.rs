use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regime_scout::dynamics::{Axis, ParameterBox};
use regime_scout::gpr::{fit, kernel, nlml, GpModel, Hyperparameters, SearchBox};

fn unit_box(d: usize) -> ParameterBox {
    ParameterBox::new((0..d).map(|i| Axis::new(format!("u{i}"), 0.0, 1.0)).collect()).unwrap()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_hyper(rng: &mut ChaCha8Rng) -> Hyperparameters {
    Hyperparameters::new(
        rng.random_range(0.01..0.5),
        rng.random_range(0.1..1.0),
        rng.random_range(0.3..2.0),
    )
    .unwrap()
}

#[test]
fn nlml_matches_dense_inverse() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let x = random_points(&mut rng, 5, 2);
        let t: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..3.0)).collect();
        let h = random_hyper(&mut rng);
        let model = GpModel::from_unit(unit_box(2), x.clone(), t.clone(), h).unwrap();
        let k = DMatrix::from_fn(5, 5, |i, j| {
            kernel(&x[i], &x[j], &h) + if i == j { h.sigma_n.powi(2) + model.jitter() } else { 0.0 }
        });
        let inv = k.clone().try_inverse().unwrap();
        let tau = nalgebra::DVector::from_vec(t.clone());
        let quad = (tau.transpose() * &inv * &tau)[(0, 0)];
        let expect = 0.5 * quad + 0.5 * k.determinant().ln() + 2.5 * (2.0 * std::f64::consts::PI).ln();
        let got = nlml(&h, &x, &t).unwrap();
        assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
        assert!((model.nlml() - got).abs() < 1e-12);
    }
}

#[test]
fn interpolates_with_tiny_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = random_points(&mut rng, 12, 2);
    let t: Vec<f64> = (0..12).map(|i| (i % 3) as f64).collect();
    let h = Hyperparameters::new(1e-6, 0.2, 1.0).unwrap();
    let model = GpModel::from_unit(unit_box(2), x.clone(), t.clone(), h).unwrap();
    for (xi, ti) in x.iter().zip(&t) {
        assert!((model.predict_unit(xi).mean - ti).abs() < 1e-4);
    }
}

#[test]
fn reverts_to_prior_far_away() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Vec<Vec<f64>> = random_points(&mut rng, 10, 2).into_iter().map(|p| vec![0.3 * p[0], 0.3 * p[1]]).collect();
    let t: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
    let h = Hyperparameters::new(1e-3, 0.05, 1.4).unwrap();
    let model = GpModel::from_unit(unit_box(2), x, t, h).unwrap();
    for q in [[0.9, 0.9], [0.81, 0.1], [0.2, 0.95]] {
        let p = model.predict_unit(&q);
        assert!(p.mean.abs() < 1e-6);
        assert!((p.std - 1.4).abs() < 1e-6);
    }
}

#[test]
fn variance_bounded_by_prior_and_shrinks_with_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..40 {
        let h = random_hyper(&mut rng);
        let x = random_points(&mut rng, 15, 2);
        let t: Vec<f64> = (0..15).map(|_| rng.random_range(0.0..2.0)).collect();
        let queries = random_points(&mut rng, 30, 2);
        let mut prev: Option<Vec<f64>> = None;
        for n in 1..=15 {
            let model = GpModel::from_unit(unit_box(2), x[..n].to_vec(), t[..n].to_vec(), h).unwrap();
            let stds: Vec<f64> = queries.iter().map(|q| model.predict_unit(q).std).collect();
            for s in &stds {
                assert!(s * s <= h.sigma_l * h.sigma_l + 1e-9);
            }
            if let Some(p) = &prev {
                for (a, b) in stds.iter().zip(p) {
                    assert!(a * a <= b * b + 1e-8);
                }
            }
            prev = Some(stds);
        }
    }
}

#[test]
fn prediction_ignores_training_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_hyper(&mut rng);
    let x = random_points(&mut rng, 20, 3);
    let t: Vec<f64> = (0..20).map(|_| rng.random_range(0.0..2.0)).collect();
    let a = GpModel::from_unit(unit_box(3), x.clone(), t.clone(), h).unwrap();
    let b = GpModel::from_unit(
        unit_box(3),
        x.iter().rev().cloned().collect(),
        t.iter().rev().cloned().collect(),
        h,
    )
    .unwrap();
    for q in random_points(&mut rng, 20, 3) {
        let (pa, pb) = (a.predict_unit(&q), b.predict_unit(&q));
        assert!((pa.mean - pb.mean).abs() < 1e-10);
        assert!((pa.std - pb.std).abs() < 1e-10);
    }
}

/// Draw targets from the prior through an independent Cholesky.
fn prior_sample(rng: &mut ChaCha8Rng, x: &[Vec<f64>], h: &Hyperparameters) -> Vec<f64> {
    let n = x.len();
    let k = DMatrix::from_fn(n, n, |i, j| {
        kernel(&x[i], &x[j], h) + if i == j { h.sigma_n.powi(2) } else { 0.0 }
    });
    let l = k.cholesky().unwrap().l();
    let z = nalgebra::DVector::from_fn(n, |_, _| gaussian(rng));
    (l * z).iter().cloned().collect()
}

#[test]
fn recovers_length_scale_from_prior_draw() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let truth = Hyperparameters::new(0.01, 0.2, 1.0).unwrap();
    let x = random_points(&mut rng, 40, 2);
    let t = prior_sample(&mut rng, &x, &truth);
    let fitted = fit(&x, &t, &SearchBox::default_for(&t), 8, 1).unwrap();
    let l = fitted.hyper.length_scale;
    assert!(l > 0.1 && l < 0.4, "length scale {l}");
}

#[test]
fn fit_dominates_random_probes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for trial in 0..3 {
        let x = random_points(&mut rng, 25, 2);
        let t: Vec<f64> = x.iter().map(|p| if p[0] + 0.3 * p[1] > 0.6 { 1.0 } else { 0.0 }).collect();
        let b = SearchBox::default_for(&t);
        let fitted = fit(&x, &t, &b, 8, trial).unwrap();
        assert!(b.contains(&fitted.hyper));
        assert!((nlml(&fitted.hyper, &x, &t).unwrap() - fitted.nlml).abs() < 1e-9);
        for _ in 0..20 {
            let draw = |(lo, hi): (f64, f64), r: f64| (lo.ln() + r * (hi.ln() - lo.ln())).exp();
            let probe = Hyperparameters::new(
                draw(b.sigma_n, rng.random()),
                draw(b.length_scale, rng.random()),
                draw(b.sigma_l, rng.random()),
            )
            .unwrap();
            assert!(fitted.nlml <= nlml(&probe, &x, &t).unwrap());
        }
    }
}

#[test]
fn zero_signal_collapses_sigma_l() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let x = random_points(&mut rng, 15, 2);
    let t = vec![0.0; 15];
    let b = SearchBox {
        sigma_n: (1e-4, 0.5),
        length_scale: (0.01, 2.0),
        sigma_l: (0.05, 3.0),
    };
    let fitted = fit(&x, &t, &b, 8, 0).unwrap();
    assert!(fitted.hyper.sigma_l < 0.06, "{:?}", fitted.hyper);
}

#[test]
fn fit_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let x = random_points(&mut rng, 20, 2);
    let t: Vec<f64> = x.iter().map(|p| (p[0] > 0.5) as u8 as f64).collect();
    let b = SearchBox::default_for(&t);
    assert_eq!(fit(&x, &t, &b, 8, 3).unwrap(), fit(&x, &t, &b, 8, 3).unwrap());
}

#[test]
fn nlml_is_smooth_in_log_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let x = random_points(&mut rng, 10, 2);
    let t: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..2.0)).collect();
    for _ in 0..10 {
        let g = random_hyper(&mut rng).to_log();
        let dir: [f64; 3] = [gaussian(&mut rng), gaussian(&mut rng), gaussian(&mut rng)];
        let at = |s: f64| {
            let v = [g[0] + s * dir[0], g[1] + s * dir[1], g[2] + s * dir[2]];
            nlml(&Hyperparameters::from_log(v), &x, &t).unwrap()
        };
        let second = |h: f64| (at(h) + at(-h) - 2.0 * at(0.0)).abs();
        let (coarse, fine) = (second(1e-2), second(5e-3));
        let ratio = coarse / fine;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }
}
