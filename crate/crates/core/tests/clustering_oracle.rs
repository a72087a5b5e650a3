use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regime_scout::clustering::{canonicalize, dbscan, ClusterParams, Label};

/// Reference answer computed the slow way: core flags by counting, then a
/// full transitive closure of the core adjacency relation.
struct Reference {
    core: Vec<bool>,
    reach: Vec<Vec<bool>>,
    close: Vec<Vec<bool>>,
}

fn reference(points: &[Vec<f64>], eps: f64, min_pts: usize) -> Reference {
    let n = points.len();
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        let mut s = 0.0;
        for k in 0..a.len() {
            s += (a[k] - b[k]).powi(2);
        }
        s.sqrt()
    };
    let close: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| dist(&points[i], &points[j]) <= eps).collect())
        .collect();
    let core: Vec<bool> = close.iter().map(|row| row.iter().filter(|&&c| c).count() >= min_pts).collect();
    let mut reach: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| core[i] && core[j] && close[i][j]).collect())
        .collect();
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    Reference { core, reach, close }
}

fn check(points: &[Vec<f64>], eps: f64, min_pts: usize) {
    let raw = dbscan(points, &ClusterParams::new(eps, min_pts).unwrap()).unwrap();
    let r = reference(points, eps, min_pts);
    let n = points.len();
    for i in 0..n {
        for j in 0..n {
            if r.core[i] && r.core[j] {
                assert_eq!(raw[i] == raw[j], r.reach[i][j], "core pair {i},{j}");
            }
        }
        if !r.core[i] {
            match (0..n).find(|&j| r.core[j] && r.close[i][j]) {
                Some(j) => assert_eq!(raw[i], raw[j], "border {i}"),
                None => assert_eq!(raw[i], None, "noise {i}"),
            }
        } else {
            assert!(raw[i].is_some());
        }
    }
    let labeling = canonicalize(&raw);
    let mut seen = 0;
    for l in &labeling.labels {
        if let Label::Regime(k) = l {
            assert!(*k <= seen);
            if *k == seen {
                seen += 1;
            }
        }
    }
    assert_eq!(seen, labeling.n_regimes);
}

#[test]
fn matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.random_range(1..60);
        let d = rng.random_range(1..4);
        let n_centres = rng.random_range(1..5);
        let centres: Vec<Vec<f64>> = (0..n_centres)
            .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let c = &centres[rng.random_range(0..n_centres)];
                c.iter().map(|x| x + rng.random_range(-2.0..2.0)).collect()
            })
            .collect();
        let eps = rng.random_range(0.2..3.0);
        let min_pts = rng.random_range(1..7);
        check(&points, eps, min_pts);
    }
}

fn core_partition(points: &[Vec<f64>], params: &ClusterParams, order: &[usize]) -> Vec<Vec<bool>> {
    let permuted: Vec<Vec<f64>> = order.iter().map(|&i| points[i].clone()).collect();
    let raw = dbscan(&permuted, params).unwrap();
    let r = reference(&permuted, params.eps, params.min_pts);
    // back to original indexing: same[i][j] for core points, noise on the diagonal
    let n = points.len();
    let mut pos = vec![0; n];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let (a, b) = (pos[i], pos[j]);
                    if i == j {
                        raw[a].is_none()
                    } else {
                        r.core[a] && r.core[b] && raw[a] == raw[b]
                    }
                })
                .collect()
        })
        .collect()
}

proptest! {
    #[test]
    fn reordering_preserves_core_partition_and_noise(
        points in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..30),
        eps in 0.3f64..2.5,
        min_pts in 1usize..5,
        seed in any::<u64>(),
    ) {
        let params = ClusterParams::new(eps, min_pts).unwrap();
        let identity: Vec<usize> = (0..points.len()).collect();
        let mut shuffled = identity.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        prop_assert_eq!(
            core_partition(&points, &params, &identity),
            core_partition(&points, &params, &shuffled)
        );
    }

    #[test]
    fn agrees_with_brute_force(
        points in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 1..3), 1..25),
        eps in 0.1f64..2.0,
        min_pts in 1usize..6,
    ) {
        let d = points[0].len();
        let points: Vec<Vec<f64>> = points.into_iter().filter(|p| p.len() == d).collect();
        check(&points, eps, min_pts);
    }
}
