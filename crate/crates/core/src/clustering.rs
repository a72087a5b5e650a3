//! Density-based regime discovery and the stable integer labels that serve
//! as regression targets.
//!
//! A point is *core* when its closed `eps`-ball holds at least `min_pts`
//! points, itself included. Clusters are the connected components of the
//! core points under the `eps` relation; a non-core point within `eps` of a
//! core point is a border point and joins the cluster of the lowest-index
//! such core point; everything else is noise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Neighbourhood radius (inclusive).
    pub eps: f64,
    /// Minimum neighbourhood size of a core point, counting the point itself.
    pub min_pts: usize,
}

impl ClusterParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        let p = ClusterParams { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {}", self.eps)));
        }
        if self.min_pts == 0 {
            return Err(Error::InvalidInput("min_pts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Canonical regime index or noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Regime(usize),
    Noise,
}

impl Label {
    pub fn regime(self) -> Option<usize> {
        match self {
            Label::Regime(r) => Some(r),
            Label::Noise => None,
        }
    }
}

/// Pairwise Euclidean distances, grown one point at a time.
#[derive(Debug, Clone, Default)]
pub struct DistanceMatrix {
    points: Vec<Vec<f64>>,
    /// Row `i` holds distances to points `0..i`.
    rows: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn new() -> Self {
        DistanceMatrix::default()
    }

    pub fn from_points<V: AsRef<[f64]>>(points: &[V]) -> Result<Self> {
        let mut m = DistanceMatrix::new();
        for p in points {
            m.push(p.as_ref())?;
        }
        Ok(m)
    }

    pub fn push(&mut self, point: &[f64]) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.len() != point.len() {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: point.len(),
                });
            }
        }
        let row = self.points.iter().map(|q| euclidean(q, point)).collect();
        self.rows.push(row);
        self.points.push(point.to_vec());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => self.rows[i][j],
            std::cmp::Ordering::Less => self.rows[j][i],
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Cluster `points`; `None` marks noise. Cluster ids are numbered by the
/// scan position of their first core point.
pub fn dbscan<V: AsRef<[f64]>>(points: &[V], params: &ClusterParams) -> Result<Vec<Option<usize>>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("dbscan needs at least one point".into()));
    }
    dbscan_matrix(&DistanceMatrix::from_points(points)?, params)
}

/// [`dbscan`] over precomputed distances.
pub fn dbscan_matrix(distances: &DistanceMatrix, params: &ClusterParams) -> Result<Vec<Option<usize>>> {
    params.validate()?;
    let n = distances.len();
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| distances.get(i, j) <= params.eps).collect())
        .collect();
    let core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= params.min_pts).collect();

    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    let mut queue = Vec::new();
    for seed in 0..n {
        if !core[seed] || labels[seed].is_some() {
            continue;
        }
        labels[seed] = Some(next);
        queue.push(seed);
        while let Some(p) = queue.pop() {
            for &q in &neighbours[p] {
                if core[q] && labels[q].is_none() {
                    labels[q] = Some(next);
                    queue.push(q);
                }
            }
        }
        next += 1;
    }
    for p in 0..n {
        if !core[p] {
            labels[p] = neighbours[p].iter().find(|&&q| core[q]).and_then(|&q| labels[q]);
        }
    }
    Ok(labels)
}

/// A label absorbed into another when two regimes became density-connected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub iteration: usize,
    pub absorbed: usize,
    pub surviving: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<Label>,
    pub n_regimes: usize,
    pub merge_log: Vec<MergeEvent>,
}

impl Labeling {
    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == Label::Noise).count()
    }
}

/// Relabel raw cluster ids by order of first appearance.
pub fn canonicalize(raw: &[Option<usize>]) -> Labeling {
    let mut map = std::collections::HashMap::new();
    let labels = raw
        .iter()
        .map(|r| match r {
            Some(id) => {
                let next = map.len();
                Label::Regime(*map.entry(*id).or_insert(next))
            }
            None => Label::Noise,
        })
        .collect();
    Labeling {
        labels,
        n_regimes: map.len(),
        merge_log: Vec::new(),
    }
}

/// Cluster the full point set and reconcile with the previous labeling so
/// that existing regimes keep their integers.
///
/// Each previous label maps to the new cluster holding most of its former
/// members. A new cluster claimed by several previous labels keeps the
/// smallest; the others are logged as merges. New clusters claimed by no
/// previous label take the smallest free integers. If a merge leaves a gap
/// that no new cluster fills, larger labels slide down to keep the range
/// contiguous.
pub fn recluster(
    distances: &DistanceMatrix,
    params: &ClusterParams,
    previous: Option<&Labeling>,
    iteration: usize,
) -> Result<Labeling> {
    let fresh = canonicalize(&dbscan_matrix(distances, params)?);
    let Some(prev) = previous else {
        return Ok(fresh);
    };
    if prev.labels.len() > fresh.labels.len() {
        return Err(Error::InvalidInput(
            "previous labeling covers more points than the current set".into(),
        ));
    }

    let k = fresh.n_regimes;
    let mut overlap = vec![vec![0usize; prev.n_regimes]; k];
    for (old, new) in prev.labels.iter().zip(&fresh.labels) {
        if let (Label::Regime(o), Label::Regime(c)) = (old, new) {
            if *o < prev.n_regimes {
                overlap[*c][*o] += 1;
            }
        }
    }

    // claimants[c]: previous labels whose majority went to new cluster c
    let mut claimants: Vec<Vec<usize>> = vec![Vec::new(); k];
    for old in 0..prev.n_regimes {
        let best = (0..k)
            .filter(|&c| overlap[c][old] > 0)
            .max_by(|&a, &b| overlap[a][old].cmp(&overlap[b][old]).then(b.cmp(&a)));
        if let Some(c) = best {
            claimants[c].push(old);
        }
    }

    let mut merge_log = prev.merge_log.clone();
    let mut assigned: Vec<Option<usize>> = vec![None; k];
    for c in 0..k {
        if let Some((&survivor, absorbed)) = claimants[c].split_first() {
            assigned[c] = Some(survivor);
            for &a in absorbed {
                merge_log.push(MergeEvent {
                    iteration,
                    absorbed: a,
                    surviving: survivor,
                });
            }
        }
    }

    let mut used: Vec<bool> = vec![false; prev.n_regimes + k];
    for a in assigned.iter().flatten() {
        used[*a] = true;
    }
    for slot in assigned.iter_mut().filter(|s| s.is_none()) {
        let free = used.iter().position(|u| !u).expect("enough slots");
        used[free] = true;
        *slot = Some(free);
    }

    // close any remaining gaps
    let mut compact = vec![0usize; used.len()];
    let mut next = 0;
    for (label, &u) in used.iter().enumerate() {
        if u {
            compact[label] = next;
            next += 1;
        }
    }

    let labels = fresh
        .labels
        .iter()
        .map(|l| match l {
            Label::Regime(c) => Label::Regime(compact[assigned[*c].unwrap()]),
            Label::Noise => Label::Noise,
        })
        .collect();
    Ok(Labeling {
        labels,
        n_regimes: k,
        merge_log,
    })
}
