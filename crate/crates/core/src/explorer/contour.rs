//! Monitor grid and marching-squares level sets.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ParameterBox, ParameterVector};

/// Tensor grid over the parameter box, `resolution` nodes per axis. Node
/// `k` has per-axis indices given by the mixed-radix digits of `k`, axis 0
/// varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorGrid {
    pub resolution: usize,
    /// Node coordinates per axis, in parameter units.
    pub ticks: Vec<Vec<f64>>,
}

impl MonitorGrid {
    pub fn new(space: &ParameterBox, resolution: usize) -> Self {
        let ticks = space
            .axes()
            .iter()
            .map(|a| {
                (0..resolution)
                    .map(|i| {
                        if resolution == 1 {
                            0.5 * (a.lower + a.upper)
                        } else if i + 1 == resolution {
                            a.upper
                        } else {
                            a.lower + (a.upper - a.lower) * i as f64 / (resolution - 1) as f64
                        }
                    })
                    .collect()
            })
            .collect();
        MonitorGrid { resolution, ticks }
    }

    pub fn dim(&self) -> usize {
        self.ticks.len()
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, mut k: usize) -> ParameterVector {
        let mut theta = Vec::with_capacity(self.dim());
        for t in &self.ticks {
            theta.push(t[k % self.resolution]);
            k /= self.resolution;
        }
        ParameterVector(theta)
    }

    pub fn nodes(&self) -> Vec<ParameterVector> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    /// Between nodes (i, j) and (i + 1, j).
    Horizontal(usize, usize),
    /// Between nodes (i, j) and (i, j + 1).
    Vertical(usize, usize),
}

/// Level-`level` isolines of a field sampled on a rectilinear grid.
/// `values[j * xs.len() + i]` is the value at `(xs[i], ys[j])`. Open lines
/// run between grid edges; closed loops repeat their first vertex at the
/// end. Saddle cells are split according to the mean of the four corners.
pub fn marching_squares(values: &[f64], xs: &[f64], ys: &[f64], level: f64) -> Vec<Vec<[f64; 2]>> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(values.len(), nx * ny, "grid size mismatch");
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let v = |i: usize, j: usize| values[j * nx + i];
    let high = |x: f64| x > level;

    let mut segments: Vec<[Edge; 2]> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let (bl, br, tr, tl) = (v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1));
            let case = high(bl) as u8 | (high(br) as u8) << 1 | (high(tr) as u8) << 2 | (high(tl) as u8) << 3;
            let b = Edge::Horizontal(i, j);
            let r = Edge::Vertical(i + 1, j);
            let t = Edge::Horizontal(i, j + 1);
            let l = Edge::Vertical(i, j);
            let centre_high = high(0.25 * (bl + br + tr + tl));
            match case {
                0 | 15 => {}
                1 | 14 => segments.push([l, b]),
                2 | 13 => segments.push([b, r]),
                3 | 12 => segments.push([l, r]),
                4 | 11 => segments.push([r, t]),
                6 | 9 => segments.push([b, t]),
                7 | 8 => segments.push([l, t]),
                5 => {
                    if centre_high {
                        segments.push([b, r]);
                        segments.push([l, t]);
                    } else {
                        segments.push([l, b]);
                        segments.push([r, t]);
                    }
                }
                10 => {
                    if centre_high {
                        segments.push([l, b]);
                        segments.push([r, t]);
                    } else {
                        segments.push([b, r]);
                        segments.push([l, t]);
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let point = |e: Edge| -> [f64; 2] {
        match e {
            Edge::Horizontal(i, j) => {
                let s = (level - v(i, j)) / (v(i + 1, j) - v(i, j));
                [xs[i] + s * (xs[i + 1] - xs[i]), ys[j]]
            }
            Edge::Vertical(i, j) => {
                let s = (level - v(i, j)) / (v(i, j + 1) - v(i, j));
                [xs[i], ys[j] + s * (ys[j + 1] - ys[j])]
            }
        }
    };

    let mut incident: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, seg) in segments.iter().enumerate() {
        for e in seg {
            incident.entry(*e).or_default().push(k);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let trace = |start: usize, from: Edge, used: &mut Vec<bool>| {
        let mut line = vec![point(from)];
        let (mut seg, mut at) = (start, from);
        loop {
            used[seg] = true;
            let [a, b] = segments[seg];
            let next = if a == at { b } else { a };
            line.push(point(next));
            at = next;
            match incident[&at].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => break,
            }
        }
        line
    };
    // open lines first, starting from an end that touches the grid border
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        if let Some(&end) = segments[k].iter().find(|e| incident[e].len() == 1) {
            lines.push(trace(k, end, &mut used));
        }
    }
    for k in 0..segments.len() {
        if !used[k] {
            lines.push(trace(k, segments[k][0], &mut used));
        }
    }
    lines
}
