//! Self-contained SVG renderings of a run directory.

use std::collections::BTreeSet;
use std::fmt::Write;

use regime_scout::explorer::Contour;

use crate::files::{GridFile, PcaRow, SampleRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 540.0;
const LEFT: f64 = 72.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
/// Room on the right for a colour bar.
const RIGHT: f64 = 96.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
];
const NOISE_COLOUR: &str = "#b0b0b0";
const FAILED_COLOUR: &str = "#000000";

// viridis, sampled at 0, .25, .5, .75, 1
const RAMP: [[f64; 3]; 5] = [
    [68.0, 1.0, 84.0],
    [59.0, 82.0, 139.0],
    [33.0, 145.0, 140.0],
    [94.0, 201.0, 98.0],
    [253.0, 231.0, 37.0],
];

pub fn label_colour(label: &str) -> &'static str {
    match label {
        "NOISE" => NOISE_COLOUR,
        "FAILED" => FAILED_COLOUR,
        s => s.parse::<usize>().map_or(FAILED_COLOUR, |k| PALETTE[k % PALETTE.len()]),
    }
}

fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let x = t * (RAMP.len() - 1) as f64;
    let i = (x.floor() as usize).min(RAMP.len() - 2);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3)
        .map(|k| (RAMP[i][k] + f * (RAMP[i + 1][k] - RAMP[i][k])).round() as u8)
        .collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Data-to-pixel map of the plotting area.
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        let widen = |(lo, hi): (f64, f64)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        };
        Frame { x: widen(x), y: widen(y) }
    }

    fn around(points: impl Iterator<Item = [f64; 2]>) -> Self {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = x;
        for p in points {
            x = (x.0.min(p[0]), x.1.max(p[0]));
            y = (y.0.min(p[1]), y.1.max(p[1]));
        }
        if !x.0.is_finite() {
            return Frame::new((0.0, 1.0), (0.0, 1.0));
        }
        let pad = |(lo, hi): (f64, f64)| {
            let d = 0.05 * (hi - lo);
            (lo - d, hi + d)
        };
        Frame::new(pad(x), pad(y))
    }

    fn px(&self, v: f64) -> f64 {
        LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            (LEFT + WIDTH - RIGHT) / 2.0,
            escape(title)
        );
        Svg { body }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (f.px(f.x.0), f.px(f.x.1), f.py(f.y.0), f.py(f.y.1));
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y0 - y1
        );
        for i in 0..=4 {
            let t = i as f64 / 4.0;
            let vx = f.x.0 + t * (f.x.1 - f.x.0);
            let vy = f.y.0 + t * (f.y.1 - f.y.0);
            let (px, py) = (f.px(vx), f.py(vy));
            let _ = writeln!(
                self.body,
                r#"<line x1="{px:.2}" y1="{y0:.2}" x2="{px:.2}" y2="{:.2}" stroke="black"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                y0 + 5.0,
                y0 + 18.0,
                tick(vx)
            );
            let _ = writeln!(
                self.body,
                r#"<line x1="{:.2}" y1="{py:.2}" x2="{x0:.2}" y2="{py:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                tick(vy)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            HEIGHT - 14.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.body,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn polylines(&mut self, f: &Frame, contours: &[Contour]) {
        for c in contours {
            for line in &c.lines {
                let pts: Vec<String> = line.iter().map(|p| format!("{:.2},{:.2}", f.px(p[0]), f.py(p[1]))).collect();
                let _ = writeln!(
                    self.body,
                    r#"<polyline class="contour" data-level="{}" points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
                    c.level,
                    pts.join(" ")
                );
            }
        }
    }

    fn legend(&mut self, labels: &BTreeSet<String>) {
        let x = WIDTH - RIGHT + 14.0;
        for (i, l) in labels.iter().enumerate() {
            let y = TOP + 10.0 + 18.0 * i as f64;
            let _ = writeln!(
                self.body,
                r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
                label_colour(l),
                x + 10.0,
                y + 4.0,
                escape(l)
            );
        }
    }

    fn colour_bar(&mut self, lo: f64, hi: f64) {
        let (x, h) = (WIDTH - RIGHT + 14.0, HEIGHT - TOP - BOTTOM);
        let steps = 64;
        for i in 0..steps {
            let t = (i as f64 + 0.5) / steps as f64;
            let y = HEIGHT - BOTTOM - (i + 1) as f64 * h / steps as f64;
            let _ = writeln!(
                self.body,
                r#"<rect x="{x:.2}" y="{y:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                h / steps as f64 + 0.5,
                ramp(t)
            );
        }
        for (v, y) in [(lo, HEIGHT - BOTTOM), (hi, TOP)] {
            let _ = writeln!(self.body, r#"<text x="{:.2}" y="{:.2}">{}</text>"#, x + 20.0, y + 4.0, tick(v));
        }
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn grid_frame(grid: &GridFile) -> Frame {
    let t = &grid.grid.ticks;
    Frame::new((t[0][0], t[0][t[0].len() - 1]), (t[1][0], t[1][t[1].len() - 1]))
}

/// Sampled points coloured by label, with the boundary polylines.
pub fn regimes(axes: &[String], samples: &[SampleRow], contours: &[Contour], grid: &GridFile) -> String {
    let f = grid_frame(grid);
    let mut svg = Svg::new("Sampled points and regime boundaries");
    svg.axes(&f, &axes[0], &axes[1]);
    for s in samples {
        let _ = writeln!(
            svg.body,
            r#"<circle class="sample" cx="{:.2}" cy="{:.2}" r="3.5" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            f.px(s.theta[0]),
            f.py(s.theta[1]),
            label_colour(&s.label)
        );
    }
    svg.polylines(&f, contours);
    svg.legend(&samples.iter().map(|s| s.label.clone()).collect());
    svg.finish()
}

fn heat_map(title: &str, grid: &GridFile, values: &[f64], contours: &[Contour]) -> String {
    let f = grid_frame(grid);
    let mut svg = Svg::new(title);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let edges = |t: &[f64], i: usize| {
        let a = if i == 0 { t[0] } else { 0.5 * (t[i - 1] + t[i]) };
        let b = if i + 1 == t.len() { t[i] } else { 0.5 * (t[i] + t[i + 1]) };
        (a, b)
    };
    let (tx, ty) = (&grid.grid.ticks[0], &grid.grid.ticks[1]);
    for (k, &v) in values.iter().enumerate() {
        let (i, j) = (k % tx.len(), k / tx.len());
        let (xa, xb) = edges(tx, i);
        let (ya, yb) = edges(ty, j);
        let _ = writeln!(
            svg.body,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            f.px(xa),
            f.py(yb),
            f.px(xb) - f.px(xa) + 0.3,
            f.py(ya) - f.py(yb) + 0.3,
            ramp((v - lo) / span)
        );
    }
    svg.axes(&f, &grid.axes[0], &grid.axes[1]);
    svg.polylines(&f, contours);
    svg.colour_bar(lo, hi);
    svg.finish()
}

/// Posterior standard deviation over the monitor grid.
pub fn uncertainty(grid: &GridFile) -> String {
    heat_map("Posterior standard deviation", grid, &grid.std, &[])
}

/// Posterior mean with its half-integer contours.
pub fn surface(grid: &GridFile, contours: &[Contour]) -> String {
    heat_map("Surrogate mean and regime boundaries", grid, &grid.mean, contours)
}

/// Embedded samples on their first two principal components.
pub fn pca(rows: &[PcaRow]) -> String {
    let f = Frame::around(rows.iter().map(|r| r.pc));
    let mut svg = Svg::new("Embeddings, first two principal components");
    svg.axes(&f, "PC 1", "PC 2");
    for r in rows {
        let _ = writeln!(
            svg.body,
            r#"<circle class="embedding" cx="{:.2}" cy="{:.2}" r="3.5" fill="{}" stroke="black" stroke-width="0.5"/>"#,
            f.px(r.pc[0]),
            f.py(r.pc[1]),
            label_colour(&r.label)
        );
    }
    svg.legend(&rows.iter().map(|r| r.label.clone()).collect());
    svg.finish()
}
