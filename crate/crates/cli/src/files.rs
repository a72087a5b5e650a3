//! On-disk formats of a run directory. Floats are written with 17
//! significant digits so every value reads back bit-for-bit.

use std::fs;
use std::path::Path;

use regime_scout::clustering::MergeEvent;
use regime_scout::embedding::pca_project;
use regime_scout::explorer::{
    boundary_levels, contours_from_grid, Contour, MonitorGrid, RunReport, SampleLabel, StopReason,
};
use regime_scout::Hyperparameters;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SAMPLES: &str = "samples.csv";
pub const GRID: &str = "grid.csv";
pub const CONTOURS: &str = "contours.csv";
pub const PCA: &str = "embedding_pca.csv";
pub const RUN_LOG: &str = "run_log.jsonl";
pub const REPORT: &str = "report.json";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str, what: &str) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::usage(format!("{what}: not a number: {s:?}")))
}

fn to_csv(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// Header and records of a CSV file.
fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::reading(path, e))?;
    let header = r
        .headers()
        .map_err(|e| CliError::reading(path, e))?
        .iter()
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| CliError::reading(path, e))?;
        rows.push(rec.iter().map(String::from).collect());
    }
    Ok((header, rows))
}

pub(crate) fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::writing(path, e))
}

pub fn samples_csv(report: &RunReport, axes: &[String]) -> String {
    let mut header = vec!["iteration".to_string()];
    header.extend(axes.iter().cloned());
    header.push("label".into());
    header.push("ei".into());
    let rows = report.samples.iter().map(|s| {
        let mut row = vec![s.iteration.to_string()];
        row.extend(s.theta.iter().map(|&v| fmt_f64(v)));
        row.push(s.label.to_string());
        row.push(s.ei.map(fmt_f64).unwrap_or_default());
        row
    });
    to_csv(&header, rows)
}

pub fn grid_csv(grid: &MonitorGrid, mean: &[f64], std: &[f64], axes: &[String]) -> String {
    let mut header: Vec<String> = axes.to_vec();
    header.push("mean".into());
    header.push("std".into());
    let rows = (0..grid.len()).map(|k| {
        let mut row: Vec<String> = grid.node(k).iter().map(|&v| fmt_f64(v)).collect();
        row.push(fmt_f64(mean[k]));
        row.push(fmt_f64(std[k]));
        row
    });
    to_csv(&header, rows)
}

pub fn contours_csv(contours: &[Contour], axes: &[String]) -> String {
    let mut header = vec!["level".to_string(), "line".into(), "vertex".into()];
    header.extend(axes.iter().take(2).cloned());
    let mut rows = Vec::new();
    for c in contours {
        for (l, line) in c.lines.iter().enumerate() {
            for (v, p) in line.iter().enumerate() {
                rows.push(vec![fmt_f64(c.level), l.to_string(), v.to_string(), fmt_f64(p[0]), fmt_f64(p[1])]);
            }
        }
    }
    to_csv(&header, rows)
}

/// 2-D principal-component coordinates of the embedded samples.
pub fn pca_csv(report: &RunReport) -> Result<String, CliError> {
    let header = ["sample", "pc1", "pc2", "label"].map(String::from);
    let n = report.embeddings.len();
    let m = report.embeddings.first().map_or(0, |e| e.len());
    let k = 2.min(n).min(m);
    let coords = if k == 0 {
        Vec::new()
    } else {
        pca_project(&report.embeddings, k)?.coordinates
    };
    let rows = coords.iter().zip(&report.embedded).map(|(c, &i)| {
        vec![
            i.to_string(),
            fmt_f64(c[0]),
            fmt_f64(c.get(1).copied().unwrap_or(0.0)),
            report.samples[i].label.to_string(),
        ]
    });
    Ok(to_csv(&header, rows))
}

pub fn run_log_jsonl(report: &RunReport) -> String {
    let mut out = String::new();
    for rec in &report.log {
        out.push_str(&serde_json::to_string(rec).expect("log records serialize"));
        out.push('\n');
    }
    out
}

/// Summary written to `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub system: String,
    pub axes: Vec<String>,
    pub stop_reason: StopReason,
    pub n_regimes: usize,
    pub regime_counts: Vec<usize>,
    pub noise: usize,
    pub failed: usize,
    pub evaluations: usize,
    pub iterations: usize,
    pub max_std: f64,
    pub hyperparameters: Hyperparameters,
    pub nlml: Option<f64>,
    pub boundary_levels: Vec<f64>,
    pub grid_resolution: usize,
    pub merge_log: Vec<MergeEvent>,
}

impl ReportFile {
    pub fn new(system: &str, axes: &[String], report: &RunReport) -> Self {
        let count = |want: SampleLabel| report.samples.iter().filter(|s| s.label == want).count();
        ReportFile {
            system: system.to_string(),
            axes: axes.to_vec(),
            stop_reason: report.stop_reason,
            n_regimes: report.n_regimes,
            regime_counts: (0..report.n_regimes).map(|r| count(SampleLabel::Regime(r))).collect(),
            noise: count(SampleLabel::Noise),
            failed: count(SampleLabel::Failed),
            evaluations: report.evaluations,
            iterations: report.log.len(),
            max_std: report.posterior.max_std(),
            hyperparameters: report.hyper,
            nlml: report.nlml,
            boundary_levels: boundary_levels(report.n_regimes),
            grid_resolution: report.grid.resolution,
            merge_log: report.labeling.merge_log.clone(),
        }
    }
}

/// Every output file of a finished run.
pub fn write_run(dir: &Path, system: &str, axes: &[String], report: &RunReport) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::writing(dir, e))?;
    write(&dir.join(SAMPLES), &samples_csv(report, axes))?;
    write(
        &dir.join(GRID),
        &grid_csv(&report.grid, &report.posterior.mean, &report.posterior.std, axes),
    )?;
    write(&dir.join(CONTOURS), &contours_csv(&report.contours, axes))?;
    write(&dir.join(PCA), &pca_csv(report)?)?;
    write(&dir.join(RUN_LOG), &run_log_jsonl(report))?;
    let json = serde_json::to_string_pretty(&ReportFile::new(system, axes, report)).expect("report serializes");
    write(&dir.join(REPORT), &(json + "\n"))
}

pub fn read_report(dir: &Path) -> Result<ReportFile, CliError> {
    let path = dir.join(REPORT);
    let text = fs::read_to_string(&path).map_err(|e| CliError::reading(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::reading(&path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    pub iteration: usize,
    pub theta: Vec<f64>,
    /// Regime number, `NOISE` or `FAILED`.
    pub label: String,
    pub ei: Option<f64>,
}

pub fn read_samples(dir: &Path) -> Result<(Vec<String>, Vec<SampleRow>), CliError> {
    let path = dir.join(SAMPLES);
    let (header, rows) = read_csv(&path)?;
    if header.len() < 3 {
        return Err(CliError::reading(&path, "too few columns"));
    }
    let dim = header.len() - 3;
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let iteration = row[0]
            .parse()
            .map_err(|_| CliError::reading(&path, format!("bad iteration {:?}", row[0])))?;
        let theta = row[1..=dim].iter().map(|s| parse_f64(s, SAMPLES)).collect::<Result<_, _>>()?;
        let ei = match row[dim + 2].as_str() {
            "" => None,
            s => Some(parse_f64(s, SAMPLES)?),
        };
        out.push(SampleRow {
            iteration,
            theta,
            label: row[dim + 1].clone(),
            ei,
        });
    }
    Ok((header[1..=dim].to_vec(), out))
}

/// Monitor grid and posterior read back from `grid.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub axes: Vec<String>,
    pub grid: MonitorGrid,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn read_grid(dir: &Path) -> Result<GridFile, CliError> {
    let path = dir.join(GRID);
    let (header, rows) = read_csv(&path)?;
    if header.len() < 3 || rows.is_empty() {
        return Err(CliError::reading(&path, "no grid nodes"));
    }
    let dim = header.len() - 2;
    let mut nodes = Vec::with_capacity(rows.len());
    let (mut mean, mut std) = (Vec::new(), Vec::new());
    for row in &rows {
        let v: Vec<f64> = row.iter().map(|s| parse_f64(s, GRID)).collect::<Result<_, _>>()?;
        nodes.push(v[..dim].to_vec());
        mean.push(v[dim]);
        std.push(v[dim + 1]);
    }
    let resolution = (rows.len() as f64).powf(1.0 / dim as f64).round() as usize;
    if resolution.pow(dim as u32) != rows.len() {
        return Err(CliError::reading(&path, "row count is not a full tensor grid"));
    }
    let ticks = (0..dim)
        .map(|j| (0..resolution).map(|i| nodes[i * resolution.pow(j as u32)][j]).collect())
        .collect();
    Ok(GridFile {
        axes: header[..dim].to_vec(),
        grid: MonitorGrid { resolution, ticks },
        mean,
        std,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourFile {
    pub axes: Vec<String>,
    pub contours: Vec<Contour>,
}

pub fn read_contours(dir: &Path) -> Result<ContourFile, CliError> {
    let path = dir.join(CONTOURS);
    let (header, rows) = read_csv(&path)?;
    if header.len() != 5 {
        return Err(CliError::reading(&path, "expected level, line, vertex and two coordinates"));
    }
    let mut contours: Vec<Contour> = Vec::new();
    for row in rows {
        let level = parse_f64(&row[0], CONTOURS)?;
        let line: usize = row[1]
            .parse()
            .map_err(|_| CliError::reading(&path, format!("bad line id {:?}", row[1])))?;
        let p = [parse_f64(&row[3], CONTOURS)?, parse_f64(&row[4], CONTOURS)?];
        if contours.last().is_none_or(|c| c.level != level) {
            contours.push(Contour { level, lines: Vec::new() });
        }
        let c = contours.last_mut().expect("just pushed");
        if line == c.lines.len() {
            c.lines.push(Vec::new());
        }
        c.lines
            .last_mut()
            .ok_or_else(|| CliError::reading(&path, "vertex before its line"))?
            .push(p);
    }
    Ok(ContourFile {
        axes: header[3..].to_vec(),
        contours,
    })
}

/// Re-derive the boundary polylines from a saved `grid.csv`.
pub fn replay_contours(dir: &Path) -> Result<Vec<Contour>, CliError> {
    let grid = read_grid(dir)?;
    let report = read_report(dir)?;
    Ok(contours_from_grid(&grid.grid, &grid.mean, report.n_regimes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaRow {
    pub sample: usize,
    pub pc: [f64; 2],
    pub label: String,
}

pub fn read_pca(dir: &Path) -> Result<Vec<PcaRow>, CliError> {
    let path = dir.join(PCA);
    let (_, rows) = read_csv(&path)?;
    rows.into_iter()
        .map(|row| {
            if row.len() != 4 {
                return Err(CliError::reading(&path, "expected 4 columns"));
            }
            Ok(PcaRow {
                sample: row[0]
                    .parse()
                    .map_err(|_| CliError::reading(&path, format!("bad sample index {:?}", row[0])))?,
                pc: [parse_f64(&row[1], PCA)?, parse_f64(&row[2], PCA)?],
                label: row[3].clone(),
            })
        })
        .collect()
}
