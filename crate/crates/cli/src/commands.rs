//! The four subcommands, callable without going through the binary.

use std::fs;
use std::path::Path;

use regime_scout::dynamics::oracle::oracle_grid;
use regime_scout::dynamics::simulate_states;
use regime_scout::explorer::{Explorer, SimulatedSystem};
use regime_scout::{Error, ParameterVector};

use crate::config::{self, RunConfigFile};
use crate::error::CliError;
use crate::files::{self, fmt_f64};
use crate::plot;

/// Read and parse a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfigFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::reading(path, e))?;
    Ok(config::parse(&text)?)
}

fn axis_names(cfg: &RunConfigFile) -> Vec<String> {
    cfg.system.free_axes.iter().map(|a| a.name.clone()).collect()
}

/// Configuration-shaped core errors are the user's to fix.
fn classify(e: Error) -> CliError {
    match e {
        Error::ConfigInvalid(_) | Error::InvalidSpec(_) | Error::InvalidEmbedding(_) => CliError::usage(e),
        e => CliError::runtime(e),
    }
}

/// Run the active-sampling loop and write the run directory.
pub fn explore(config_path: &Path, out: &Path, progress: bool) -> Result<files::ReportFile, CliError> {
    let cfg = load_config(config_path)?;
    let exploration = cfg.to_exploration()?;
    let axes = axis_names(&cfg);
    let system = SimulatedSystem::new(exploration.system.clone(), exploration.embedding).map_err(classify)?;
    let mut explorer = Explorer::start(exploration, system).map_err(classify)?;
    if progress {
        eprintln!(
            "initial batch: {} samples, {} regimes, max std {:.4}",
            explorer.evaluations(),
            explorer.labeling().n_regimes,
            explorer.max_std()
        );
    }
    let reason = loop {
        if let Some(r) = explorer.stop_reason() {
            break r;
        }
        explorer.step().map_err(classify)?;
        if progress && explorer.iteration() % 10 == 0 {
            eprintln!(
                "iteration {}: {} regimes, max std {:.4}",
                explorer.iteration(),
                explorer.labeling().n_regimes,
                explorer.max_std()
            );
        }
    };
    let report = explorer.finish(reason);
    files::write_run(out, cfg.system.kind.name(), &axes, &report)?;
    Ok(files::ReportFile::new(cfg.system.kind.name(), &axes, &report))
}

/// Parse a comma-separated parameter vector of the configured arity.
pub fn parse_theta(text: &str, arity: usize) -> Result<ParameterVector, CliError> {
    let values = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| CliError::usage(format!("--theta: cannot parse {text:?} as comma-separated numbers")))?;
    if values.len() != arity {
        return Err(CliError::usage(format!(
            "--theta: expected {arity} components (one per free axis), got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::usage("--theta: components must be finite"));
    }
    Ok(ParameterVector(values))
}

/// Integrate one parameter point and write the full state history.
pub fn simulate(config_path: &Path, theta: &str, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let spec = cfg.system_spec()?;
    let theta = parse_theta(theta, spec.free_axes.len())?;
    let ts = simulate_states(&spec, &theta).map_err(|e| match e {
        Error::InvalidParameter(_) => CliError::usage(e),
        e => classify(e),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    header.extend(ts.channels.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::writing(out, e))?;
    for k in 0..ts.n_samples() {
        let mut row = vec![fmt_f64(ts.time(k))];
        row.extend(ts.values.iter().map(|c| fmt_f64(c[k])));
        w.write_record(&row).map_err(|e| CliError::writing(out, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::writing(out, e))?;
    fs::write(out, bytes).map_err(|e| CliError::writing(out, e))
}

/// Brute-force ground truth on an `r` x `r` grid of a 2-D plane.
pub fn oracle(config_path: &Path, resolution: usize, out: &Path) -> Result<(), CliError> {
    let cfg = load_config(config_path)?;
    let spec = cfg.system_spec()?;
    if spec.free_axes.len() != 2 {
        return Err(CliError::usage(format!(
            "oracle needs a 2-D parameter plane, the config has {} free axes",
            spec.free_axes.len()
        )));
    }
    if resolution < 2 {
        return Err(CliError::usage("--grid must be at least 2"));
    }
    let (grid, labels) = oracle_grid(&spec, resolution).map_err(|e| match e {
        Error::InvalidInput(_) => CliError::usage(e),
        e => classify(e),
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = axis_names(&cfg);
    header.push("oracle_label".into());
    header.push("regime".into());
    w.write_record(&header).map_err(|e| CliError::writing(out, e))?;
    for (k, label) in labels.iter().enumerate() {
        let mut row: Vec<String> = grid.node(k).iter().map(|&v| fmt_f64(v)).collect();
        row.push(label.index().to_string());
        row.push(label.name().to_string());
        w.write_record(&row).map_err(|e| CliError::writing(out, e))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::writing(out, e))?;
    fs::write(out, bytes).map_err(|e| CliError::writing(out, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[derive(clap::ValueEnum)]
pub enum Figure {
    Regimes,
    Uncertainty,
    Surface,
    Pca,
}

/// Render one figure of a run directory as SVG.
pub fn render(run: &Path, fig: Figure) -> Result<String, CliError> {
    if fig == Figure::Pca {
        return Ok(plot::pca(&files::read_pca(run)?));
    }
    let grid = files::read_grid(run)?;
    if grid.grid.dim() != 2 {
        return Err(CliError::usage(format!(
            "the {fig:?} figure needs a 2-D run, this one has {} axes",
            grid.grid.dim()
        )));
    }
    Ok(match fig {
        Figure::Regimes => {
            let (axes, samples) = files::read_samples(run)?;
            plot::regimes(&axes, &samples, &files::read_contours(run)?.contours, &grid)
        }
        Figure::Uncertainty => plot::uncertainty(&grid),
        Figure::Surface => plot::surface(&grid, &files::read_contours(run)?.contours),
        Figure::Pca => unreachable!(),
    })
}

pub fn plot(run: &Path, fig: Figure, out: &Path) -> Result<(), CliError> {
    let svg = render(run, fig)?;
    files::write(out, &svg)
}
