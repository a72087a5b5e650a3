//! The active-sampling loop: an initial random batch, then one
//! expected-improvement pick per iteration, re-clustering and GP refits,
//! until the surrogate is confident everywhere or the budget runs out.
//! Regime boundaries are read off the surrogate mean at half-integer levels.

mod contour;

pub use contour::{marching_squares, MonitorGrid};

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{recluster, ClusterParams, DistanceMatrix, Label, Labeling, MergeEvent};
use crate::dynamics::{simulate, ParameterBox, ParameterVector, SystemSpec};
use crate::embedding::{embed, EmbeddingConfig, EmbeddingVector};
use crate::error::{Error, Result};
use crate::gpr::{expected_improvement, fit, GpModel, Hyperparameters, Posterior, SearchBox};

/// Largest monitor grid accepted, in nodes.
pub const MAX_GRID_NODES: usize = 4_000_000;

/// Maps a parameter vector to its response embedding.
pub trait Evaluator: Sync {
    fn space(&self) -> &ParameterBox;
    fn evaluate(&self, theta: &ParameterVector) -> Result<EmbeddingVector>;
}

/// Simulate the system and embed the observed response.
#[derive(Debug, Clone)]
pub struct SimulatedSystem {
    spec: SystemSpec,
    space: ParameterBox,
    embedding: EmbeddingConfig,
}

impl SimulatedSystem {
    pub fn new(spec: SystemSpec, embedding: EmbeddingConfig) -> Result<Self> {
        spec.validate()?;
        embedding.validate()?;
        let space = spec.parameter_box()?;
        Ok(SimulatedSystem { spec, space, embedding })
    }

    pub fn spec(&self) -> &SystemSpec {
        &self.spec
    }
}

impl Evaluator for SimulatedSystem {
    fn space(&self) -> &ParameterBox {
        &self.space
    }

    fn evaluate(&self, theta: &ParameterVector) -> Result<EmbeddingVector> {
        embed(&simulate(&self.spec, theta)?, &self.embedding)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpSettings {
    pub sigma_n: (f64, f64),
    pub length_scale: (f64, f64),
    pub sigma_l_min: f64,
    /// Defaults to three times the label range plus `sigma_l_min`.
    pub sigma_l_max: Option<f64>,
    pub zeta_ei: f64,
    pub n_starts: usize,
    /// Refit hyperparameters every this many iterations, and whenever the
    /// set of regimes changes. Zero freezes them after the initial fit.
    pub refit_every: usize,
}

impl Default for GpSettings {
    fn default() -> Self {
        GpSettings {
            sigma_n: (1e-4, 0.5),
            length_scale: (0.01, 2.0),
            sigma_l_min: 0.05,
            sigma_l_max: None,
            zeta_ei: 0.01,
            n_starts: 8,
            refit_every: 1,
        }
    }
}

impl GpSettings {
    pub fn search_box(&self, targets: &[f64]) -> SearchBox {
        let range = SearchBox::default_for(targets).sigma_l.1 - 0.05;
        let hi = self.sigma_l_max.unwrap_or(range + self.sigma_l_min).max(self.sigma_l_min);
        SearchBox {
            sigma_n: self.sigma_n,
            length_scale: self.length_scale,
            sigma_l: (self.sigma_l_min, hi),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StopRule {
    /// Stop once the largest posterior std on the monitor grid drops below.
    pub zeta_stop: Option<f64>,
    /// Stop after this many loop iterations.
    pub t_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub budget: usize,
    pub initial_fraction: f64,
    pub n_candidates: usize,
    pub grid_resolution: usize,
    pub seed: u64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            budget: 200,
            initial_fraction: 0.2,
            n_candidates: 2048,
            grid_resolution: 101,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationConfig {
    pub system: SystemSpec,
    pub embedding: EmbeddingConfig,
    pub cluster: ClusterParams,
    pub gp: GpSettings,
    pub stop: StopRule,
    pub sampling: Sampling,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::ConfigInvalid(msg.into())
}

impl ExplorationConfig {
    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.embedding.validate()?;
        self.cluster.validate().map_err(|e| invalid(e.to_string()))?;
        self.validate_loop(self.system.free_axes.len())
    }

    /// Checks that do not involve the dynamical system.
    pub fn validate_loop(&self, dim: usize) -> Result<()> {
        let s = &self.sampling;
        if !(s.initial_fraction > 0.0 && s.initial_fraction < 1.0) {
            return Err(invalid(format!("initial_fraction must lie in (0, 1), got {}", s.initial_fraction)));
        }
        if s.budget < self.cluster.min_pts + 2 {
            return Err(invalid(format!(
                "budget {} is below min_pts + 2 = {}",
                s.budget,
                self.cluster.min_pts + 2
            )));
        }
        if s.n_candidates == 0 {
            return Err(invalid("n_candidates must be positive"));
        }
        if s.grid_resolution < 2 {
            return Err(invalid("grid_resolution must be at least 2"));
        }
        let nodes = (s.grid_resolution as f64).powi(dim as i32);
        if nodes > MAX_GRID_NODES as f64 {
            return Err(invalid(format!(
                "monitor grid of {} nodes exceeds {MAX_GRID_NODES}",
                nodes
            )));
        }
        if self.stop.zeta_stop.is_none() && self.stop.t_max.is_none() {
            return Err(invalid("set zeta_stop, t_max or both"));
        }
        if let Some(z) = self.stop.zeta_stop {
            if !(z >= 0.0 && z.is_finite()) {
                return Err(invalid(format!("zeta_stop must be finite and non-negative, got {z}")));
            }
        }
        let g = &self.gp;
        if !(g.zeta_ei >= 0.0 && g.zeta_ei.is_finite()) {
            return Err(invalid(format!("zeta_ei must be finite and non-negative, got {}", g.zeta_ei)));
        }
        if g.n_starts == 0 {
            return Err(invalid("n_starts must be positive"));
        }
        g.search_box(&[0.0, 1.0]).validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    /// Size of the up-front random batch.
    pub fn initial_count(&self) -> usize {
        let s = &self.sampling;
        ((s.initial_fraction * s.budget as f64 - 1e-9).ceil() as usize).clamp(1, s.budget)
    }
}

/// Current label of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleLabel {
    Regime(usize),
    Noise,
    /// The simulation diverged.
    Failed,
}

impl std::fmt::Display for SampleLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SampleLabel::Regime(r) => write!(f, "{r}"),
            SampleLabel::Noise => f.write_str("NOISE"),
            SampleLabel::Failed => f.write_str("FAILED"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub theta: ParameterVector,
    /// 0 for the initial batch.
    pub iteration: usize,
    /// Expected improvement when the sample was chosen.
    pub ei: Option<f64>,
    pub label: SampleLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub theta: Vec<f64>,
    pub ei: f64,
    pub label: SampleLabel,
    pub max_std: f64,
    pub n_regimes: usize,
    pub merges: Vec<MergeEvent>,
    /// Objective value when the hyperparameters were refitted this step.
    pub nlml: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Uncertainty,
    TMax,
    Budget,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Uncertainty => "uncertainty",
            StopReason::TMax => "t_max",
            StopReason::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPosterior {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GridPosterior {
    pub fn max_std(&self) -> f64 {
        self.std.iter().cloned().fold(0.0, f64::max)
    }
}

/// Isolines of the surrogate mean at one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub level: f64,
    pub lines: Vec<Vec<[f64; 2]>>,
}

/// `n` points drawn uniformly in `space`; stream 0 of the seeded generator.
pub fn initial_sample(space: &ParameterBox, n: usize, seed: u64) -> Vec<ParameterVector> {
    uniform_points(space, n, seed, 0)
}

/// Fresh candidate pool for loop iteration `iteration` (streams 1, 2, ...).
pub fn candidate_pool(space: &ParameterBox, n: usize, seed: u64, iteration: usize) -> Vec<ParameterVector> {
    uniform_points(space, n, seed, iteration as u64)
}

fn uniform_points(space: &ParameterBox, n: usize, seed: u64, stream: u64) -> Vec<ParameterVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    (0..n)
        .map(|_| {
            ParameterVector(
                space
                    .axes()
                    .iter()
                    .map(|a| a.lower + rng.random::<f64>() * (a.upper - a.lower))
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub theta: ParameterVector,
    pub index: usize,
    pub ei: f64,
    pub posterior: Posterior,
}

fn bits(theta: &[f64]) -> Vec<u64> {
    theta.iter().map(|v| v.to_bits()).collect()
}

/// The candidate with the largest expected improvement, skipping exact
/// repeats of `sampled`. Ties go to the lowest index; when every candidate
/// scores zero the most uncertain one is taken instead.
pub fn select_next(
    model: &GpModel,
    sampled: &[ParameterVector],
    candidates: &[ParameterVector],
    beta_max: f64,
    zeta_ei: f64,
) -> Result<Selection> {
    let seen: HashSet<Vec<u64>> = sampled.iter().map(|t| bits(t)).collect();
    let pool: Vec<usize> = (0..candidates.len()).filter(|&i| !seen.contains(&bits(&candidates[i]))).collect();
    if pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let scored: Vec<(Posterior, f64)> = pool
        .par_iter()
        .map(|&i| {
            let p = model.predict(&candidates[i]);
            (p, expected_improvement(&p, beta_max, zeta_ei))
        })
        .collect();
    let mut best = 0;
    for k in 1..pool.len() {
        if scored[k].1 > scored[best].1 {
            best = k;
        }
    }
    if !(scored[best].1 > 0.0) {
        best = 0;
        for k in 1..pool.len() {
            if scored[k].0.std > scored[best].0.std {
                best = k;
            }
        }
    }
    let index = pool[best];
    Ok(Selection {
        theta: candidates[index].clone(),
        index,
        ei: scored[best].1,
        posterior: scored[best].0,
    })
}

/// Rounded surrogate mean, clamped to the known regimes.
pub fn classify(model: &GpModel, theta: &[f64], n_regimes: usize) -> usize {
    classify_value(model.predict(theta).mean, n_regimes)
}

/// Round half away from zero, clamp to `0..n_regimes`.
pub fn classify_value(mean: f64, n_regimes: usize) -> usize {
    let top = n_regimes.saturating_sub(1) as f64;
    mean.round().clamp(0.0, top) as usize
}

/// Half-integer levels separating `n_regimes` consecutive labels.
pub fn boundary_levels(n_regimes: usize) -> Vec<f64> {
    (1..n_regimes).map(|k| k as f64 - 0.5).collect()
}

/// Contours of a mean field given on a 2-D monitor grid.
pub fn contours_from_grid(grid: &MonitorGrid, mean: &[f64], n_regimes: usize) -> Vec<Contour> {
    if grid.dim() != 2 {
        return Vec::new();
    }
    boundary_levels(n_regimes)
        .into_iter()
        .map(|level| Contour {
            level,
            lines: marching_squares(mean, &grid.ticks[0], &grid.ticks[1], level),
        })
        .collect()
}

pub fn predict_grid(model: &GpModel, grid: &MonitorGrid) -> GridPosterior {
    let posts: Vec<Posterior> = (0..grid.len()).into_par_iter().map(|k| model.predict(&grid.node(k))).collect();
    GridPosterior {
        mean: posts.iter().map(|p| p.mean).collect(),
        std: posts.iter().map(|p| p.std).collect(),
    }
}

/// Boundary polylines of the surrogate between `n_regimes` regimes.
pub fn extract_boundaries(model: &GpModel, grid: &MonitorGrid, n_regimes: usize) -> Vec<Contour> {
    contours_from_grid(grid, &predict_grid(model, grid).mean, n_regimes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub samples: Vec<Sample>,
    /// Embeddings of the samples that did not fail, in sampling order.
    pub embeddings: Vec<EmbeddingVector>,
    /// `embedded[k]` is the sample index of `embeddings[k]`.
    pub embedded: Vec<usize>,
    pub labeling: Labeling,
    pub n_regimes: usize,
    pub hyper: Hyperparameters,
    pub nlml: Option<f64>,
    pub grid: MonitorGrid,
    pub posterior: GridPosterior,
    pub contours: Vec<Contour>,
    pub log: Vec<IterationRecord>,
    pub stop_reason: StopReason,
    pub evaluations: usize,
    #[serde(skip)]
    pub model: Option<GpModel>,
}

impl RunReport {
    pub fn model(&self) -> &GpModel {
        self.model.as_ref().expect("report carries its model")
    }

    pub fn classify(&self, theta: &[f64]) -> usize {
        classify(self.model(), theta, self.n_regimes)
    }
}

/// Samples in sampling order plus what the clustering needs.
#[derive(Debug, Clone, Default)]
struct Dataset {
    samples: Vec<Sample>,
    embeddings: Vec<EmbeddingVector>,
    embedded: Vec<usize>,
    distances: DistanceMatrix,
}

impl Dataset {
    fn record(&mut self, theta: ParameterVector, outcome: Result<EmbeddingVector>, iteration: usize, ei: Option<f64>) -> Result<()> {
        let label = match outcome {
            Ok(e) => {
                self.distances.push(e.as_slice())?;
                self.embedded.push(self.samples.len());
                self.embeddings.push(e);
                SampleLabel::Noise
            }
            Err(Error::NonFinite { .. }) => SampleLabel::Failed,
            Err(e) => return Err(e),
        };
        self.samples.push(Sample {
            theta,
            iteration,
            ei,
            label,
        });
        Ok(())
    }

    fn apply(&mut self, labeling: &Labeling) {
        for (k, &i) in self.embedded.iter().enumerate() {
            self.samples[i].label = match labeling.labels[k] {
                Label::Regime(r) => SampleLabel::Regime(r),
                Label::Noise => SampleLabel::Noise,
            };
        }
    }

    fn training(&self) -> (Vec<ParameterVector>, Vec<f64>) {
        self.samples
            .iter()
            .filter_map(|s| match s.label {
                SampleLabel::Regime(r) => Some((s.theta.clone(), r as f64)),
                _ => None,
            })
            .unzip()
    }
}

struct Surrogate {
    hyper: Hyperparameters,
    /// Set when the hyperparameters were refitted.
    nlml: Option<f64>,
    model: GpModel,
}

/// Condition on the labeled samples, refitting hyperparameters when
/// `previous` is `None`.
fn condition(
    config: &ExplorationConfig,
    space: &ParameterBox,
    data: &Dataset,
    previous: Option<Hyperparameters>,
    iteration: usize,
) -> Result<Surrogate> {
    let (thetas, targets) = data.training();
    let (hyper, nlml) = match previous {
        Some(h) => (h, None),
        None => {
            let search_box = config.gp.search_box(&targets);
            if thetas.len() >= 2 {
                let inputs: Vec<Vec<f64>> = thetas.iter().map(|t| space.to_unit(t)).collect();
                let seed = config.sampling.seed.wrapping_add(iteration as u64);
                let r = fit(&inputs, &targets, &search_box, config.gp.n_starts, seed)?;
                (r.hyper, Some(r.nlml))
            } else {
                (search_box.centre(), None)
            }
        }
    };
    let model = GpModel::new(space.clone(), &thetas, targets, hyper)?;
    Ok(Surrogate { hyper, nlml, model })
}

/// Live state of one exploration.
pub struct Explorer<E: Evaluator> {
    config: ExplorationConfig,
    evaluator: E,
    data: Dataset,
    labeling: Labeling,
    surrogate: Surrogate,
    last_nlml: Option<f64>,
    grid: MonitorGrid,
    posterior: GridPosterior,
    iteration: usize,
    log: Vec<IterationRecord>,
}

/// Run an exploration of the configured system.
pub fn run(config: &ExplorationConfig) -> Result<RunReport> {
    config.validate()?;
    let system = SimulatedSystem::new(config.system.clone(), config.embedding)?;
    Explorer::start(config.clone(), system)?.run()
}

impl<E: Evaluator> Explorer<E> {
    /// Evaluate the initial batch, cluster it and fit the first surrogate.
    pub fn start(config: ExplorationConfig, evaluator: E) -> Result<Self> {
        config.cluster.validate().map_err(|e| invalid(e.to_string()))?;
        config.validate_loop(evaluator.space().dim())?;
        let space = evaluator.space().clone();
        let thetas = initial_sample(&space, config.initial_count(), config.sampling.seed);
        let outcomes: Vec<Result<EmbeddingVector>> = thetas.par_iter().map(|t| evaluator.evaluate(t)).collect();
        let mut data = Dataset::default();
        for (theta, outcome) in thetas.into_iter().zip(outcomes) {
            data.record(theta, outcome, 0, None)?;
        }
        let labeling = recluster(&data.distances, &config.cluster, None, 0)?;
        data.apply(&labeling);
        if labeling.n_regimes == 0 {
            return Err(Error::DegenerateClustering {
                samples: data.samples.len(),
                noise: data.samples.len() - data.training().1.len(),
            });
        }
        let surrogate = condition(&config, &space, &data, None, 0)?;
        let grid = MonitorGrid::new(&space, config.sampling.grid_resolution);
        let posterior = predict_grid(&surrogate.model, &grid);
        Ok(Explorer {
            last_nlml: surrogate.nlml,
            config,
            evaluator,
            data,
            labeling,
            surrogate,
            grid,
            posterior,
            iteration: 0,
            log: Vec::new(),
        })
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn samples(&self) -> &[Sample] {
        &self.data.samples
    }

    pub fn labeling(&self) -> &Labeling {
        &self.labeling
    }

    pub fn model(&self) -> &GpModel {
        &self.surrogate.model
    }

    pub fn max_std(&self) -> f64 {
        self.posterior.max_std()
    }

    /// Simulations run so far, failed ones included.
    pub fn evaluations(&self) -> usize {
        self.data.samples.len()
    }

    fn beta_max(&self) -> f64 {
        self.surrogate.model.targets().iter().cloned().fold(0.0, f64::max)
    }

    /// Why the loop should stop now, if it should.
    pub fn stop_reason(&self) -> Option<StopReason> {
        let stop = &self.config.stop;
        if stop.zeta_stop.is_some_and(|z| self.max_std() < z) {
            return Some(StopReason::Uncertainty);
        }
        if stop.t_max.is_some_and(|t| self.iteration >= t) {
            return Some(StopReason::TMax);
        }
        if self.data.samples.len() >= self.config.sampling.budget {
            return Some(StopReason::Budget);
        }
        None
    }

    /// One acquisition, evaluation, recluster and refit.
    pub fn step(&mut self) -> Result<()> {
        let t = self.iteration + 1;
        let space = self.evaluator.space().clone();
        let candidates = candidate_pool(&space, self.config.sampling.n_candidates, self.config.sampling.seed, t);
        let sampled: Vec<ParameterVector> = self.data.samples.iter().map(|s| s.theta.clone()).collect();
        let pick = select_next(&self.surrogate.model, &sampled, &candidates, self.beta_max(), self.config.gp.zeta_ei)?;
        let outcome = self.evaluator.evaluate(&pick.theta);
        self.data.record(pick.theta.clone(), outcome, t, Some(pick.ei))?;
        self.iteration = t;

        let before = (self.labeling.n_regimes, self.labeling.merge_log.len());
        self.labeling = recluster(&self.data.distances, &self.config.cluster, Some(&self.labeling), t)?;
        self.data.apply(&self.labeling);
        let merges = self.labeling.merge_log[before.1..].to_vec();
        let changed = self.labeling.n_regimes != before.0 || !merges.is_empty();
        let every = self.config.gp.refit_every;
        let refit = every > 0 && (changed || t.is_multiple_of(every));
        let keep = if refit { None } else { Some(self.surrogate.hyper) };
        self.surrogate = condition(&self.config, &space, &self.data, keep, t)?;
        if self.surrogate.nlml.is_some() {
            self.last_nlml = self.surrogate.nlml;
        }
        self.posterior = predict_grid(&self.surrogate.model, &self.grid);

        self.log.push(IterationRecord {
            iteration: t,
            theta: pick.theta.0,
            ei: pick.ei,
            label: self.data.samples.last().expect("just recorded").label,
            max_std: self.max_std(),
            n_regimes: self.labeling.n_regimes,
            merges,
            nlml: self.surrogate.nlml,
        });
        Ok(())
    }

    /// Step until a stopping rule fires, then extract boundaries.
    pub fn run(mut self) -> Result<RunReport> {
        let reason = loop {
            if let Some(r) = self.stop_reason() {
                break r;
            }
            self.step()?;
        };
        Ok(self.finish(reason))
    }

    pub fn finish(self, stop_reason: StopReason) -> RunReport {
        let contours = contours_from_grid(&self.grid, &self.posterior.mean, self.labeling.n_regimes);
        RunReport {
            evaluations: self.data.samples.len(),
            samples: self.data.samples,
            embeddings: self.data.embeddings,
            embedded: self.data.embedded,
            n_regimes: self.labeling.n_regimes,
            labeling: self.labeling,
            hyper: self.surrogate.hyper,
            nlml: self.last_nlml,
            grid: self.grid,
            posterior: self.posterior,
            contours,
            log: self.log,
            stop_reason,
            model: Some(self.surrogate.model),
        }
    }
}
