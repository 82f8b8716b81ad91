use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{Fit, FitKind, MIN_FIT_POINTS};
use crate::cae::{evaluate, train, ChartAutoencoder, TrainConfig, DEFAULT_HIDDEN};
use crate::geometry::{
    build_manifold, make_dataset, Embedding, EmbeddedManifold, ManifoldParams, NoiseKind, NoiseSpec, PairedDataset,
};
use crate::rng::{derive_seed, purpose};
use crate::{Error, Result};

/// Environment variable capping the sweep work pool.
pub const THREADS_ENV: &str = "CAE_THREADS";

mod tag {
    pub const DATA: u64 = 1;
    pub const TEST: u64 = 2;
    pub const MODEL: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const EMBED: u64 = 5;
    pub const REFERENCE: u64 = 6;
}

/// Everything a sweep result depends on, apart from the sweep kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub manifold: ManifoldParams,
    pub ambient_dim: usize,
    /// Noise for the `n`, `D` and `charts` sweeps; the noise sweep takes `q`
    /// and `sigma2` from here.
    pub noise: NoiseSpec,
    /// Training-set sizes for the `n` sweep.
    pub grid: Vec<usize>,
    /// Training-set size for the other sweeps.
    pub n: usize,
    pub levels: Vec<f64>,
    pub kinds: Vec<NoiseKind>,
    pub dims: Vec<usize>,
    pub charts: Vec<usize>,
    pub chart_count: usize,
    pub hidden: usize,
    pub runs: usize,
    pub test_n: usize,
    pub train: TrainConfig,
    pub master_seed: u64,
    /// Also train the noise-free reference at the largest `n`.
    pub reference: bool,
    /// Evaluate with the highest-weight chart only.
    pub hard: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            manifold: ManifoldParams::Sphere { radius: 1.0 },
            ambient_dim: 3,
            noise: NoiseSpec::clean(),
            grid: vec![512, 1024, 2048, 4096, 8192],
            n: 8192,
            levels: vec![0.0, 0.1, 0.2, 0.4],
            kinds: vec![NoiseKind::NormalBounded, NoiseKind::IsotropicGaussian],
            dims: vec![3, 5, 10],
            charts: vec![1, 2, 4, 8],
            chart_count: 4,
            hidden: DEFAULT_HIDDEN,
            runs: 5,
            test_n: 4096,
            train: TrainConfig::desk(),
            master_seed: 0,
            reference: true,
            hard: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.runs == 0 || self.test_n == 0 || self.hidden == 0 || self.chart_count == 0 {
            return bad("runs, test_n, hidden and chart_count must be positive".into());
        }
        if self.ambient_dim < 3 {
            return bad(format!("ambient dimension {} < 3", self.ambient_dim));
        }
        self.train.validate()
    }
}

/// One grid point: the value on the swept axis and the full cell settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub value: f64,
    pub n: usize,
    pub ambient_dim: usize,
    pub charts: usize,
    pub noise: NoiseSpec,
}

/// A curve to measure: a label and its grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub label: String,
    pub points: Vec<GridPoint>,
}

/// A family of experiments selectable by name.
pub trait Sweep: Send + Sync {
    fn name(&self) -> &'static str;
    /// Name of the swept quantity, used as a column label.
    fn axis(&self) -> &'static str;
    fn fit_kind(&self) -> FitKind;
    fn plan(&self, cfg: &SweepConfig) -> Result<Vec<Plan>>;
}

fn distinct(values: &[f64], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} list is empty")));
    }
    for (i, a) in values.iter().enumerate() {
        if values[..i].contains(a) {
            return Err(Error::InvalidParameter(format!("{what} list repeats {a}")));
        }
    }
    Ok(())
}

fn single(label: &str, points: Vec<GridPoint>) -> Vec<Plan> {
    vec![Plan {
        label: label.to_string(),
        points,
    }]
}

/// Error against training-set size.
pub struct SweepN;

impl Sweep for SweepN {
    fn name(&self) -> &'static str {
        "n"
    }
    fn axis(&self) -> &'static str {
        "n"
    }
    fn fit_kind(&self) -> FitKind {
        FitKind::LogLog
    }
    fn plan(&self, cfg: &SweepConfig) -> Result<Vec<Plan>> {
        if cfg.grid.is_empty() || cfg.grid[0] == 0 || cfg.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(format!(
                "grid {:?} must be positive and strictly increasing",
                cfg.grid
            )));
        }
        let points = cfg
            .grid
            .iter()
            .map(|&n| GridPoint {
                value: n as f64,
                n,
                ambient_dim: cfg.ambient_dim,
                charts: cfg.chart_count,
                noise: cfg.noise,
            })
            .collect();
        Ok(single(self.name(), points))
    }
}

/// Error against noise level, one curve per noise kind.
pub struct SweepNoise;

impl Sweep for SweepNoise {
    fn name(&self) -> &'static str {
        "noise"
    }
    fn axis(&self) -> &'static str {
        "level"
    }
    fn fit_kind(&self) -> FitKind {
        FitKind::Linear
    }
    fn plan(&self, cfg: &SweepConfig) -> Result<Vec<Plan>> {
        distinct(&cfg.levels, "level")?;
        if cfg.kinds.is_empty() {
            return Err(Error::InvalidParameter("noise kind list is empty".into()));
        }
        let top = cfg.levels.iter().copied().fold(0.0, f64::max);
        // an unset cap defaults to the largest requested magnitude
        let q = if cfg.noise.q > 0.0 { cfg.noise.q } else { top.sqrt() };
        Ok(cfg
            .kinds
            .iter()
            .map(|&kind| Plan {
                label: kind.as_str().to_string(),
                points: cfg
                    .levels
                    .iter()
                    .map(|&level| GridPoint {
                        value: level,
                        n: cfg.n,
                        ambient_dim: cfg.ambient_dim,
                        charts: cfg.chart_count,
                        noise: NoiseSpec {
                            kind,
                            q: if kind == NoiseKind::IsotropicGaussian { 0.0 } else { q },
                            level,
                            sigma2: if kind == NoiseKind::General { cfg.noise.sigma2 } else { 0.0 },
                        },
                    })
                    .collect(),
            })
            .collect())
    }
}

/// Error against ambient dimension.
pub struct SweepD;

impl Sweep for SweepD {
    fn name(&self) -> &'static str {
        "D"
    }
    fn axis(&self) -> &'static str {
        "D"
    }
    fn fit_kind(&self) -> FitKind {
        FitKind::Linear
    }
    fn plan(&self, cfg: &SweepConfig) -> Result<Vec<Plan>> {
        distinct(&cfg.dims.iter().map(|&d| d as f64).collect::<Vec<_>>(), "D")?;
        if let Some(d) = cfg.dims.iter().find(|&&d| d < 3) {
            return Err(Error::InvalidParameter(format!("ambient dimension {d} < 3")));
        }
        let points = cfg
            .dims
            .iter()
            .map(|&d| GridPoint {
                value: d as f64,
                n: cfg.n,
                ambient_dim: d,
                charts: cfg.chart_count,
                noise: cfg.noise,
            })
            .collect();
        Ok(single(self.name(), points))
    }
}

/// Error against chart count on fixed data.
pub struct SweepCharts;

impl Sweep for SweepCharts {
    fn name(&self) -> &'static str {
        "charts"
    }
    fn axis(&self) -> &'static str {
        "C"
    }
    fn fit_kind(&self) -> FitKind {
        FitKind::Linear
    }
    fn plan(&self, cfg: &SweepConfig) -> Result<Vec<Plan>> {
        distinct(&cfg.charts.iter().map(|&c| c as f64).collect::<Vec<_>>(), "chart count")?;
        if cfg.charts.contains(&0) {
            return Err(Error::InvalidParameter("chart count 0".into()));
        }
        let points = cfg
            .charts
            .iter()
            .map(|&c| GridPoint {
                value: c as f64,
                n: cfg.n,
                ambient_dim: cfg.ambient_dim,
                charts: c,
                noise: cfg.noise,
            })
            .collect();
        Ok(single(self.name(), points))
    }
}

/// Name → sweep table.
pub struct SweepRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Sweep>>,
}

impl SweepRegistry {
    pub fn new() -> Self {
        SweepRegistry {
            entries: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut reg = Self::new();
        reg.register(Arc::new(SweepN));
        reg.register(Arc::new(SweepNoise));
        reg.register(Arc::new(SweepD));
        reg.register(Arc::new(SweepCharts));
        reg
    }

    pub fn register(&mut self, sweep: Arc<dyn Sweep>) {
        self.entries.insert(sweep.name(), sweep);
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Sweep>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "sweep",
            name: name.to_string(),
            known: self.names().join(", "),
        })
    }
}

impl Default for SweepRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    /// Seed of the training set, reproducible with `generate --seed`.
    pub seed: u64,
    pub error: Option<f64>,
    pub pruned: Option<usize>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub point: GridPoint,
    pub runs: Vec<RunRecord>,
    /// Mean error over the runs that finished.
    pub mean: Option<f64>,
    pub mean_pruned: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub sweep: String,
    pub label: String,
    pub axis: String,
    pub fit_kind: FitKind,
    pub cells: Vec<CellResult>,
    /// Present only with at least three finished grid points.
    pub fit: Option<Fit>,
    pub min_error: Option<f64>,
    pub noise_free_error: Option<f64>,
}

impl SweepResult {
    /// `(value, mean error)` for every grid point with a finished run.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| c.mean.map(|m| (c.point.value, m)))
            .collect()
    }

    /// Every run error in grid order, failed runs as `None`.
    pub fn run_errors(&self) -> Vec<Option<f64>> {
        self.cells
            .iter()
            .flat_map(|c| c.runs.iter().map(|r| r.error))
            .collect()
    }
}

/// Per-cell seeds. Each depends only on the cell's own settings, never on
/// its position in the grid, so reordering a grid reorders but does not
/// change the results.
pub struct CellSeeds {
    pub data: u64,
    pub test: u64,
    pub model: u64,
    pub shuffle: u64,
}

impl CellSeeds {
    pub fn new(master: u64, point: &GridPoint, run: usize) -> Self {
        let (n, d, c, r) = (point.n as u64, point.ambient_dim as u64, point.charts as u64, run as u64);
        let key = |t: u64, rest: &[u64]| {
            let mut keys = vec![purpose::CELL, t];
            keys.extend_from_slice(rest);
            derive_seed(master, &keys)
        };
        CellSeeds {
            data: key(tag::DATA, &[n, d, r]),
            test: key(tag::TEST, &[d]),
            model: key(tag::MODEL, &[n, d, c, r]),
            shuffle: key(tag::SHUFFLE, &[n, d, c, r]),
        }
    }

    fn reference(master: u64, point: &GridPoint) -> Self {
        let mut seeds = Self::new(master, point, 0);
        let (n, d, c) = (point.n as u64, point.ambient_dim as u64, point.charts as u64);
        seeds.model = derive_seed(master, &[purpose::CELL, tag::REFERENCE, n, d, c]);
        seeds.shuffle = derive_seed(master, &[purpose::CELL, tag::REFERENCE, tag::SHUFFLE, n, d, c]);
        seeds
    }
}

/// The manifold placed in R^D: the identity for D = 3, otherwise a random
/// orthogonal embedding fixed by the master seed.
pub fn surface_for(cfg: &SweepConfig, ambient_dim: usize) -> Result<EmbeddedManifold> {
    let manifold = build_manifold(&cfg.manifold)?;
    let embedding = if ambient_dim == 3 {
        Embedding::identity(3)
    } else {
        Embedding::random(ambient_dim, derive_seed(cfg.master_seed, &[purpose::CELL, tag::EMBED]))?
    };
    Ok(EmbeddedManifold::new(manifold, embedding))
}

/// Train on `data` and evaluate on `test`; returns `(error, pruned charts)`.
fn train_and_score(
    cfg: &SweepConfig,
    point: &GridPoint,
    seeds: &CellSeeds,
    data: &PairedDataset,
    test: &PairedDataset,
) -> Result<(f64, usize)> {
    let mut model = ChartAutoencoder::new(
        point.ambient_dim,
        data.intrinsic_dim,
        point.charts,
        cfg.hidden,
        seeds.model,
    )?;
    let tc = TrainConfig {
        seed: seeds.shuffle,
        ..cfg.train.clone()
    };
    train(&mut model, data, &tc)?;
    let report = evaluate(&model, test, cfg.hard)?;
    Ok((report.squared_test_error, report.pruned))
}

fn run_cell(cfg: &SweepConfig, point: &GridPoint, run: usize) -> RunRecord {
    let seeds = CellSeeds::new(cfg.master_seed, point, run);
    let outcome = surface_for(cfg, point.ambient_dim).and_then(|surface| {
        let data = make_dataset(&surface, point.n, &point.noise, seeds.data)?;
        let test = make_dataset(&surface, cfg.test_n, &point.noise, seeds.test)?;
        train_and_score(cfg, point, &seeds, &data, &test)
    });
    match outcome {
        Ok((error, pruned)) => RunRecord {
            run,
            seed: seeds.data,
            error: Some(error),
            pruned: Some(pruned),
            failure: None,
        },
        Err(e) => {
            log::warn!("cell n={} D={} C={} run {run} failed: {e}", point.n, point.ambient_dim, point.charts);
            RunRecord {
                run,
                seed: seeds.data,
                error: None,
                pruned: None,
                failure: Some(e.to_string()),
            }
        }
    }
}

/// Error of a model trained on clean data and tested on clean data.
fn run_reference(cfg: &SweepConfig, n: usize) -> Result<f64> {
    let point = GridPoint {
        value: n as f64,
        n,
        ambient_dim: cfg.ambient_dim,
        charts: cfg.chart_count,
        noise: NoiseSpec::clean(),
    };
    let seeds = CellSeeds::reference(cfg.master_seed, &point);
    let surface = surface_for(cfg, cfg.ambient_dim)?;
    let data = make_dataset(&surface, n, &point.noise, seeds.data)?;
    let test = make_dataset(&surface, cfg.test_n, &point.noise, seeds.test)?;
    train_and_score(cfg, &point, &seeds, &data, &test).map(|r| r.0)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, k) = xs.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

fn aggregate(sweep: &dyn Sweep, plan: Plan, runs: Vec<Vec<RunRecord>>, noise_free: Option<f64>) -> SweepResult {
    let cells: Vec<CellResult> = plan
        .points
        .into_iter()
        .zip(runs)
        .map(|(point, runs)| CellResult {
            mean: mean(runs.iter().filter_map(|r| r.error)),
            mean_pruned: mean(runs.iter().filter_map(|r| r.pruned.map(|p| p as f64))),
            point,
            runs,
        })
        .collect();
    let incomplete = cells.iter().filter(|c| c.mean.is_none()).count();
    if incomplete > 0 {
        log::warn!("{} of {} grid points have no finished run and are left out of the fit", incomplete, cells.len());
    }
    let mut result = SweepResult {
        sweep: sweep.name().to_string(),
        label: plan.label,
        axis: sweep.axis().to_string(),
        fit_kind: sweep.fit_kind(),
        fit: None,
        min_error: None,
        noise_free_error: noise_free,
        cells,
    };
    let curve = result.curve();
    result.min_error = curve.iter().map(|p| p.1).reduce(f64::min);
    if curve.len() >= MIN_FIT_POINTS {
        match sweep.fit_kind().fit(&curve) {
            Ok(fit) => result.fit = Some(fit),
            Err(e) => log::warn!("no fit for sweep {}: {e}", result.label),
        }
    }
    result
}

/// Resolved thread cap: `CAE_THREADS` if set and positive, else all cores.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Run every cell of `sweep` under `cfg` on a pool of `threads` workers
/// (all cores when `None`). The results do not depend on `threads`.
pub fn run_sweep(sweep: &dyn Sweep, cfg: &SweepConfig, threads: Option<usize>) -> Result<Vec<SweepResult>> {
    cfg.validate()?;
    let plans = sweep.plan(cfg)?;
    for point in plans.iter().flat_map(|p| &p.points) {
        let surface = surface_for(cfg, point.ambient_dim)?;
        point.noise.validate(surface.reach())?;
    }
    let jobs: Vec<(usize, usize, usize)> = plans
        .iter()
        .enumerate()
        .flat_map(|(pi, plan)| (0..plan.points.len()).flat_map(move |ci| (0..cfg.runs).map(move |r| (pi, ci, r))))
        .collect();
    let reference_n = plans.iter().flat_map(|p| &p.points).map(|p| p.n).max().unwrap_or(cfg.n);

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    log::info!("sweep {}: {} training runs", sweep.name(), jobs.len() + cfg.reference as usize);
    let (records, reference) = pool.install(|| {
        rayon::join(
            || {
                jobs.par_iter()
                    .map(|&(pi, ci, r)| run_cell(cfg, &plans[pi].points[ci], r))
                    .collect::<Vec<_>>()
            },
            || cfg.reference.then(|| run_reference(cfg, reference_n)),
        )
    });
    let noise_free = match reference {
        Some(Ok(e)) => Some(e),
        Some(Err(e)) => {
            log::warn!("noise-free reference failed: {e}");
            None
        }
        None => None,
    };

    let mut records = records.into_iter();
    Ok(plans
        .into_iter()
        .map(|plan| {
            let runs = (0..plan.points.len())
                .map(|_| records.by_ref().take(cfg.runs).collect())
                .collect();
            aggregate(sweep, plan, runs, noise_free)
        })
        .collect())
}
