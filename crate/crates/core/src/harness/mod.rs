//! Seeded parameter sweeps, result files and SVG reports.

mod results;
mod report;
mod svg;

use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_simulation, SimParams, Trajectory};
use crate::error::{Error, Result};
use crate::metrics::{velocity_histogram, Histogram, HistogramSpec, RunSummary, SweepRecord};
use crate::observers::{fit_linear_classifier, FitConfig, LinearFit, ObserverConfig, WindowedFeatures};
use crate::{metrics, Group};

pub use report::{figure_series, Figure};
pub use results::{read_results, results_rows, sidecar_path, write_results, ResultRow, ResultsSidecar, RESULTS_HEADER};
pub use svg::{emit_plot_svg, render_svg, Axes, Series};

/// Largest tolerated fraction of faulted runs in a sweep.
pub const MAX_FAULT_FRACTION: f64 = 0.05;

/// Parameter values swept over; points are visited density-major, then
/// number ratio, then speed, each in list order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub number_ratios: Vec<f64>,
    pub speeds: Vec<f64>,
    pub densities: Vec<f64>,
}

impl Grid {
    /// The full 10 x 8 x 6 study grid.
    pub fn standard() -> Self {
        Grid {
            number_ratios: vec![
                1.0 / 42.0,
                1.0 / 21.0,
                2.0 / 21.0,
                1.0 / 6.0,
                3.0 / 14.0,
                2.0 / 7.0,
                1.0 / 3.0,
                8.0 / 21.0,
                19.0 / 42.0,
                0.5,
            ],
            speeds: vec![3.0, 2.0, 1.5, 1.0, 0.75, 0.5, 0.25, 0.1],
            densities: vec![0.57706, 0.45792, 0.3722, 0.30847, 0.25981, 0.22182],
        }
    }

    pub fn len(&self) -> usize {
        self.number_ratios.len() * self.speeds.len() * self.densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = Vec::with_capacity(self.len());
        for &density in &self.densities {
            for &number_ratio in &self.number_ratios {
                for &intrinsic_speed in &self.speeds {
                    out.push(GridPoint {
                        density,
                        number_ratio,
                        intrinsic_speed,
                    });
                }
            }
        }
        out
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().cloned().fold(0.0, f64::max)
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid::standard()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub density: f64,
    pub number_ratio: f64,
    pub intrinsic_speed: f64,
}

/// Everything that determines a sweep's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunManifest {
    pub grid: Grid,
    pub runs_per_point: usize,
    pub base_seed: u64,
    pub tool_version: String,
    /// ISO-8601 creation time; informational only.
    pub timestamp: String,
    /// Template for every run; density, ratio, speed and seed are overridden.
    pub params: SimParams,
    pub observer: ObserverConfig,
    /// Settings for the fitted observer; `None` skips it.
    pub fit: Option<FitConfig>,
    /// Only every `fit_stride`-th window enters the pooled fit.
    pub fit_stride: usize,
    /// Bins of the per-group velocity histograms, spanning `+-1.2` times
    /// the largest speed on the grid.
    pub histogram_bins: usize,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            grid: Grid::standard(),
            runs_per_point: 20,
            base_seed: 0,
            tool_version: crate::TOOL_VERSION.to_string(),
            timestamp: String::new(),
            params: SimParams::default(),
            observer: ObserverConfig::default(),
            fit: Some(FitConfig::default()),
            fit_stride: 10,
            histogram_bins: 61,
        }
    }
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("grid has no points".into()));
        }
        if self.runs_per_point == 0 {
            return Err(Error::Config("runs_per_point must be at least 1".into()));
        }
        if self.histogram_bins == 0 {
            return Err(Error::Config("histogram_bins must be at least 1".into()));
        }
        self.observer.validate()?;
        for point in self.grid.points() {
            let params = self.point_params(point);
            params.validate()?;
            if params.n_samples < self.observer.window {
                return Err(Error::Config(format!(
                    "window {} longer than {} frames",
                    self.observer.window, params.n_samples
                )));
            }
            self.observer.resolve_mu(point.density, point.number_ratio)?;
        }
        Ok(())
    }

    pub fn point_params(&self, point: GridPoint) -> SimParams {
        SimParams {
            density: point.density,
            number_ratio: point.number_ratio,
            intrinsic_speed: point.intrinsic_speed,
            seed: 0,
            ..self.params.clone()
        }
    }

    pub fn histogram_spec(&self) -> HistogramSpec {
        HistogramSpec {
            bins: self.histogram_bins,
            ..HistogramSpec::for_speed(self.grid.max_speed())
        }
    }
}

/// Whether `faulted` of `total` runs exceeds the tolerated fault fraction.
pub fn too_many_faults(faulted: usize, total: usize) -> bool {
    faulted as f64 > MAX_FAULT_FRACTION * total as f64
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable hash of the run's coordinates; independent of every other point.
pub fn run_seed(base_seed: u64, point: GridPoint, run: usize) -> u64 {
    [
        point.density.to_bits(),
        point.number_ratio.to_bits(),
        point.intrinsic_speed.to_bits(),
        run as u64,
    ]
    .iter()
    .fold(splitmix64(base_seed), |h, &x| splitmix64(h ^ x))
}

/// One completed run with the data needed for pooled fitting.
pub struct RunOutcome {
    pub trajectory: Trajectory,
    pub features: WindowedFeatures,
    pub summary: RunSummary,
}

/// Simulates and measures a single run.
pub fn run_once(params: &SimParams, observer: &ObserverConfig) -> Result<RunOutcome> {
    let mu = observer.resolve_mu(params.density, params.number_ratio)?;
    let trajectory = run_simulation(params)?;
    let features = WindowedFeatures::from_trajectory(&trajectory, observer)?;
    let summary = RunSummary::measure(&trajectory, &features, mu, params.seed)?;
    Ok(RunOutcome {
        trajectory,
        features,
        summary,
    })
}

/// Fits the zero-intercept classifier on windows pooled over `runs`.
pub fn pooled_fit(runs: &[RunOutcome], stride: usize, config: &FitConfig) -> Result<LinearFit> {
    let samples: Vec<_> = runs
        .iter()
        .flat_map(|r| r.features.samples(&r.trajectory.labels, stride))
        .collect();
    fit_linear_classifier(&samples, config)
}

/// Runs every simulation of one grid point and aggregates them.
///
/// Runs that fail are dropped and counted in `faulted_runs`.
pub fn run_point(manifest: &RunManifest, point: GridPoint) -> Result<SweepRecord> {
    run_point_with_runs(manifest, point).map(|(record, _)| record)
}

/// Like [`run_point`], but also hands back the successful runs.
pub fn run_point_with_runs(manifest: &RunManifest, point: GridPoint) -> Result<(SweepRecord, Vec<RunOutcome>)> {
    let params = manifest.point_params(point);
    let mu = manifest.observer.resolve_mu(point.density, point.number_ratio)?;
    let attempts: Vec<Result<RunOutcome>> = (0..manifest.runs_per_point)
        .into_par_iter()
        .map(|run| {
            let params = SimParams {
                seed: run_seed(manifest.base_seed, point, run),
                ..params.clone()
            };
            run_once(&params, &manifest.observer)
        })
        .collect();
    let mut runs = Vec::with_capacity(attempts.len());
    let mut faulted_runs = 0;
    for (k, attempt) in attempts.into_iter().enumerate() {
        match attempt {
            Ok(r) => runs.push(r),
            Err(e) => {
                warn!("run {k} at {point:?} faulted: {e}");
                faulted_runs += 1;
            }
        }
    }
    if runs.is_empty() {
        return Err(Error::TooManyFaults {
            faulted: faulted_runs,
            total: manifest.runs_per_point,
        });
    }

    let fit = match &manifest.fit {
        Some(config) if params.group_two_count() > 0 && params.group_two_count() < params.n_agents => {
            let config = FitConfig {
                seed: run_seed(config.seed, point, usize::MAX),
                ..config.clone()
            };
            Some(pooled_fit(&runs, manifest.fit_stride, &config)?)
        }
        _ => None,
    };
    if let Some(fit) = &fit {
        for r in &mut runs {
            r.summary.n_m_fitted = Some(metrics::mean_misclassification_by(
                &r.features,
                &r.trajectory.labels,
                |v, phi| fit.predict(v, phi),
            )?);
        }
    }

    let spec = manifest.histogram_spec();
    let mut histograms: [Option<Histogram>; 2] = [None, None];
    for g in Group::BOTH {
        if runs[0].trajectory.group_members(g).next().is_none() {
            continue;
        }
        let per_run = runs
            .iter()
            .map(|r| velocity_histogram(&r.trajectory, g, spec))
            .collect::<Result<Vec<_>>>()?;
        histograms[g.index()] = Some(Histogram::average(&per_run)?);
    }
    let record = SweepRecord {
        params,
        mu,
        fit,
        n_windows: runs[0].features.n_windows(),
        faulted_runs,
        runs: runs.iter().map(|r| r.summary.clone()).collect(),
        histograms,
    };
    Ok((record, runs))
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Directory holding one finished record per grid point; existing
    /// entries with a matching key are reused instead of recomputed.
    pub cache_dir: Option<PathBuf>,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct CachedPoint {
    manifest: RunManifest,
    index: usize,
    record: SweepRecord,
}

fn cache_file(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("point_{index:04}.json"))
}

fn load_cached(dir: &Path, index: usize, manifest: &RunManifest) -> Option<SweepRecord> {
    let text = fs::read_to_string(cache_file(dir, index)).ok()?;
    let cached: CachedPoint = serde_json::from_str(&text).ok()?;
    let same = RunManifest {
        timestamp: String::new(),
        ..cached.manifest
    } == RunManifest {
        timestamp: String::new(),
        ..manifest.clone()
    };
    (same && cached.index == index).then_some(cached.record)
}

fn store_cached(dir: &Path, index: usize, manifest: &RunManifest, record: &SweepRecord) {
    let path = cache_file(dir, index);
    let tmp = path.with_extension("json.tmp");
    let cached = CachedPoint {
        manifest: manifest.clone(),
        index,
        record: record.clone(),
    };
    let result = serde_json::to_string(&cached)
        .map_err(std::io::Error::other)
        .and_then(|text| fs::write(&tmp, text))
        .and_then(|_| fs::rename(&tmp, &path));
    if let Err(e) = result {
        warn!("could not cache {}: {e}", path.display());
    }
}

/// Runs the whole grid and returns one record per point in grid order.
///
/// Fails if more than [`MAX_FAULT_FRACTION`] of all runs fault.
pub fn run_sweep(manifest: &RunManifest, options: &SweepOptions) -> Result<Vec<SweepRecord>> {
    manifest.validate()?;
    if let Some(dir) = &options.cache_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let points = manifest.grid.points();
    let work = || -> Vec<Result<SweepRecord>> {
        points
            .par_iter()
            .enumerate()
            .map(|(index, &point)| {
                if let Some(dir) = &options.cache_dir {
                    if let Some(record) = load_cached(dir, index, manifest) {
                        return Ok(record);
                    }
                }
                let record = run_point(manifest, point);
                if let (Some(dir), Ok(record)) = (&options.cache_dir, &record) {
                    store_cached(dir, index, manifest, record);
                }
                if let Ok(r) = &record {
                    info!(
                        "point {index}: rho={} Nr={:.4} s0={} done ({} faults)",
                        point.density, point.number_ratio, point.intrinsic_speed, r.faulted_runs
                    );
                }
                record
            })
            .collect()
    };
    let outcomes = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let total = points.len() * manifest.runs_per_point;
    let mut faulted = 0;
    let mut records = Vec::with_capacity(points.len());
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => {
                faulted += r.faulted_runs;
                records.push(r);
            }
            Err(Error::TooManyFaults { faulted: f, .. }) => faulted += f,
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    if faulted > 0 {
        warn!("{faulted} of {total} runs faulted and were excluded");
    }
    if too_many_faults(faulted, total) || records.len() < points.len() {
        return Err(Error::TooManyFaults { faulted, total });
    }
    Ok(records)
}
