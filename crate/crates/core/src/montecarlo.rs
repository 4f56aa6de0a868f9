//! Seeded Monte Carlo RMSE sweeps.
//!
//! Trial `k` at axis point `i` draws its snapshots from
//! [`rng::stream`]`(seed, i, k)`. The stream does not depend on the method,
//! the shrinkage or the geometry, so sweeps that differ only in those share
//! source and noise realizations (paired comparison). Trials run in parallel
//! and are reduced in index order, which makes results independent of the
//! thread count.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarray::check_shrinkage;
use crate::error::{invalid, DoaError, Result};
use crate::estimators::{estimate, Method, PipelineConfig};
use crate::geometry::ArrayGeometry;
use crate::rng;
use crate::signal::{noise_variance_from_snr_db, sample_covariance, simulate_snapshots_with, SourceScene};

/// Default trial count per sweep point.
pub const DEFAULT_TRIALS: usize = 500;

/// Named geometry recipe.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometrySpec {
    Ula { n: usize },
    Nested { n1: usize, n2: usize },
    SuperNested { n1: usize, n2: usize },
    Mra { n: usize },
    Custom { name: String, positions: Vec<i64> },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<ArrayGeometry> {
        match self {
            GeometrySpec::Ula { n } => ArrayGeometry::ula(*n),
            GeometrySpec::Nested { n1, n2 } => ArrayGeometry::nested(*n1, *n2),
            GeometrySpec::SuperNested { n1, n2 } => ArrayGeometry::super_nested(*n1, *n2),
            GeometrySpec::Mra { n } => ArrayGeometry::mra(*n),
            GeometrySpec::Custom { name, positions } => ArrayGeometry::from_positions(name.clone(), positions),
        }
    }
}

impl fmt::Display for GeometrySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometrySpec::Ula { n } => write!(f, "ula {n}"),
            GeometrySpec::Nested { n1, n2 } => write!(f, "nested {n1} {n2}"),
            GeometrySpec::SuperNested { n1, n2 } => write!(f, "super-nested {n1} {n2}"),
            GeometrySpec::Mra { n } => write!(f, "mra {n}"),
            GeometrySpec::Custom { name, positions } => {
                write!(f, "{name}:")?;
                for p in positions {
                    write!(f, " {p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for GeometrySpec {
    type Err = DoaError;

    /// Accepts `ula N`, `nested N1 N2` (or `naq2`), `super-nested N1 N2`
    /// (or `snaq2`), `mra N`, or the geometry text form `name: p0 p1 ...`.
    fn from_str(s: &str) -> Result<Self> {
        if s.contains(':') {
            let g: ArrayGeometry = s.parse()?;
            return Ok(GeometrySpec::Custom {
                name: g.name().to_string(),
                positions: g.positions().to_vec(),
            });
        }
        let mut tokens = s.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| DoaError::Parse("empty geometry description".into()))?
            .to_ascii_lowercase();
        let args = tokens
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| DoaError::Parse(format!("bad geometry parameter {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = match (kind.as_str(), args.as_slice()) {
            ("ula", [n]) => GeometrySpec::Ula { n: *n },
            ("nested" | "naq2", [n1, n2]) => GeometrySpec::Nested { n1: *n1, n2: *n2 },
            ("super-nested" | "supernested" | "snaq2", [n1, n2]) => {
                GeometrySpec::SuperNested { n1: *n1, n2: *n2 }
            }
            ("mra", [n]) => GeometrySpec::Mra { n: *n },
            _ => {
                return Err(DoaError::Parse(format!(
                    "unknown geometry {s:?} (expected ula N, nested N1 N2, super-nested N1 N2, mra N or `name: p0 p1 ...`)"
                )))
            }
        };
        Ok(spec)
    }
}

/// Swept quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum SweepAxis {
    /// SNR in dB at a fixed snapshot count.
    SnrDb(Vec<f64>),
    /// Snapshot counts at a fixed SNR.
    Snapshots(Vec<usize>),
}

impl SweepAxis {
    pub fn len(&self) -> usize {
        match self {
            SweepAxis::SnrDb(v) => v.len(),
            SweepAxis::Snapshots(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize) -> f64 {
        match self {
            SweepAxis::SnrDb(v) => v[i],
            SweepAxis::Snapshots(v) => v[i] as f64,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::SnrDb(_) => "snr_db",
            SweepAxis::Snapshots(_) => "snapshots",
        }
    }
}

/// One sweep: a geometry, a scene, an estimator and an axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub geometry: GeometrySpec,
    pub scene: SourceScene,
    pub method: Method,
    /// Shrinkage `a`.
    pub shrinkage: usize,
    /// Snapshot count when sweeping SNR.
    pub snapshots: usize,
    /// SNR in dB when sweeping snapshots. Unit-power sources; `inf` is noiseless.
    pub snr_db: f64,
    pub axis: SweepAxis,
    pub trials: usize,
    pub seed: u64,
    pub grid_points: usize,
}

impl ExperimentConfig {
    /// Builds the geometry and checks every field, including the
    /// identifiability bound on `a`.
    pub fn validate(&self) -> Result<ArrayGeometry> {
        if self.trials < 1 {
            return Err(invalid("trials must be >= 1"));
        }
        if self.axis.is_empty() {
            return Err(invalid("sweep axis is empty"));
        }
        if self.grid_points < 1 {
            return Err(invalid("grid must have at least one point"));
        }
        match &self.axis {
            SweepAxis::SnrDb(v) => {
                if self.snapshots < 1 {
                    return Err(invalid("snapshots must be >= 1"));
                }
                if v.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
                    return Err(invalid("SNR values must be numbers above -inf dB"));
                }
            }
            SweepAxis::Snapshots(v) => {
                if v.iter().any(|&t| t < 1) {
                    return Err(invalid("snapshot counts must be >= 1"));
                }
                if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
                    return Err(invalid("SNR must be a number above -inf dB"));
                }
            }
        }
        let geom = self.geometry.build()?;
        check_shrinkage(geom.coarray().udof(), self.scene.num_sources(), self.shrinkage)?;
        Ok(geom)
    }

    /// `(snapshot count, noise variance)` at axis point `i`.
    pub fn point(&self, i: usize) -> (usize, f64) {
        match &self.axis {
            SweepAxis::SnrDb(v) => (self.snapshots, noise_variance_from_snr_db(v[i])),
            SweepAxis::Snapshots(v) => (v[i], noise_variance_from_snr_db(self.snr_db)),
        }
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            sources: self.scene.num_sources(),
            shrinkage: self.shrinkage,
            method: self.method,
            grid_points: self.grid_points,
        }
    }
}

/// Result of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    /// `(theta_hat_d - theta_d)^2` after sorting both ascending.
    pub squared_errors: Vec<f64>,
    /// Fill values or outer roots were needed.
    pub degraded: bool,
    pub evd_time: Duration,
}

/// A validated configuration ready to run.
#[derive(Debug, Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    geometry: ArrayGeometry,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let geometry = config.validate()?;
        Ok(Self { config, geometry })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    /// Simulates, estimates and scores one trial.
    pub fn run_trial(&self, axis_index: usize, trial_index: usize) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let (t, noise_var) = cfg.point(axis_index);
        let mut rng = rng::stream(cfg.seed, axis_index as u64, trial_index as u64);
        let x = simulate_snapshots_with(&cfg.scene, &self.geometry, t, noise_var, &mut rng)?;
        let r = sample_covariance(&x);
        let est = estimate(&r, &self.geometry, &cfg.pipeline())?;
        let squared_errors = est
            .result
            .thetas
            .iter()
            .zip(cfg.scene.thetas())
            .map(|(hat, truth)| (hat - truth).powi(2))
            .collect();
        Ok(TrialOutcome {
            squared_errors,
            degraded: est.result.is_degraded(),
            evd_time: est.evd_time,
        })
    }

    /// Runs every trial at one axis point.
    pub fn run_point(&self, axis_index: usize) -> Result<SweepPoint> {
        let outcomes = (0..self.config.trials)
            .into_par_iter()
            .map(|k| self.run_trial(axis_index, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepPoint::from_outcomes(self.config.axis.value(axis_index), &outcomes))
    }

    /// RMSE at every axis point.
    pub fn sweep(&self) -> Result<SweepResult> {
        let points = (0..self.config.axis.len())
            .map(|i| self.run_point(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(SweepResult {
            config: self.config.clone(),
            geometry: self.geometry.to_string(),
            points,
        })
    }
}

/// Aggregate over the trials of one axis point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub axis_value: f64,
    /// `sqrt(sum of squared errors / (K D))`, sine units, all trials included.
    pub rmse: f64,
    pub trials: usize,
    /// Trials needing fill values (MUSIC) or outer roots (root-MUSIC).
    pub fills: usize,
    /// Mean eigendecomposition wall time, seconds.
    pub mean_evd_time: f64,
}

impl SweepPoint {
    pub fn from_outcomes(axis_value: f64, outcomes: &[TrialOutcome]) -> Self {
        let mut sum = 0.0;
        let mut count = 0usize;
        for o in outcomes {
            for e in &o.squared_errors {
                sum += e;
                count += 1;
            }
        }
        let evd: Duration = outcomes.iter().map(|o| o.evd_time).sum();
        Self {
            axis_value,
            rmse: if count == 0 { 0.0 } else { (sum / count as f64).sqrt() },
            trials: outcomes.len(),
            fills: outcomes.iter().filter(|o| o.degraded).count(),
            mean_evd_time: if outcomes.is_empty() {
                0.0
            } else {
                evd.as_secs_f64() / outcomes.len() as f64
            },
        }
    }
}

/// RMSE curve of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub config: ExperimentConfig,
    /// Geometry in text form, `name: p0 p1 ...`.
    pub geometry: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn rmse(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.rmse).collect()
    }

    pub fn geometry_name(&self) -> &str {
        self.geometry.split(':').next().unwrap_or("")
    }
}

/// Validates `cfg` and runs the sweep.
pub fn rmse_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    Experiment::new(cfg.clone())?.sweep()
}

/// Runs the same sweep on several geometries with shared trial seeds.
/// An infeasible geometry yields an error in its slot; the others still run.
pub fn compare_geometries(
    template: &ExperimentConfig,
    geometries: &[GeometrySpec],
) -> Vec<(GeometrySpec, Result<SweepResult>)> {
    geometries
        .iter()
        .map(|g| {
            let cfg = ExperimentConfig {
                geometry: g.clone(),
                ..template.clone()
            };
            (g.clone(), rmse_sweep(&cfg))
        })
        .collect()
}

/// Column layout of [`write_csv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsvOptions {
    /// Emit the `mean_evd_time` column. Wall-clock values differ between
    /// runs; leave this off for byte-comparable output.
    pub timing: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { timing: true }
    }
}

/// Writes sweep results as CSV, one row per (series, axis value):
/// `geometry,method,a,axis,axis_value,rmse,trials,fills[,mean_evd_time]`.
/// Geometry names such as `NAQ2(4,4)` contain commas and come out quoted.
pub fn write_csv<W: Write>(w: W, results: &[SweepResult], opts: CsvOptions) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["geometry", "method", "a", "axis", "axis_value", "rmse", "trials", "fills"];
    if opts.timing {
        header.push("mean_evd_time");
    }
    out.write_record(&header).map_err(csv_error)?;
    for res in results {
        for p in &res.points {
            let mut row = vec![
                res.geometry_name().to_string(),
                res.config.method.to_string(),
                res.config.shrinkage.to_string(),
                res.config.axis.name().to_string(),
                p.axis_value.to_string(),
                p.rmse.to_string(),
                p.trials.to_string(),
                p.fills.to_string(),
            ];
            if opts.timing {
                row.push(format!("{:.6e}", p.mean_evd_time));
            }
            out.write_record(&row).map_err(csv_error)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> DoaError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DoaError::Io(io),
        other => DoaError::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// JSON document with the full configuration echo, seeds and curves.
pub fn write_json<W: Write>(w: W, results: &[SweepResult]) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        generator: &'static str,
        version: &'static str,
        results: &'a [SweepResult],
    }
    let doc = Doc {
        generator: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        results,
    };
    serde_json::to_writer_pretty(w, &doc).map_err(|e| DoaError::Io(e.into()))
}
