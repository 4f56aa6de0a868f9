//! Config files: flat TOML, one `key = value` per line, lists in brackets.
//!
//! Every key and its default is listed in `configs/README.md` at the
//! workspace root.

use std::path::{Path, PathBuf};

use coarray_doa::estimators::{Method, DEFAULT_GRID_POINTS};
use coarray_doa::montecarlo::{ExperimentConfig, GeometrySpec, SweepAxis, DEFAULT_TRIALS};
use coarray_doa::signal::SourceScene;
use serde::Deserialize;

use crate::CliError;

/// Shrinkage values swept when a sweep config has no `a` key.
pub const DEFAULT_SHRINKAGE_SWEEP: [usize; 4] = [0, 1, 3, 5];
const DEFAULT_SNAPSHOTS: usize = 1000;
const DEFAULT_SNR_DB: f64 = 10.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }

    fn is_list(&self) -> bool {
        matches!(self, OneOrMany::Many(_))
    }
}

/// Where the estimator's covariance comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceSource {
    /// Sample covariance of simulated or loaded snapshots.
    Sample,
    /// Closed-form covariance of the scene (no snapshots).
    Exact,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateFile {
    geometry: String,
    thetas: Option<Vec<f64>>,
    powers: Option<Vec<f64>>,
    sources: Option<usize>,
    method: Option<String>,
    a: Option<usize>,
    snapshots: Option<usize>,
    snr_db: Option<f64>,
    seed: Option<u64>,
    grid: Option<usize>,
    covariance: Option<CovarianceSource>,
    snapshot_file: Option<PathBuf>,
}

/// Fully resolved `estimate` configuration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EstimateConfig {
    pub geometry: GeometrySpec,
    /// Absent when estimating from a snapshot file without ground truth.
    pub scene: Option<SourceScene>,
    pub sources: usize,
    pub method: Method,
    pub shrinkage: usize,
    pub snapshots: usize,
    pub snr_db: f64,
    pub seed: u64,
    pub grid_points: usize,
    pub covariance: CovarianceSource,
    pub snapshot_file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    geometry: OneOrMany<String>,
    thetas: Vec<f64>,
    powers: Option<Vec<f64>>,
    method: Option<OneOrMany<String>>,
    a: Option<OneOrMany<usize>>,
    snapshots: Option<OneOrMany<usize>>,
    snr_db: Option<OneOrMany<f64>>,
    trials: Option<usize>,
    seed: Option<u64>,
    grid: Option<usize>,
}

/// A sweep file expands to one experiment per (geometry, method, a).
#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub geometries: Vec<GeometrySpec>,
    pub methods: Vec<Method>,
    pub shrinkages: Vec<usize>,
    pub template: ExperimentConfig,
}

/// Command-line overrides shared by `estimate` and `sweep`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub grid: Option<usize>,
}

fn field(name: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{name}: {err}"))
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn parse_toml<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn parse_method(s: &str) -> Result<Method, CliError> {
    s.parse().map_err(|e| field("method", e))
}

fn parse_geometry(s: &str) -> Result<GeometrySpec, CliError> {
    let spec: GeometrySpec = s.parse().map_err(|e| field("geometry", e))?;
    spec.build().map_err(|e| field("geometry", e))?;
    Ok(spec)
}

fn scene(thetas: Vec<f64>, powers: Option<Vec<f64>>) -> Result<SourceScene, CliError> {
    let powers = powers.unwrap_or_else(|| vec![1.0; thetas.len()]);
    SourceScene::new(thetas, powers).map_err(|e| field("thetas/powers", e))
}

fn positive(name: &str, v: usize) -> Result<usize, CliError> {
    if v == 0 {
        return Err(field(name, "must be >= 1"));
    }
    Ok(v)
}

pub fn load_estimate(path: &Path, ov: Overrides) -> Result<EstimateConfig, CliError> {
    let raw: EstimateFile = parse_toml(path, &read(path)?)?;
    let geometry = parse_geometry(&raw.geometry)?;
    let scene = match raw.thetas {
        Some(t) => Some(scene(t, raw.powers)?),
        None if raw.powers.is_some() => return Err(field("powers", "given without thetas")),
        None => None,
    };
    let sources = match (raw.sources, &scene) {
        (Some(d), Some(s)) if d != s.num_sources() => {
            return Err(field("sources", format!("{d} disagrees with {} thetas", s.num_sources())))
        }
        (Some(d), _) => positive("sources", d)?,
        (None, Some(s)) => s.num_sources(),
        (None, None) => return Err(field("thetas", "required unless `sources` and `snapshot_file` are given")),
    };
    let covariance = raw.covariance.unwrap_or(CovarianceSource::Sample);
    if scene.is_none() && raw.snapshot_file.is_none() {
        return Err(field("thetas", "required to simulate data"));
    }
    if raw.snapshot_file.is_some() && covariance == CovarianceSource::Exact {
        return Err(field("covariance", "`exact` cannot be combined with snapshot_file"));
    }
    let snr_db = raw.snr_db.unwrap_or(DEFAULT_SNR_DB);
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(field("snr_db", "must be a number above -inf"));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(EstimateConfig {
        geometry,
        scene,
        sources,
        method: parse_method(raw.method.as_deref().unwrap_or("vws-ca-music"))?,
        shrinkage: raw.a.unwrap_or(0),
        snapshots: positive("snapshots", raw.snapshots.unwrap_or(DEFAULT_SNAPSHOTS))?,
        snr_db,
        seed: ov.seed.or(raw.seed).unwrap_or(0),
        grid_points: positive("grid", ov.grid.or(raw.grid).unwrap_or(DEFAULT_GRID_POINTS))?,
        covariance,
        snapshot_file: raw.snapshot_file.map(|p| base.join(p)),
    })
}

pub fn load_sweep(path: &Path, ov: Overrides) -> Result<SweepPlan, CliError> {
    let raw: SweepFile = parse_toml(path, &read(path)?)?;

    let geometries = raw
        .geometry
        .to_vec()
        .iter()
        .map(|g| g.parse::<GeometrySpec>().map_err(|e| field("geometry", e)))
        .collect::<Result<Vec<_>, _>>()?;
    if geometries.is_empty() {
        return Err(field("geometry", "list is empty"));
    }
    let methods = match &raw.method {
        Some(m) => m.to_vec().iter().map(|s| parse_method(s)).collect::<Result<Vec<_>, _>>()?,
        None => vec![Method::Music],
    };
    if methods.is_empty() {
        return Err(field("method", "list is empty"));
    }
    let shrinkages = raw.a.as_ref().map(|a| a.to_vec()).unwrap_or_else(|| DEFAULT_SHRINKAGE_SWEEP.to_vec());
    if shrinkages.is_empty() {
        return Err(field("a", "list is empty"));
    }

    let snr = raw.snr_db.unwrap_or(OneOrMany::One(DEFAULT_SNR_DB));
    let snaps = raw.snapshots.unwrap_or(OneOrMany::One(DEFAULT_SNAPSHOTS));
    let (axis, snapshots, snr_db) = match (snr.is_list(), snaps.is_list()) {
        (true, true) => return Err(field("snr_db/snapshots", "only one of them may be a list (the swept axis)")),
        (false, true) => (SweepAxis::Snapshots(snaps.to_vec()), 0, snr.to_vec()[0]),
        _ => (SweepAxis::SnrDb(snr.to_vec()), snaps.to_vec()[0], DEFAULT_SNR_DB),
    };
    let axis_name = match axis {
        SweepAxis::SnrDb(_) => "snr_db",
        SweepAxis::Snapshots(_) => "snapshots",
    };
    if axis.is_empty() {
        return Err(field(axis_name, "axis list is empty"));
    }

    let template = ExperimentConfig {
        geometry: geometries[0].clone(),
        scene: scene(raw.thetas, raw.powers)?,
        method: methods[0],
        shrinkage: shrinkages[0],
        snapshots,
        snr_db,
        axis,
        trials: positive("trials", ov.trials.or(raw.trials).unwrap_or(DEFAULT_TRIALS))?,
        seed: ov.seed.or(raw.seed).unwrap_or(0),
        grid_points: positive("grid", ov.grid.or(raw.grid).unwrap_or(DEFAULT_GRID_POINTS))?,
    };
    // Field-level checks that do not depend on geometry or a.
    let mut probe = template.clone();
    probe.shrinkage = 0;
    probe.geometry = GeometrySpec::Ula { n: 2 * probe.scene.num_sources() + 1 };
    probe.validate().map_err(|e| field(axis_name, e))?;

    Ok(SweepPlan {
        geometries,
        methods,
        shrinkages,
        template,
    })
}
