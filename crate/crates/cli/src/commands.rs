use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use coarray_doa::coarray::{coarray_signal, max_shrinkage, vws_smooth};
use coarray_doa::estimators::{estimate as run_estimate, music_spectrum, noise_subspace, uniform_grid, PipelineConfig, Spectrum};
use coarray_doa::geometry::ArrayGeometry;
use coarray_doa::montecarlo::{rmse_sweep, write_csv, write_json, CsvOptions, ExperimentConfig, GeometrySpec, SweepResult};
use coarray_doa::signal::{
    exact_covariance, noise_variance_from_snr_db, sample_covariance, simulate_snapshots, CovarianceMatrix, SnapshotSet,
};
use coarray_doa::DoaError;
use serde::Serialize;

use crate::config::{self, CovarianceSource, EstimateConfig, Overrides};
use crate::{CliError, Format};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: impl Write, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn geometry(spec: &[String], sources: Option<usize>) -> Result<(), CliError> {
    let text = match spec.split_first() {
        Some((kind, rest)) if kind.eq_ignore_ascii_case("custom") => format!("custom: {}", rest.join(" ")),
        _ => spec.join(" "),
    };
    let geom = text
        .parse::<GeometrySpec>()
        .and_then(|s| s.build())
        .map_err(|e| CliError::Validation(format!("geometry: {e}")))?;
    let bound = sources.map(|d| (d, max_shrinkage(geom.coarray().udof(), d)));
    print!("{}", geometry_report(&geom, bound.as_ref().and_then(|(d, m)| m.as_ref().ok().map(|m| (*d, *m)))));
    match bound {
        Some((_, Err(e))) => Err(CliError::Validation(format!("sources: {e}"))),
        _ => Ok(()),
    }
}

fn geometry_report(geom: &ArrayGeometry, bound: Option<(usize, usize)>) -> String {
    let co = geom.coarray();
    let mut s = String::new();
    let positions: Vec<String> = geom.positions().iter().map(|p| p.to_string()).collect();
    writeln!(s, "geometry: {}", geom.name()).unwrap();
    writeln!(s, "positions: {}", positions.join(" ")).unwrap();
    writeln!(s, "sensors: {}", geom.len()).unwrap();
    writeln!(s, "aperture: {}", geom.aperture()).unwrap();
    let lags: Vec<i64> = co.lags().filter(|&l| l >= 0).collect();
    writeln!(s, "coarray lags: {} distinct, max {}", co.lags().count(), lags.last().unwrap()).unwrap();
    let holes = co.holes();
    if holes.is_empty() {
        writeln!(s, "holes: none").unwrap();
    } else {
        let h: Vec<String> = holes.iter().map(|l| l.to_string()).collect();
        writeln!(s, "holes: {}", h.join(" ")).unwrap();
    }
    writeln!(s, "weights (lag: count, non-negative lags):").unwrap();
    for l in lags {
        writeln!(s, "  {l:>4}: {}", co.weight(l)).unwrap();
    }
    writeln!(s, "UDOF: {}", co.udof()).unwrap();
    writeln!(s, "G: {}", co.g()).unwrap();
    writeln!(s, "max sources: {}", (co.udof() - 1) / 2).unwrap();
    if let Some((d, max)) = bound {
        writeln!(s, "max a = {max} (D = {d})").unwrap();
    }
    s
}

#[derive(Serialize)]
struct EstimateReport<'a> {
    config: &'a EstimateConfig,
    geometry: String,
    window: usize,
    windows: usize,
    unit: &'static str,
    thetas: Vec<f64>,
    diagnostics: &'a coarray_doa::estimators::Diagnostics,
}

fn load_covariance(cfg: &EstimateConfig, geom: &ArrayGeometry) -> Result<CovarianceMatrix, CliError> {
    let noise = noise_variance_from_snr_db(cfg.snr_db);
    if let Some(path) = &cfg.snapshot_file {
        let file = File::open(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let reader = BufReader::new(file);
        let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        let x = if is_csv { SnapshotSet::read_csv(reader) } else { SnapshotSet::read_binary(reader) }
            .map_err(|e| CliError::Validation(format!("snapshot_file {}: {e}", path.display())))?;
        if x.sensors() != geom.len() {
            return Err(CliError::Validation(format!(
                "snapshot_file: {} rows but the geometry has {} sensors",
                x.sensors(),
                geom.len()
            )));
        }
        return Ok(sample_covariance(&x));
    }
    let scene = cfg.scene.as_ref().expect("validated: scene present without snapshot file");
    Ok(match cfg.covariance {
        CovarianceSource::Exact => exact_covariance(scene, geom, noise)?,
        CovarianceSource::Sample => sample_covariance(&simulate_snapshots(scene, geom, cfg.snapshots, noise, cfg.seed)?),
    })
}

fn to_degrees(theta: f64) -> f64 {
    theta.asin().to_degrees()
}

/// Six decimals, without a sign on values that round to zero.
fn fmt6(x: f64) -> String {
    let x = if x.abs() < 5e-7 { 0.0 } else { x };
    format!("{x:.6}")
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|&x| fmt6(x)).collect::<Vec<_>>().join(" ")
}

pub fn estimate(
    path: &Path,
    ov: Overrides,
    degrees: bool,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<(), CliError> {
    let cfg = config::load_estimate(path, ov)?;
    let geom = cfg.geometry.build()?;
    let r = load_covariance(&cfg, &geom)?;
    let pipeline = PipelineConfig {
        grid_points: cfg.grid_points,
        ..PipelineConfig::new(cfg.sources, cfg.shrinkage, cfg.method)
    };
    let est = run_estimate(&r, &geom, &pipeline).map_err(|e| match e {
        DoaError::ShrinkageTooLarge { .. } => CliError::Validation(format!("a: {e}")),
        other => other.into(),
    })?;

    if let Some(out) = out {
        let spectrum = match est.spectrum {
            Some(ref s) => s.clone(),
            None => root_method_spectrum(&r, &geom, &cfg)?,
        };
        let mut w = create(out)?;
        spectrum.write_csv(&mut w)?;
        finish(w, out)?;
    }

    let convert = |v: &[f64]| -> Vec<f64> {
        if degrees {
            v.iter().map(|&t| to_degrees(t)).collect()
        } else {
            v.to_vec()
        }
    };
    let thetas = convert(&est.result.thetas);
    let unit = if degrees { "degrees" } else { "sine" };
    let mut stdout = io::stdout().lock();
    match format {
        Some(Format::Json) => {
            let report = EstimateReport {
                config: &cfg,
                geometry: geom.to_string(),
                window: est.plan.window(),
                windows: est.plan.windows(),
                unit,
                thetas,
                diagnostics: &est.result.diagnostics,
            };
            serde_json::to_writer_pretty(&mut stdout, &report).map_err(|e| CliError::Io(e.to_string()))?;
            writeln!(stdout)?;
        }
        Some(Format::Csv) => {
            writeln!(stdout, "source,theta")?;
            for (i, t) in thetas.iter().enumerate() {
                writeln!(stdout, "{},{}", i + 1, fmt6(*t))?;
            }
        }
        None => {
            writeln!(stdout, "geometry: {geom}")?;
            writeln!(stdout, "method: {}", cfg.method)?;
            writeln!(stdout, "a: {} (M = {}, P = {})", cfg.shrinkage, est.plan.window(), est.plan.windows())?;
            match (&cfg.snapshot_file, cfg.covariance) {
                (Some(p), _) => writeln!(stdout, "data: {}", p.display())?,
                (None, CovarianceSource::Exact) => writeln!(stdout, "data: exact covariance, snr_db = {}", cfg.snr_db)?,
                (None, CovarianceSource::Sample) => writeln!(
                    stdout,
                    "data: simulated, T = {}, snr_db = {}, seed = {}",
                    cfg.snapshots, cfg.snr_db, cfg.seed
                )?,
            }
            writeln!(stdout, "theta ({unit}): {}", fmt_list(&thetas))?;
            if let Some(scene) = &cfg.scene {
                let truth = convert(scene.thetas());
                writeln!(stdout, "true theta ({unit}): {}", fmt_list(&truth))?;
                let err = thetas.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                writeln!(stdout, "max abs error ({unit}): {err:.3e}")?;
            }
            let d = &est.result.diagnostics;
            match cfg.method {
                coarray_doa::estimators::Method::Music => {
                    writeln!(stdout, "peaks found: {}, fill count: {}", d.peaks_found, d.fill_count)?
                }
                coarray_doa::estimators::Method::RootMusic => writeln!(
                    stdout,
                    "root moduli: {}, outer roots used: {}",
                    fmt_list(&d.root_moduli),
                    d.outer_roots_used
                )?,
            }
            if est.result.is_degraded() {
                writeln!(stdout, "warning: estimate is degraded (see diagnostics)")?;
            }
        }
    }
    Ok(())
}

/// Pseudospectrum from the same noise subspace, for plotting root-MUSIC runs.
fn root_method_spectrum(r: &CovarianceMatrix, geom: &ArrayGeometry, cfg: &EstimateConfig) -> Result<Spectrum, CliError> {
    let x = coarray_signal(r, geom)?;
    let s = vws_smooth(&x, cfg.shrinkage)?;
    let sub = noise_subspace(&s, cfg.sources)?;
    Ok(music_spectrum(&sub.noise, &uniform_grid(cfg.grid_points))?)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let candidate = out.with_extension("json");
    if candidate == out {
        let mut s = out.as_os_str().to_owned();
        s.push(".config.json");
        PathBuf::from(s)
    } else {
        candidate
    }
}

fn summary_table(results: &[SweepResult]) -> String {
    let mut s = String::new();
    let Some(first) = results.first() else { return s };
    let axis = first.config.axis.name();
    write!(s, "{:<14} {:<14} {:>3}", "geometry", "method", "a").unwrap();
    for p in &first.points {
        write!(s, " {:>12}", format!("{axis}={}", p.axis_value)).unwrap();
    }
    writeln!(s, " {:>6}", "fills").unwrap();
    for r in results {
        write!(s, "{:<14} {:<14} {:>3}", r.geometry_name(), r.config.method.to_string(), r.config.shrinkage).unwrap();
        for p in &r.points {
            write!(s, " {:>12.4e}", p.rmse).unwrap();
        }
        writeln!(s, " {:>6}", r.points.iter().map(|p| p.fills).sum::<usize>()).unwrap();
    }
    s
}

pub fn sweep(path: &Path, ov: Overrides, out: Option<&Path>, format: Format) -> Result<(), CliError> {
    let plan = config::load_sweep(path, ov)?;
    let mut results = Vec::new();
    let mut skipped = 0;
    for geometry in &plan.geometries {
        for &method in &plan.methods {
            for &a in &plan.shrinkages {
                let cfg = ExperimentConfig {
                    geometry: geometry.clone(),
                    method,
                    shrinkage: a,
                    ..plan.template.clone()
                };
                match rmse_sweep(&cfg) {
                    Ok(r) => results.push(r),
                    Err(e @ (DoaError::Io(_) | DoaError::Numerical(_))) => return Err(e.into()),
                    Err(e) => {
                        eprintln!("warning: skipping {geometry}, {method}, a = {a}: {e}");
                        skipped += 1;
                    }
                }
            }
        }
    }
    if results.is_empty() {
        return Err(CliError::Validation(format!("no feasible series ({skipped} skipped)")));
    }

    let write = |w: &mut dyn Write, fmt: Format| -> Result<(), DoaError> {
        match fmt {
            Format::Csv => write_csv(w, &results, CsvOptions::default()),
            Format::Json => write_json(w, &results),
        }
    };
    match out {
        Some(out) => {
            let mut w = create(out)?;
            write(&mut w, format)?;
            finish(w, out)?;
            if format == Format::Csv {
                let side = sidecar_path(out);
                let mut w = create(&side)?;
                write(&mut w, Format::Json)?;
                finish(w, &side)?;
            }
            print!("{}", summary_table(&results));
        }
        None => {
            let mut stdout = io::stdout().lock();
            write(&mut stdout, format)?;
            stdout.flush()?;
            eprint!("{}", summary_table(&results));
        }
    }
    Ok(())
}
