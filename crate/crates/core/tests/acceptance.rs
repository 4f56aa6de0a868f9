//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test --release -p coarray-doa --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use coarray_doa::coarray::{check_shrinkage, coarray_signal, max_shrinkage, vws_smooth};
use coarray_doa::estimators::{estimate, noise_subspace, Method, PipelineConfig, DEFAULT_GRID_POINTS};
use coarray_doa::geometry::ArrayGeometry;
use coarray_doa::montecarlo::{rmse_sweep, write_csv, CsvOptions, ExperimentConfig, GeometrySpec, SweepAxis, SweepResult};
use coarray_doa::signal::{exact_covariance, SourceScene};
use coarray_doa::{CMatrix, Complex64, DoaError};

use common::{max_abs_error, reference_steering, rel_frobenius};

const SEED: u64 = 2024;
const TRIALS: usize = 500;
const SNAPSHOTS: usize = 1000;
const THREE: [f64; 3] = [-0.8, 0.0, 0.8];
const FIVE: [f64; 5] = [-0.8, -0.4, 0.0, 0.4, 0.8];

// Pinned tolerances.
const TOL_DECOMPOSITION: f64 = 1e-10;
const TOL_ORTHOGONALITY: f64 = 1e-8;
const TOL_ROOT: f64 = 1e-6;
const TOL_GRID: f64 = 2.0 / DEFAULT_GRID_POINTS as f64;
const SLACK_SNAPSHOTS: f64 = 1.05;
const LIMIT_CRIT1: Duration = Duration::from_secs(1);
const LIMIT_CRIT3: Duration = Duration::from_secs(10);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn nested() -> ArrayGeometry {
    ArrayGeometry::nested(4, 4).unwrap()
}

/// `R1 = A diag(p) A^H + sigma^2 I` and
/// `R2sq = A B B^H A^H` with `B = diag(p) [omega^i]`,
/// `i in {-a..-1} U {G-a..G-1}`, `omega = exp(-j pi theta)`, written out
/// independently of the library.
fn closed_form_smoothed(thetas: &[f64], g: usize, a: usize, noise: f64) -> CMatrix {
    let m = g - a;
    let d = thetas.len();
    let ar = CMatrix::from_fn(m, d, |i, k| Complex64::from_polar(1.0, PI * i as f64 * thetas[k]));
    let mut r1 = &ar * ar.adjoint();
    for i in 0..m {
        r1[(i, i)] += noise;
    }
    let exps: Vec<i64> = (-(a as i64)..0).chain(g as i64 - a as i64..g as i64).collect();
    let b = CMatrix::from_fn(d, exps.len(), |k, c| {
        Complex64::from_polar(1.0, -PI * thetas[k] * exps[c] as f64)
    });
    let r2sq = &ar * &b * b.adjoint() * ar.adjoint();
    (&r1 * &r1 + r2sq) / Complex64::new((g + a) as f64, 0.0)
}

fn crit1_decomposition() -> Outcome {
    let start = Instant::now();
    let g = nested();
    let scene = SourceScene::unit_power(THREE.to_vec()).unwrap();
    let mut worst: f64 = 0.0;
    for noise in [0.1, 1.0, 10.0] {
        let x = coarray_signal(&exact_covariance(&scene, &g, noise).unwrap(), &g).unwrap();
        for a in [0, 1, 3, 5, 16] {
            let s = vws_smooth(&x, a).unwrap();
            let want = closed_form_smoothed(&THREE, x.g(), a, noise);
            worst = worst.max(rel_frobenius(s.values(), &want));
        }
    }
    let took = start.elapsed();
    outcome(
        worst <= TOL_DECOMPOSITION && took < LIMIT_CRIT1,
        format!("max rel err {worst:.2e} (tol {TOL_DECOMPOSITION:.0e}), {took:.2?} (limit {LIMIT_CRIT1:?})"),
    )
}

fn crit2_subspace() -> Outcome {
    let g = nested();
    let scene = SourceScene::unit_power(THREE.to_vec()).unwrap();
    let mut worst: f64 = 0.0;
    for noise in [0.1, 1.0, 10.0] {
        let x = coarray_signal(&exact_covariance(&scene, &g, noise).unwrap(), &g).unwrap();
        for a in [0, 1, 3, 5, 16] {
            let s = vws_smooth(&x, a).unwrap();
            let m = s.plan().window();
            let un = noise_subspace(&s, 3).unwrap().noise;
            for &t in &THREE {
                let v = reference_steering(m, t);
                let proj: f64 = un
                    .column_iter()
                    .map(|u| u.iter().zip(&v).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr())
                    .sum::<f64>()
                    .sqrt()
                    / (m as f64).sqrt();
                worst = worst.max(proj);
            }
        }
    }
    outcome(worst < TOL_ORTHOGONALITY, format!("max normalized projection {worst:.2e} (tol {TOL_ORTHOGONALITY:.0e})"))
}

fn crit3_population_exactness() -> Outcome {
    let start = Instant::now();
    let (mut root_worst, mut music_worst, mut cases): (f64, f64, usize) = (0.0, 0.0, 0);
    for g in common::test_geometries() {
        let udof = g.coarray().udof();
        for thetas in common::test_scenes() {
            let d = thetas.len();
            let Ok(max_a) = max_shrinkage(udof, d) else { continue };
            let scene = SourceScene::unit_power(thetas.clone()).unwrap();
            for noise in [0.0, 0.1, 1.0, 10.0] {
                let r = exact_covariance(&scene, &g, noise).unwrap();
                for a in 0..=max_a {
                    let root = estimate(&r, &g, &PipelineConfig::new(d, a, Method::RootMusic)).unwrap();
                    root_worst = root_worst.max(max_abs_error(&root.result.thetas, &thetas));
                    let music = estimate(&r, &g, &PipelineConfig::new(d, a, Method::Music)).unwrap();
                    music_worst = music_worst.max(max_abs_error(&music.result.thetas, &thetas));
                    cases += 1;
                }
            }
        }
    }
    let took = start.elapsed();
    outcome(
        root_worst < TOL_ROOT && music_worst <= TOL_GRID + 1e-12 && took < LIMIT_CRIT3,
        format!(
            "{cases} cases; root max err {root_worst:.2e} (tol {TOL_ROOT:.0e}), MUSIC max err {music_worst:.2e} (tol {TOL_GRID:.0e}), {took:.2?} (limit {LIMIT_CRIT3:?})"
        ),
    )
}

fn crit4_bound() -> Outcome {
    let m39 = max_shrinkage(39, 3).unwrap();
    let m47 = max_shrinkage(47, 5).unwrap();
    let mra_udof = ArrayGeometry::mra(8).unwrap().coarray().udof();
    let rejected = matches!(check_shrinkage(39, 3, 17), Err(DoaError::ShrinkageTooLarge { max: 16, .. }));
    let cfg_rejected = ExperimentConfig {
        shrinkage: 17,
        ..sweep_config(GeometrySpec::Nested { n1: 4, n2: 4 }, Method::Music, 0, SweepAxis::SnrDb(vec![0.0]))
    }
    .validate()
    .is_err();
    outcome(
        m39 == 16 && m47 == 18 && mra_udof == 47 && rejected && cfg_rejected,
        format!("max a(39,3) = {m39}, max a(47,5) = {m47}, MRA(8) UDOF {mra_udof}, a = 17 rejected: {}", rejected && cfg_rejected),
    )
}

fn crit5_more_sources_than_sensors() -> Outcome {
    let g = nested();
    let thetas: Vec<f64> = (1..=9).map(|k| -1.0 + 0.2 * k as f64).collect();
    let scene = SourceScene::unit_power(thetas.clone()).unwrap();
    let r = exact_covariance(&scene, &g, 1.0).unwrap();
    let est = estimate(&r, &g, &PipelineConfig::new(9, 0, Method::RootMusic)).unwrap();
    let err = max_abs_error(&est.result.thetas, &thetas);
    outcome(
        g.len() == 8 && est.result.thetas.len() == 9 && err < TOL_ROOT,
        format!("{} sensors, 9 sources, max err {err:.2e} (tol {TOL_ROOT:.0e})", g.len()),
    )
}

fn sweep_config(geometry: GeometrySpec, method: Method, a: usize, axis: SweepAxis) -> ExperimentConfig {
    ExperimentConfig {
        geometry,
        scene: SourceScene::unit_power(THREE.to_vec()).unwrap(),
        method,
        shrinkage: a,
        snapshots: SNAPSHOTS,
        snr_db: 10.0,
        axis,
        trials: TRIALS,
        seed: SEED,
        grid_points: DEFAULT_GRID_POINTS,
    }
}

fn fmt_curve(r: &[f64]) -> String {
    r.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(" ")
}

/// Sweeps behind criteria 6 to 8, in a fixed order.
struct TrendRuns {
    shrinkage: Vec<SweepResult>,
    geometries: Vec<SweepResult>,
    snapshots: Vec<SweepResult>,
}

fn run_trend_sweeps() -> TrendRuns {
    let two_geoms = [GeometrySpec::Nested { n1: 4, n2: 4 }, GeometrySpec::SuperNested { n1: 4, n2: 4 }];
    let methods = [Method::Music, Method::RootMusic];

    let mut shrinkage = Vec::new();
    for geom in &two_geoms {
        for method in methods {
            for a in [0, 3] {
                let cfg = sweep_config(geom.clone(), method, a, SweepAxis::SnrDb(vec![0.0, 5.0, 10.0]));
                shrinkage.push(rmse_sweep(&cfg).unwrap());
            }
        }
    }

    let mut geometries = Vec::new();
    for geom in [GeometrySpec::Mra { n: 8 }, two_geoms[1].clone(), two_geoms[0].clone()] {
        let cfg = ExperimentConfig {
            scene: SourceScene::unit_power(FIVE.to_vec()).unwrap(),
            ..sweep_config(geom, Method::Music, 3, SweepAxis::SnrDb(vec![10.0, 15.0, 20.0]))
        };
        geometries.push(rmse_sweep(&cfg).unwrap());
    }

    let mut snapshots = Vec::new();
    for method in methods {
        let cfg = sweep_config(two_geoms[0].clone(), method, 3, SweepAxis::Snapshots(vec![100, 300, 1000, 3000]));
        snapshots.push(rmse_sweep(&cfg).unwrap());
    }
    TrendRuns { shrinkage, geometries, snapshots }
}

fn trend_csv(runs: &TrendRuns) -> Vec<u8> {
    let all: Vec<SweepResult> = runs
        .shrinkage
        .iter()
        .chain(&runs.geometries)
        .chain(&runs.snapshots)
        .cloned()
        .collect();
    let mut out = Vec::new();
    write_csv(&mut out, &all, CsvOptions { timing: false }).unwrap();
    out
}

fn crit6_shrinkage_helps(runs: &TrendRuns) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for pair in runs.shrinkage.chunks(2) {
        let (r0, r3) = (pair[0].rmse(), pair[1].rmse());
        let ok = r3.iter().zip(&r0).all(|(x, y)| x <= y);
        pass &= ok;
        parts.push(format!(
            "{} {}: a=0 [{}] a=3 [{}]{}",
            pair[0].geometry_name(),
            pair[0].config.method,
            fmt_curve(&r0),
            fmt_curve(&r3),
            if ok { "" } else { " <-- violated" }
        ));
    }
    outcome(pass, format!("K={TRIALS}, T={SNAPSHOTS}, SNR 0/5/10 dB\n      {}", parts.join("\n      ")))
}

fn crit7_mra_lowest(runs: &TrendRuns) -> Outcome {
    let mra = runs.geometries[0].rmse();
    let mut pass = true;
    let mut parts = vec![format!("{} [{}]", runs.geometries[0].geometry_name(), fmt_curve(&mra))];
    for other in &runs.geometries[1..] {
        let r = other.rmse();
        pass &= mra.iter().zip(&r).all(|(m, o)| m <= o);
        parts.push(format!("{} [{}]", other.geometry_name(), fmt_curve(&r)));
    }
    outcome(pass, format!("D=5, a=3, MUSIC, SNR 10/15/20 dB\n      {}", parts.join("\n      ")))
}

fn crit8_snapshots(runs: &TrendRuns) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for res in &runs.snapshots {
        let r = res.rmse();
        let ok = r.windows(2).all(|w| w[1] < SLACK_SNAPSHOTS * w[0]);
        pass &= ok;
        parts.push(format!("{} {}: [{}]", res.geometry_name(), res.config.method, fmt_curve(&r)));
    }
    outcome(
        pass,
        format!("T 100/300/1000/3000 at 10 dB, slack {SLACK_SNAPSHOTS}\n      {}", parts.join("\n      ")),
    )
}

fn crit9_evd_cost() -> Outcome {
    let mean_evd = |a: usize| {
        let cfg = ExperimentConfig {
            trials: 200,
            ..sweep_config(GeometrySpec::Nested { n1: 4, n2: 4 }, Method::RootMusic, a, SweepAxis::SnrDb(vec![10.0]))
        };
        rmse_sweep(&cfg).unwrap().points[0].mean_evd_time
    };
    let (t16, t0) = (mean_evd(16), mean_evd(0));
    outcome(
        t16 < t0,
        format!("mean EVD a=16 (M=4) {:.2} us, a=0 (M=20) {:.2} us, ratio {:.1}", t16 * 1e6, t0 * 1e6, t0 / t16),
    )
}

fn crit10_determinism(reference: &[u8]) -> Outcome {
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| trend_csv(&run_trend_sweeps()));
    outcome(
        single == reference,
        format!("{} CSV bytes, 4-thread pool vs 1-thread pool identical: {}", reference.len(), single == reference),
    )
}

fn main() {
    let names = [
        "decomposition identity",
        "subspace preservation",
        "population exactness",
        "identifiability bound",
        "more sources than sensors",
        "shrinkage lowers RMSE",
        "MRA attains lowest RMSE",
        "RMSE falls with snapshots",
        "EVD cost shrinks with window",
        "determinism",
    ];
    let mut results = vec![crit1_decomposition(), crit2_subspace(), crit3_population_exactness(), crit4_bound(), crit5_more_sources_than_sensors()];

    let start = Instant::now();
    let runs = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(run_trend_sweeps);
    let trend_time = start.elapsed();
    results.push(crit6_shrinkage_helps(&runs));
    results.push(crit7_mra_lowest(&runs));
    results.push(crit8_snapshots(&runs));
    results.push(crit9_evd_cost());
    results.push(crit10_determinism(&trend_csv(&runs)));

    println!();
    println!("acceptance (Monte Carlo sweeps took {trend_time:.1?})");
    for (i, (name, r)) in names.iter().zip(&results).enumerate() {
        println!("[{}] {:>2}. {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
