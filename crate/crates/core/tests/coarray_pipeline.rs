mod common;

use coarray_doa::coarray::*;
use coarray_doa::geometry::ArrayGeometry;
use coarray_doa::numerics::hermitian_evd;
use coarray_doa::signal::*;
use coarray_doa::{CMatrix, Complex64, DoaError};

use common::{population_lag, reference_steering, rel_frobenius};

const NOISE_LEVELS: [f64; 4] = [0.0, 0.1, 1.0, 10.0];

/// Every (geometry, scene, noise, a) combination with a window of at least 2
/// that satisfies the identifiability bound.
fn population_grid() -> Vec<(ArrayGeometry, SourceScene, f64, usize)> {
    let mut out = Vec::new();
    for g in common::test_geometries() {
        let udof = g.coarray().udof();
        for thetas in common::test_scenes() {
            let d = thetas.len();
            let Ok(max_a) = max_shrinkage(udof, d) else { continue };
            let scene = SourceScene::unit_power(thetas).unwrap();
            for &noise in &NOISE_LEVELS {
                for a in 0..=max_a {
                    out.push((g.clone(), scene.clone(), noise, a));
                }
            }
        }
    }
    out
}

fn population_smoothed(g: &ArrayGeometry, scene: &SourceScene, noise: f64, a: usize) -> SmoothedMatrix {
    let r = exact_covariance(scene, g, noise).unwrap();
    vws_smooth(&coarray_signal(&r, g).unwrap(), a).unwrap()
}

#[test]
fn population_coarray_signal() {
    let scene = SourceScene::new(vec![-0.4, 0.15, 0.77], vec![2.0, 1.0, 0.5]).unwrap();
    for g in common::test_geometries() {
        let r = exact_covariance(&scene, &g, 0.6).unwrap();
        let x = coarray_signal(&r, &g).unwrap();
        assert_eq!(x.udof(), g.coarray().udof());
        for lag in g.coarray().contiguous_lags() {
            let want = population_lag(scene.thetas(), scene.powers(), 0.6, lag);
            assert!((x.value(lag).unwrap() - want).norm() < 1e-12, "{g} lag {lag}");
        }
        assert!(x.value(x.max_lag() + 1).is_none());
    }
}

#[test]
fn smoothed_matrix_equals_closed_form_decomposition() {
    let mut checked = 0;
    for (g, scene, noise, a) in population_grid() {
        let smoothed = population_smoothed(&g, &scene, noise, a);
        let oracle = decompose_oracle(&scene, &g.coarray(), a, noise).unwrap();
        let err = rel_frobenius(smoothed.values(), &oracle.smoothed());
        assert!(err <= 1e-10, "{g} D={} s2={noise} a={a}: {err:e}", scene.num_sources());
        checked += 1;
    }
    assert!(checked > 500);
}

#[test]
fn noise_subspace_is_orthogonal_to_true_steering() {
    for (g, scene, noise, a) in population_grid() {
        let smoothed = population_smoothed(&g, &scene, noise, a);
        let m = smoothed.plan().window();
        let d = scene.num_sources();
        let evd = hermitian_evd(smoothed.values()).unwrap();
        let noise_vecs = evd.eigenvectors().columns(d, m - d).into_owned();
        for &t in scene.thetas() {
            let a_t = reference_steering(m, t);
            let unit = (m as f64).sqrt();
            for u in noise_vecs.column_iter() {
                let proj: Complex64 = u.iter().zip(&a_t).map(|(x, y)| x.conj() * y).sum();
                assert!(proj.norm() / unit < 1e-8, "{g} D={d} s2={noise} a={a}: {}", proj.norm());
            }
        }
    }
}

#[test]
fn noise_eigenvalues_sit_at_sigma4_over_p() {
    // R1 u = sigma^2 u and R2sq u = 0 on the noise subspace, so the smallest
    // M - D eigenvalues all equal sigma^4 / P.
    for (g, scene, noise, a) in population_grid() {
        let smoothed = population_smoothed(&g, &scene, noise, a);
        let plan = smoothed.plan();
        let evd = hermitian_evd(smoothed.values()).unwrap();
        let ev = evd.eigenvalues();
        let floor = noise * noise / plan.windows() as f64;
        for &l in &ev[scene.num_sources()..] {
            assert!((l - floor).abs() <= 1e-9 * ev[0], "{g} s2={noise} a={a}: {l} vs {floor}");
        }
    }
}

#[test]
fn r2sq_rank_is_bounded() {
    let g = ArrayGeometry::nested(4, 4).unwrap();
    let scene = SourceScene::unit_power(vec![-0.8, 0.0, 0.8]).unwrap();
    for a in [0usize, 1, 2, 3, 5, 16] {
        let oracle = decompose_oracle(&scene, &g.coarray(), a, 1.0).unwrap();
        let rank = oracle.r2sq_rank(1e-10);
        // Reported rather than pinned: for this scene omega_d^G = 1, so the
        // two column groups of B coincide and the rank is min(D, a).
        println!("a = {a}: rank(R2sq) = {rank}");
        assert!(rank <= (2 * a).min(scene.num_sources()), "a={a} rank={rank}");
        assert_eq!(oracle.b.ncols(), 2 * a);
    }
}

/// Fixed-window smoothing written with explicit selection matrices
/// `J_i = [0_{G x (G-i)}, I_G, 0_{G x (i-1)}]`, `i = 1..G`.
fn selection_matrix_smoothing(x: &[Complex64]) -> CMatrix {
    let g = (x.len() + 1) / 2;
    let xv = CMatrix::from_column_slice(x.len(), 1, x);
    let mut acc = CMatrix::zeros(g, g);
    for i in 1..=g {
        let mut j = CMatrix::zeros(g, x.len());
        for r in 0..g {
            j[(r, g - i + r)] = Complex64::new(1.0, 0.0);
        }
        let xi = &j * &xv;
        acc += &xi * xi.adjoint();
    }
    acc / Complex64::new(g as f64, 0.0)
}

#[test]
fn zero_shrinkage_is_fixed_window_smoothing() {
    let scene = SourceScene::unit_power(vec![-0.5, 0.1, 0.6]).unwrap();
    for g in common::test_geometries() {
        let xs = simulate_snapshots(&scene, &g, 64, 0.5, 8).unwrap();
        let x = coarray_signal(&sample_covariance(&xs), &g).unwrap();
        let ours = vws_smooth(&x, 0).unwrap();
        let want = selection_matrix_smoothing(x.values());
        assert!(rel_frobenius(ours.values(), &want) < 1e-13, "{g}");
    }
}

#[test]
fn smoothed_sample_matrices_are_hermitian_psd() {
    let scene = SourceScene::unit_power(vec![-0.8, 0.0, 0.8]).unwrap();
    for g in common::test_geometries() {
        let xs = simulate_snapshots(&scene, &g, 20, 2.0, 4).unwrap();
        let x = coarray_signal(&sample_covariance(&xs), &g).unwrap();
        let max_a = max_shrinkage(x.udof(), 3).unwrap();
        for a in 0..=max_a {
            let s = vws_smooth(&x, a).unwrap();
            let v = s.values();
            assert_eq!(v.nrows(), x.g() - a);
            assert!((v - v.adjoint()).norm() <= 1e-14 * v.norm());
            let ev = hermitian_evd(v).unwrap();
            let lo = *ev.eigenvalues().last().unwrap();
            assert!(lo >= -1e-12 * ev.eigenvalues()[0], "{g} a={a}: {lo}");
        }
    }
}

#[test]
fn window_bookkeeping() {
    let plan = SmoothingPlan::new(20, 3).unwrap();
    assert_eq!((plan.window(), plan.windows(), plan.udof()), (17, 23, 39));
    let perturbed: Vec<usize> = (1..=plan.windows()).filter(|&p| plan.is_perturbed(p)).collect();
    assert_eq!(perturbed, (4..=20).collect::<Vec<_>>());
    for p in 1..=plan.windows() {
        let lo = plan.first_lag(p);
        let hi = lo + plan.window() as i64 - 1;
        assert_eq!(plan.is_perturbed(p), lo <= 0 && 0 <= hi);
        assert!(lo >= -19 && hi <= 19);
    }
    assert!(SmoothingPlan::new(20, 19).is_err());
    assert!(SmoothingPlan::new(20, 18).is_ok());
}

#[test]
fn identifiability_bound() {
    assert_eq!(max_shrinkage(39, 3).unwrap(), 16);
    assert_eq!(max_shrinkage(47, 5).unwrap(), 18);
    assert_eq!(max_shrinkage(5, 2).unwrap(), 0);
    assert!(matches!(max_shrinkage(3, 2), Err(DoaError::Infeasible(_))));
    assert!(max_shrinkage(38, 3).is_err());
    assert!(check_shrinkage(39, 3, 16).is_ok());
    let err = check_shrinkage(39, 3, 17).unwrap_err();
    assert!(matches!(err, DoaError::ShrinkageTooLarge { max: 16, .. }));
    assert!(err.to_string().contains("16"));
}

#[test]
fn coarray_signal_csv() {
    let x = CoarraySignal::from_values(vec![
        Complex64::new(0.5, -1.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(0.5, 1.0),
    ])
    .unwrap();
    let mut buf = Vec::new();
    x.write_csv(&mut buf).unwrap();
    assert_eq!(String::from_utf8(buf).unwrap(), "lag,real,imag\n-1,0.5,-1\n0,2,0\n1,0.5,1\n");
    assert!(CoarraySignal::from_values(vec![Complex64::new(1.0, 0.0); 4]).is_err());
}
