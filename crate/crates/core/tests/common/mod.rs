//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the crate's numerical code.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::f64::consts::PI;

use coarray_doa::geometry::ArrayGeometry;
use coarray_doa::{CMatrix, Complex64};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Every pairwise difference with its multiplicity, by double loop.
pub fn brute_weights(pos: &[i64]) -> BTreeMap<i64, usize> {
    let mut w = BTreeMap::new();
    for &a in pos {
        for &b in pos {
            *w.entry(a - b).or_insert(0) += 1;
        }
    }
    w
}

/// Length of the hole-free run of lags centred at zero.
pub fn brute_udof(pos: &[i64]) -> usize {
    let w = brute_weights(pos);
    let mut l = 0;
    while w.contains_key(&(l + 1)) {
        l += 1;
    }
    (2 * l + 1) as usize
}

/// `R[i][j] = sum_d p_d exp(j pi (n_j - n_i) theta_d) + sigma^2 delta_ij`,
/// written entry by entry.
pub fn population_covariance(pos: &[i64], thetas: &[f64], powers: &[f64], noise: f64) -> CMatrix {
    let n = pos.len();
    CMatrix::from_fn(n, n, |i, j| {
        let mut s = c(if i == j { noise } else { 0.0 }, 0.0);
        for (t, p) in thetas.iter().zip(powers) {
            s += Complex64::from_polar(*p, PI * (pos[j] - pos[i]) as f64 * t);
        }
        s
    })
}

/// Coarray value at `lag` for a population scene.
pub fn population_lag(thetas: &[f64], powers: &[f64], noise: f64, lag: i64) -> Complex64 {
    let mut s = c(if lag == 0 { noise } else { 0.0 }, 0.0);
    for (t, p) in thetas.iter().zip(powers) {
        s += Complex64::from_polar(*p, PI * lag as f64 * t);
    }
    s
}

/// Reference-window steering vector `[exp(j pi m theta)]`, `m = 0..len-1`.
pub fn reference_steering(len: usize, theta: f64) -> Vec<Complex64> {
    (0..len).map(|m| Complex64::from_polar(1.0, PI * m as f64 * theta)).collect()
}

pub fn rel_frobenius(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

pub fn test_geometries() -> Vec<ArrayGeometry> {
    vec![
        ArrayGeometry::ula(8).unwrap(),
        ArrayGeometry::nested(4, 4).unwrap(),
        ArrayGeometry::super_nested(4, 4).unwrap(),
        ArrayGeometry::mra(8).unwrap(),
    ]
}

pub fn test_scenes() -> Vec<Vec<f64>> {
    vec![
        vec![0.3],
        vec![-0.5, 0.4],
        vec![-0.8, 0.0, 0.8],
        vec![-0.8, -0.4, 0.0, 0.4, 0.8],
    ]
}

/// Largest absolute difference after sorting both lists.
pub fn max_abs_error(est: &[f64], truth: &[f64]) -> f64 {
    let mut e = est.to_vec();
    e.sort_by(f64::total_cmp);
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    assert_eq!(e.len(), t.len());
    e.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}
