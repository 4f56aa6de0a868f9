//! Coarray signal extraction and variable-window-size spatial smoothing.
//!
//! The covariance of a sparse array is folded onto its difference coarray by
//! averaging all entries `R[i, j]` that share a lag `n_j - n_i`. On the
//! contiguous lags `-(G-1)..=(G-1)` this gives a virtual ULA signal
//! `x(l) = sum_d p_d exp(j pi l theta_d) + sigma^2 delta(l)`.
//!
//! Smoothing with shrinkage `a` uses windows of length `M = G - a`. There are
//! `P = G + a` of them: window `p` (1-based) covers lags `a-p+1 ..= a-p+M`.
//! Windows `a+1 ..= a+M` contain lag 0 and therefore the noise spike; the
//! `2a` others do not. `a = 0` is plain fixed-window coarray smoothing.

use std::io::Write;

use nalgebra::DVector;

use crate::error::{invalid, DoaError, Result};
use crate::geometry::{ArrayGeometry, Coarray};
use crate::signal::{steering_matrix, CovarianceMatrix, PhaseSign, SourceScene};
use crate::{CMatrix, Complex64};

/// Redundancy-averaged covariance over the contiguous coarray lags.
#[derive(Debug, Clone, PartialEq)]
pub struct CoarraySignal {
    values: Vec<Complex64>,
}

impl CoarraySignal {
    /// Builds a signal from values at lags `-(G-1)..=(G-1)`. Length must be odd.
    pub fn from_values(values: Vec<Complex64>) -> Result<Self> {
        if values.len() % 2 == 0 {
            return Err(invalid(format!(
                "coarray signal length must be odd, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }

    /// Values ordered by ascending lag.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn udof(&self) -> usize {
        self.values.len()
    }

    pub fn g(&self) -> usize {
        (self.values.len() + 1) / 2
    }

    pub fn max_lag(&self) -> i64 {
        self.g() as i64 - 1
    }

    /// Value at `lag`, or `None` outside the contiguous segment.
    pub fn value(&self, lag: i64) -> Option<Complex64> {
        let idx = lag + self.max_lag();
        usize::try_from(idx).ok().and_then(|i| self.values.get(i).copied())
    }

    /// CSV with header `lag,real,imag`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "lag,real,imag")?;
        let l0 = -self.max_lag();
        for (i, z) in self.values.iter().enumerate() {
            writeln!(w, "{},{},{}", l0 + i as i64, z.re, z.im)?;
        }
        Ok(())
    }
}

/// Averages the covariance entries of every contiguous coarray lag.
///
/// `value(l)` is the mean of `R[i, j]` over sensor pairs with
/// `n_j - n_i = l`.
pub fn coarray_signal(r: &CovarianceMatrix, geom: &ArrayGeometry) -> Result<CoarraySignal> {
    if r.dim() != geom.len() {
        return Err(invalid(format!(
            "covariance is {0}x{0} but geometry has {1} sensors",
            r.dim(),
            geom.len()
        )));
    }
    let coarray = geom.coarray();
    let max = coarray.max_contiguous_lag();
    let len = coarray.udof();
    let mut sums = vec![Complex64::new(0.0, 0.0); len];
    let mut counts = vec![0usize; len];
    let pos = geom.positions();
    for (i, &ni) in pos.iter().enumerate() {
        for (j, &nj) in pos.iter().enumerate() {
            let lag = nj - ni;
            if lag.abs() <= max {
                let idx = (lag + max) as usize;
                sums[idx] += r.values()[(i, j)];
                counts[idx] += 1;
            }
        }
    }
    let values = sums
        .into_iter()
        .zip(counts)
        .map(|(s, c)| s / c as f64)
        .collect();
    Ok(CoarraySignal { values })
}

/// Window sizing for VWS smoothing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingPlan {
    a: usize,
    g: usize,
}

impl SmoothingPlan {
    /// Requires `M = G - a >= 2`.
    pub fn new(g: usize, a: usize) -> Result<Self> {
        if a + 2 > g {
            return Err(invalid(format!(
                "shrinkage a = {a} leaves a window of {} (< 2) for G = {g}",
                g as i64 - a as i64
            )));
        }
        Ok(Self { a, g })
    }

    /// Shrinkage `a`.
    pub fn shrinkage(&self) -> usize {
        self.a
    }

    pub fn g(&self) -> usize {
        self.g
    }

    /// Window length `M = G - a`.
    pub fn window(&self) -> usize {
        self.g - self.a
    }

    /// Number of windows `P = G + a`.
    pub fn windows(&self) -> usize {
        self.g + self.a
    }

    pub fn udof(&self) -> usize {
        2 * self.g - 1
    }

    /// Lowest lag covered by window `p` (1-based).
    pub fn first_lag(&self, p: usize) -> i64 {
        self.a as i64 - p as i64 + 1
    }

    /// Whether window `p` contains lag 0.
    pub fn is_perturbed(&self, p: usize) -> bool {
        (self.a + 1..=self.a + self.window()).contains(&p)
    }
}

/// Output of VWS smoothing: an `M x M` Hermitian PSD matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedMatrix {
    values: CMatrix,
    plan: SmoothingPlan,
}

impl SmoothedMatrix {
    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn plan(&self) -> &SmoothingPlan {
        &self.plan
    }

    /// Same plan, values multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: &self.values * Complex64::new(factor, 0.0),
            plan: self.plan,
        }
    }
}

/// `(1/P) sum_p w_p w_p^H` over the `P = G + a` windows of length `M = G - a`.
pub fn vws_smooth(x: &CoarraySignal, a: usize) -> Result<SmoothedMatrix> {
    let plan = SmoothingPlan::new(x.g(), a)?;
    let m = plan.window();
    let max = x.max_lag();
    let mut acc = CMatrix::zeros(m, m);
    for p in 1..=plan.windows() {
        let start = (plan.first_lag(p) + max) as usize;
        let w = &x.values[start..start + m];
        for j in 0..m {
            let wj = w[j].conj();
            for i in 0..m {
                acc[(i, j)] += w[i] * wj;
            }
        }
    }
    acc /= Complex64::new(plan.windows() as f64, 0.0);
    Ok(SmoothedMatrix { values: acc, plan })
}

/// Largest shrinkage satisfying `a < (UDOF + 1 - 2D) / 2`.
pub fn max_shrinkage(udof: usize, sources: usize) -> Result<usize> {
    if udof % 2 == 0 {
        return Err(invalid(format!("UDOF must be odd, got {udof}")));
    }
    if sources == 0 {
        return Err(invalid("need at least one source"));
    }
    let bound = udof as i64 - 2 * sources as i64 - 1;
    if bound < 0 {
        return Err(DoaError::Infeasible(format!(
            "{sources} sources cannot be resolved with UDOF = {udof} (need UDOF >= {})",
            2 * sources + 1
        )));
    }
    Ok((bound / 2) as usize)
}

/// Checks `a` against [`max_shrinkage`].
pub fn check_shrinkage(udof: usize, sources: usize, a: usize) -> Result<()> {
    let max = max_shrinkage(udof, sources)?;
    if a > max {
        return Err(DoaError::ShrinkageTooLarge {
            a,
            max,
            udof,
            sources,
        });
    }
    Ok(())
}

/// Population-level factorization of the VWS-smoothed matrix,
/// `R_ss = (R1^2 + R2sq) / P`.
#[derive(Debug, Clone)]
pub struct OracleDecomposition {
    /// `A_r diag(p) A_r^H + sigma^2 I`.
    pub r1: CMatrix,
    /// `A_r B B^H A_r^H`, the contribution of the unperturbed windows.
    pub r2sq: CMatrix,
    /// `diag(p) [omega_d^i]` for `i` in `{-a..-1} U {G-a..G-1}`; `D x 2a`.
    pub b: CMatrix,
    /// `omega_d = exp(-j pi theta_d)`.
    pub omegas: Vec<Complex64>,
    /// Reference-window manifold, lags `0..M-1`, `M x D`.
    pub reference_manifold: CMatrix,
    pub plan: SmoothingPlan,
}

impl OracleDecomposition {
    /// `(R1^2 + R2sq) / P`.
    pub fn smoothed(&self) -> CMatrix {
        (&self.r1 * &self.r1 + &self.r2sq) / Complex64::new(self.plan.windows() as f64, 0.0)
    }

    /// Numerical rank of `R2sq` at threshold `rel_tol * ||R2sq||_2`.
    pub fn r2sq_rank(&self, rel_tol: f64) -> usize {
        let sv = self.r2sq.clone().singular_values();
        let top = sv.iter().copied().fold(0.0, f64::max);
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > rel_tol * top).count()
    }
}

/// Builds the closed-form decomposition of the smoothed population matrix.
pub fn decompose_oracle(
    scene: &SourceScene,
    coarray: &Coarray,
    a: usize,
    noise_var: f64,
) -> Result<OracleDecomposition> {
    let plan = SmoothingPlan::new(coarray.g(), a)?;
    let m = plan.window();
    let g = plan.g() as i64;
    let d = scene.num_sources();

    let lags: Vec<i64> = (0..m as i64).collect();
    let ar = steering_matrix(&lags, scene.thetas(), PhaseSign::Positive);
    let pdiag = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        scene.powers().iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    let mut r1 = &ar * &pdiag * ar.adjoint();
    for i in 0..m {
        r1[(i, i)] += noise_var;
    }

    let omegas: Vec<Complex64> = scene
        .thetas()
        .iter()
        .map(|&t| Complex64::from_polar(1.0, -std::f64::consts::PI * t))
        .collect();
    let exponents: Vec<i64> = (-(a as i64)..0).chain(g - a as i64..g).collect();
    let b = CMatrix::from_fn(d, exponents.len(), |row, col| {
        omegas[row].powi(exponents[col] as i32) * scene.powers()[row]
    });
    let r2sq = &ar * &b * b.adjoint() * ar.adjoint();

    Ok(OracleDecomposition {
        r1,
        r2sq,
        b,
        omegas,
        reference_manifold: ar,
        plan,
    })
}
