//! Subspace DOA estimators on the VWS-smoothed coarray matrix: MUSIC
//! pseudospectrum search and root-MUSIC.
//!
//! Both use the noise subspace `U_N` (eigenvectors of the `M - D` smallest
//! eigenvalues) and the reference-window manifold
//! `a(theta) = [exp(j pi m theta)]`, `m = 0..M-1`.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::coarray::{check_shrinkage, coarray_signal, vws_smooth, SmoothedMatrix, SmoothingPlan};
use crate::error::{invalid, DoaError, Result};
use crate::geometry::ArrayGeometry;
use crate::numerics::{hermitian_evd, polynomial_roots, EigenDecomposition};
use crate::signal::CovarianceMatrix;
use crate::{CMatrix, Complex64};

/// Default number of grid points for the MUSIC search (step `1e-3`).
pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Lower clamp on the MUSIC denominator `||U_N^H a||^2`.
pub const SPECTRUM_FLOOR: f64 = 1e-18;

/// Estimator variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "vws-ca-music")]
    Music,
    #[serde(rename = "vws-ca-rmusic")]
    RootMusic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Music => "vws-ca-music",
            Method::RootMusic => "vws-ca-rmusic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = DoaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vws-ca-music" | "music" => Ok(Method::Music),
            "vws-ca-rmusic" | "rmusic" | "root-music" => Ok(Method::RootMusic),
            other => Err(DoaError::Parse(format!(
                "unknown method {other:?} (expected vws-ca-music or vws-ca-rmusic)"
            ))),
        }
    }
}

/// Eigenvector split of the smoothed matrix.
#[derive(Debug, Clone)]
pub struct SubspacePair {
    pub eigenvalues: Vec<f64>,
    /// `M x D`, eigenvectors of the `D` largest eigenvalues.
    pub signal: CMatrix,
    /// `M x (M - D)`.
    pub noise: CMatrix,
}

impl SubspacePair {
    pub fn from_evd(evd: EigenDecomposition, sources: usize) -> Result<Self> {
        let (eigenvalues, vectors) = evd.into_parts();
        let m = vectors.nrows();
        if sources >= m {
            return Err(DoaError::Infeasible(format!(
                "{sources} sources need a window larger than M = {m}"
            )));
        }
        let signal = vectors.columns(0, sources).into_owned();
        let noise = vectors.columns(sources, m - sources).into_owned();
        Ok(Self {
            eigenvalues,
            signal,
            noise,
        })
    }
}

/// Eigendecomposes `r` and splits off the `M - d` dimensional noise subspace.
pub fn noise_subspace(r: &SmoothedMatrix, sources: usize) -> Result<SubspacePair> {
    SubspacePair::from_evd(hermitian_evd(r.values())?, sources)
}

/// `g` points uniformly spaced over `[-1, 1)`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| -1.0 + 2.0 * i as f64 / points as f64)
        .collect()
}

/// MUSIC pseudospectrum sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl Spectrum {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(invalid("spectrum grid and values differ in length"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("spectrum grid must be strictly increasing"));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// CSV with header `theta,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,value")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}

/// `P(theta) = 1 / ||U_N^H a(theta)||^2` on each grid point, unnormalized.
pub fn music_spectrum(noise: &CMatrix, grid: &[f64]) -> Result<Spectrum> {
    let m = noise.nrows();
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    let values = grid
        .iter()
        .map(|&theta| {
            for (k, ak) in a.iter_mut().enumerate() {
                *ak = Complex64::from_polar(1.0, PI * k as f64 * theta);
            }
            let den: f64 = noise
                .column_iter()
                .map(|u| {
                    u.iter()
                        .zip(&a)
                        .fold(Complex64::new(0.0, 0.0), |acc, (uk, ak)| acc + uk.conj() * ak)
                        .norm_sqr()
                })
                .sum();
            1.0 / den.max(SPECTRUM_FLOOR)
        })
        .collect();
    Spectrum::new(grid.to_vec(), values)
}

/// Per-estimate bookkeeping.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Local maxima found in the spectrum (MUSIC).
    pub peaks_found: usize,
    /// Estimates taken from non-peak grid points because fewer than `D`
    /// maxima existed (MUSIC).
    pub fill_count: usize,
    /// Moduli of the selected roots (root-MUSIC).
    pub root_moduli: Vec<f64>,
    /// Selected roots on or outside the unit circle (root-MUSIC).
    pub outer_roots_used: usize,
}

/// Estimated directions, ascending, in sine units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult {
    pub thetas: Vec<f64>,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

impl EstimationResult {
    /// True when the estimator had to fall back on fill values or outer roots.
    pub fn is_degraded(&self) -> bool {
        self.diagnostics.fill_count > 0 || self.diagnostics.outer_roots_used > 0
    }
}

/// Picks the `d` largest local maxima of the spectrum.
///
/// A point is a local maximum when strictly greater than both neighbours;
/// endpoints compare with their single neighbour. Ties go to the smaller
/// angle. Missing peaks are filled from the largest remaining grid values.
pub fn pick_peaks(s: &Spectrum, d: usize) -> EstimationResult {
    let v = s.values();
    let n = v.len();
    let is_max = |i: usize| {
        let left = i == 0 || v[i] > v[i - 1];
        let right = i + 1 == n || v[i] > v[i + 1];
        left && right
    };
    // descending value, then ascending index
    let by_value = |a: &usize, b: &usize| v[*b].total_cmp(&v[*a]).then(a.cmp(b));

    let mut peaks: Vec<usize> = (0..n).filter(|&i| is_max(i)).collect();
    let peaks_found = peaks.len();
    peaks.sort_by(by_value);
    peaks.truncate(d);

    let mut fill_count = 0;
    if peaks.len() < d {
        let mut rest: Vec<usize> = (0..n).filter(|i| !peaks.contains(i)).collect();
        rest.sort_by(by_value);
        for i in rest.into_iter().take(d - peaks.len()) {
            peaks.push(i);
            fill_count += 1;
        }
    }
    let mut thetas: Vec<f64> = peaks.iter().map(|&i| s.grid()[i]).collect();
    thetas.sort_by(f64::total_cmp);
    EstimationResult {
        thetas,
        method: Method::Music,
        diagnostics: Diagnostics {
            peaks_found,
            fill_count,
            ..Default::default()
        },
    }
}

/// Laurent coefficients `c_k = sum_i C[i, i + k]`, `k = -(M-1)..=(M-1)`, of
/// `C = U_N U_N^H`, returned as ascending polynomial coefficients of
/// `z^(M-1) sum_k c_k z^k`.
pub fn root_music_polynomial(noise: &CMatrix) -> Vec<Complex64> {
    let m = noise.nrows();
    let c = noise * noise.adjoint();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * m - 1];
    for k in 0..m {
        let diag: Complex64 = (0..m - k).map(|i| c[(i, i + k)]).sum();
        coeffs[m - 1 + k] = diag;
        if k > 0 {
            coeffs[m - 1 - k] = diag.conj();
        }
    }
    coeffs
}

/// Root-MUSIC: the `d` roots inside and closest to the unit circle give
/// `theta = arg(z) / pi`.
pub fn root_music(noise: &CMatrix, d: usize) -> Result<EstimationResult> {
    if d == 0 {
        return Err(invalid("root-MUSIC needs at least one source"));
    }
    if noise.nrows() < 2 {
        return Err(invalid("root-MUSIC needs a window of at least 2"));
    }
    let roots = polynomial_roots(trim_laurent_ends(&root_music_polynomial(noise)))?;
    let (selected, outer_roots_used) = select_roots(&roots, d);
    let mut thetas: Vec<f64> = selected.iter().map(|z| root_to_theta(*z)).collect();
    thetas.sort_by(f64::total_cmp);
    Ok(EstimationResult {
        thetas,
        method: Method::RootMusic,
        diagnostics: Diagnostics {
            root_moduli: selected.iter().map(|z| z.norm()).collect(),
            outer_roots_used,
            ..Default::default()
        },
    })
}

/// Relative size below which outermost Laurent coefficients count as zero.
const LAURENT_TRIM: f64 = 1e-13;

/// Drops matching pairs of negligible outermost coefficients `c_{+-k}`.
///
/// When the true polynomial has lower degree (for instance sources on roots
/// of unity), rounding leaves `c_{M-1}` near `1e-17`. That puts a root near
/// `1e16` into the companion matrix and destroys the accuracy of all others.
fn trim_laurent_ends(coeffs: &[Complex64]) -> &[Complex64] {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut lo = 0;
    let mut hi = coeffs.len() - 1;
    while hi > lo + 2 && coeffs[hi].norm() <= LAURENT_TRIM * scale && coeffs[lo].norm() <= LAURENT_TRIM * scale {
        lo += 1;
        hi -= 1;
    }
    &coeffs[lo..=hi]
}

/// Relative distance within which two roots count as a conjugate-reciprocal
/// pair.
const PAIR_TOL: f64 = 1e-4;

/// Picks `d` roots closest to the unit circle, one per conjugate-reciprocal
/// pair.
///
/// The polynomial is self-reciprocal, so its roots come in pairs
/// `(z, 1/conj(z))`. Roots are paired greedily in order of increasing modulus
/// and each pair is represented by its inner member; a root without a mirror
/// image stands alone. When a pair sits on the
/// circle (a double root at population level) rounding may push both members
/// to the same side; pairing keeps such a source from being counted twice or
/// dropped. Returns the selection and how many selected roots have
/// `|z| >= 1`.
fn select_roots(roots: &[Complex64], d: usize) -> (Vec<Complex64>, usize) {
    let closeness = |z: &Complex64| (1.0 - z.norm()).abs();
    let order = |a: &Complex64, b: &Complex64| {
        closeness(a)
            .total_cmp(&closeness(b))
            .then(a.arg().total_cmp(&b.arg()))
    };

    let mut by_modulus: Vec<usize> = (0..roots.len()).collect();
    by_modulus.sort_by(|&i, &j| roots[i].norm().total_cmp(&roots[j].norm()).then(i.cmp(&j)));
    let mut used = vec![false; roots.len()];
    let mut inner = Vec::new();
    let mut partners = Vec::new();
    for &i in &by_modulus {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = roots[i];
        inner.push(z);
        if z.norm() == 0.0 {
            continue;
        }
        let mirror = 1.0 / z.conj();
        let tol = PAIR_TOL * mirror.norm().max(1.0);
        let partner = (0..roots.len())
            .filter(|&j| !used[j] && (roots[j] - mirror).norm() <= tol)
            .min_by(|&j, &k| (roots[j] - mirror).norm().total_cmp(&(roots[k] - mirror).norm()));
        if let Some(j) = partner {
            used[j] = true;
            partners.push(roots[j]);
        }
    }

    inner.sort_by(order);
    inner.truncate(d);
    if inner.len() < d {
        partners.sort_by(order);
        let missing = d - inner.len();
        inner.extend(partners.into_iter().take(missing));
    }
    let outer = inner.iter().filter(|z| z.norm() >= 1.0).count();
    (inner, outer)
}

/// `arg(z) / pi`, folded into `[-1, 1)`.
fn root_to_theta(z: Complex64) -> f64 {
    let t = z.arg() / PI;
    if t >= 1.0 {
        t - 2.0
    } else {
        t
    }
}

/// Settings for the end-to-end estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub sources: usize,
    pub shrinkage: usize,
    pub method: Method,
    pub grid_points: usize,
}

impl PipelineConfig {
    pub fn new(sources: usize, shrinkage: usize, method: Method) -> Self {
        Self {
            sources,
            shrinkage,
            method,
            grid_points: DEFAULT_GRID_POINTS,
        }
    }
}

/// Output of the end-to-end estimator.
#[derive(Debug, Clone)]
pub struct Estimate {
    pub result: EstimationResult,
    /// Pseudospectrum, MUSIC only.
    pub spectrum: Option<Spectrum>,
    /// Wall time spent in the eigendecomposition.
    pub evd_time: Duration,
    pub plan: SmoothingPlan,
}

/// Full chain from array covariance to DOA estimates: redundancy averaging,
/// VWS smoothing, EVD and the selected estimator.
pub fn estimate(
    r: &CovarianceMatrix,
    geom: &ArrayGeometry,
    cfg: &PipelineConfig,
) -> Result<Estimate> {
    let udof = geom.coarray().udof();
    check_shrinkage(udof, cfg.sources, cfg.shrinkage)?;
    let x = coarray_signal(r, geom)?;
    let smoothed = vws_smooth(&x, cfg.shrinkage)?;
    estimate_smoothed(&smoothed, cfg)
}

/// Estimator stages on an already smoothed matrix.
pub fn estimate_smoothed(smoothed: &SmoothedMatrix, cfg: &PipelineConfig) -> Result<Estimate> {
    if cfg.sources == 0 {
        return Err(invalid("need at least one source"));
    }
    let start = Instant::now();
    let evd = hermitian_evd(smoothed.values())?;
    let evd_time = start.elapsed();
    let sub = SubspacePair::from_evd(evd, cfg.sources)?;
    let (result, spectrum) = match cfg.method {
        Method::Music => {
            if cfg.grid_points == 0 {
                return Err(invalid("MUSIC grid needs at least one point"));
            }
            let spectrum = music_spectrum(&sub.noise, &uniform_grid(cfg.grid_points))?;
            (pick_peaks(&spectrum, cfg.sources), Some(spectrum))
        }
        Method::RootMusic => (root_music(&sub.noise, cfg.sources)?, None),
    };
    Ok(Estimate {
        result,
        spectrum,
        evd_time,
        plan: *smoothed.plan(),
    })
}
