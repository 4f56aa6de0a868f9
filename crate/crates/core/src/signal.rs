//! Far-field narrowband signal model.
//!
//! Snapshots follow `x(t) = A(theta) s(t) + n(t)` with
//! `A[k, d] = exp(-j pi n_k theta_d)`. Sources and noise are independent
//! zero-mean circular complex Gaussians; a unit-variance complex draw is
//! `(g1 + j g2) / sqrt(2)` with `g1, g2` standard normal.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{BufRead, Read, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, DoaError, Result};
use crate::geometry::ArrayGeometry;
use crate::rng;
use crate::{CMatrix, Complex64};

/// Far-field sources: sines of the arrival angles and their powers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScene")]
pub struct SourceScene {
    thetas: Vec<f64>,
    powers: Vec<f64>,
}

#[derive(Deserialize)]
struct RawScene {
    thetas: Vec<f64>,
    powers: Vec<f64>,
}

impl TryFrom<RawScene> for SourceScene {
    type Error = DoaError;

    fn try_from(raw: RawScene) -> Result<Self> {
        SourceScene::new(raw.thetas, raw.powers)
    }
}

impl SourceScene {
    /// `thetas` must be strictly increasing inside `[-1, 1)`; powers positive.
    pub fn new(thetas: Vec<f64>, powers: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(invalid("scene needs at least one source"));
        }
        if thetas.len() != powers.len() {
            return Err(invalid(format!(
                "{} directions but {} powers",
                thetas.len(),
                powers.len()
            )));
        }
        if let Some(t) = thetas.iter().find(|t| !(-1.0..1.0).contains(*t)) {
            return Err(invalid(format!("theta {t} outside [-1, 1)")));
        }
        if thetas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("thetas must be strictly increasing"));
        }
        if let Some(p) = powers.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(invalid(format!("source power {p} must be positive")));
        }
        Ok(Self { thetas, powers })
    }

    /// All sources at unit power.
    pub fn unit_power(thetas: Vec<f64>) -> Result<Self> {
        let powers = vec![1.0; thetas.len()];
        Self::new(thetas, powers)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn num_sources(&self) -> usize {
        self.thetas.len()
    }
}

/// Sign of the steering phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSign {
    /// `exp(-j pi n theta)`, physical array manifold.
    Negative,
    /// `exp(+j pi n theta)`, coarray manifold.
    Positive,
}

/// Steering matrix with entries `exp(sign j pi positions[k] thetas[d])`.
pub fn steering_matrix(positions: &[i64], thetas: &[f64], sign: PhaseSign) -> CMatrix {
    let s = match sign {
        PhaseSign::Negative => -1.0,
        PhaseSign::Positive => 1.0,
    };
    DMatrix::from_fn(positions.len(), thetas.len(), |k, d| {
        Complex64::from_polar(1.0, s * PI * positions[k] as f64 * thetas[d])
    })
}

/// Noise variance for a given SNR with unit-power sources: `10^(-snr/10)`.
/// `+inf` dB maps to a noiseless model.
pub fn noise_variance_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Draws one unit-variance circular complex Gaussian sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Array data, one row per sensor and one column per snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    data: CMatrix,
}

impl SnapshotSet {
    pub fn new(data: CMatrix) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(invalid("snapshot set needs at least one sensor and one snapshot"));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn sensors(&self) -> usize {
        self.data.nrows()
    }

    pub fn snapshots(&self) -> usize {
        self.data.ncols()
    }

    /// CSV form. First line `N,T`; then one line per sensor holding
    /// `re_0,im_0,re_1,im_1,...` for the `T` snapshots.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{},{}", self.sensors(), self.snapshots())?;
        for row in self.data.row_iter() {
            let mut first = true;
            for z in row.iter() {
                if !first {
                    w.write_all(b",")?;
                }
                first = false;
                write!(w, "{},{}", z.re, z.im)?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| DoaError::Parse("empty snapshot file".into()))??;
        let dims = parse_floats(&header)?;
        let [n, t] = dims.as_slice() else {
            return Err(DoaError::Parse(format!("expected header `N,T`, got {header:?}")));
        };
        let (n, t) = (*n as usize, *t as usize);
        let mut data = CMatrix::zeros(n, t);
        for k in 0..n {
            let line = lines
                .next()
                .ok_or_else(|| DoaError::Parse(format!("missing row {k} of {n}")))??;
            let vals = parse_floats(&line)?;
            if vals.len() != 2 * t {
                return Err(DoaError::Parse(format!(
                    "row {k}: expected {} values, got {}",
                    2 * t,
                    vals.len()
                )));
            }
            for j in 0..t {
                data[(k, j)] = Complex64::new(vals[2 * j], vals[2 * j + 1]);
            }
        }
        Self::new(data)
    }

    /// Binary form: magic `SDOA`, `N` and `T` as little-endian `u64`, then
    /// row-major interleaved `re, im` little-endian `f64` values.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.sensors() as u64).to_le_bytes())?;
        w.write_all(&(self.snapshots() as u64).to_le_bytes())?;
        for row in self.data.row_iter() {
            for z in row.iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(DoaError::Parse("not a snapshot file (bad magic)".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word)?;
        let t = u64::from_le_bytes(word) as usize;
        let mut data = CMatrix::zeros(n, t);
        for k in 0..n {
            for j in 0..t {
                r.read_exact(&mut word)?;
                let re = f64::from_le_bytes(word);
                r.read_exact(&mut word)?;
                let im = f64::from_le_bytes(word);
                data[(k, j)] = Complex64::new(re, im);
            }
        }
        Self::new(data)
    }
}

const BINARY_MAGIC: &[u8; 4] = b"SDOA";

fn parse_floats(line: &str) -> Result<Vec<f64>> {
    line.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| DoaError::Parse(format!("bad number {tok:?}: {e}")))
        })
        .collect()
}

/// Hermitian positive semidefinite array covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    values: CMatrix,
}

impl CovarianceMatrix {
    /// Accepts a square matrix that is Hermitian to `1e-12` relative to its
    /// largest entry, and stores its Hermitian part.
    pub fn new(values: CMatrix) -> Result<Self> {
        if !values.is_square() || values.nrows() == 0 {
            return Err(invalid("covariance must be a non-empty square matrix"));
        }
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(invalid("covariance has non-finite entries"));
        }
        let scale = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let skew = (&values - values.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(invalid(format!("covariance is not Hermitian (skew {skew:e})")));
        }
        Ok(Self::hermitian_part(values))
    }

    fn hermitian_part(values: CMatrix) -> Self {
        let sym = (&values + values.adjoint()) * Complex64::new(0.5, 0.0);
        Self { values: sym }
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }
}

/// `R = A diag(p) A^H + sigma^2 I`.
pub fn exact_covariance(
    scene: &SourceScene,
    geom: &ArrayGeometry,
    noise_var: f64,
) -> Result<CovarianceMatrix> {
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(invalid(format!("noise variance {noise_var} must be finite and >= 0")));
    }
    let a = steering_matrix(geom.positions(), scene.thetas(), PhaseSign::Negative);
    let p = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        scene.num_sources(),
        scene.powers().iter().map(|&p| Complex64::new(p, 0.0)),
    ));
    let mut r = &a * p * a.adjoint();
    for k in 0..geom.len() {
        r[(k, k)] += noise_var;
    }
    Ok(CovarianceMatrix::hermitian_part(r))
}

/// `R = X X^H / T`.
pub fn sample_covariance(x: &SnapshotSet) -> CovarianceMatrix {
    let t = x.snapshots() as f64;
    let r = x.data() * x.data().adjoint() / Complex64::new(t, 0.0);
    CovarianceMatrix::hermitian_part(r)
}

/// Simulates `t` snapshots with a generator derived from `seed`.
pub fn simulate_snapshots(
    scene: &SourceScene,
    geom: &ArrayGeometry,
    t: usize,
    noise_var: f64,
    seed: u64,
) -> Result<SnapshotSet> {
    simulate_snapshots_with(scene, geom, t, noise_var, &mut rng::from_seed(seed))
}

/// Simulates `t` snapshots drawing from `rng`.
///
/// Per snapshot the draws are the `D` source amplitudes followed by the `N`
/// noise samples; noise is drawn even when `noise_var` is 0 so that streams
/// stay aligned across noise levels.
pub fn simulate_snapshots_with<R: Rng + ?Sized>(
    scene: &SourceScene,
    geom: &ArrayGeometry,
    t: usize,
    noise_var: f64,
    rng: &mut R,
) -> Result<SnapshotSet> {
    if t < 1 {
        return Err(invalid("need at least one snapshot"));
    }
    if !(noise_var >= 0.0 && noise_var.is_finite()) {
        return Err(invalid(format!("noise variance {noise_var} must be finite and >= 0")));
    }
    let n = geom.len();
    let d = scene.num_sources();
    let a = steering_matrix(geom.positions(), scene.thetas(), PhaseSign::Negative);
    let amp: Vec<f64> = scene.powers().iter().map(|p| p.sqrt()).collect();
    let sigma = noise_var.sqrt();

    let mut s = CMatrix::zeros(d, t);
    let mut noise = CMatrix::zeros(n, t);
    for col in 0..t {
        for (k, amp) in amp.iter().enumerate() {
            s[(k, col)] = complex_gaussian(rng) * *amp;
        }
        for k in 0..n {
            noise[(k, col)] = complex_gaussian(rng) * sigma;
        }
    }
    SnapshotSet::new(a * s + noise)
}
