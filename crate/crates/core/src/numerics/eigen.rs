use crate::error::{invalid, DoaError, Result};
use crate::{CMatrix, Complex64};

const MAX_SWEEPS: usize = 100;

/// Eigenpairs of a Hermitian matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl EigenDecomposition {
    /// Eigenvalues, largest first.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn into_parts(self) -> (Vec<f64>, CMatrix) {
        (self.eigenvalues, self.eigenvectors)
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// The input is replaced by its Hermitian part `(A + A^H) / 2` first, so
/// rounding-level asymmetry in sample covariances is harmless.
pub fn hermitian_evd(m: &CMatrix) -> Result<EigenDecomposition> {
    if !m.is_square() {
        return Err(invalid(format!("EVD needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid("EVD input has non-finite entries"));
    }
    let n = m.nrows();
    let mut a = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = CMatrix::identity(n, n);
    let norm = a.norm();

    if norm > 0.0 {
        let target = (f64::EPSILON * norm).powi(2);
        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diagonal_sq(&a) <= target {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diagonal_sq(&a) > target {
            return Err(DoaError::Numerical(format!(
                "Jacobi EVD did not converge in {MAX_SWEEPS} sweeps"
            )));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_sq(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for q in 0..n {
        for p in 0..q {
            s += 2.0 * a[(p, q)].norm_sqr();
        }
    }
    s
}

/// Annihilates `a[p, q]` with the unitary `U = diag(1, e^{-j phi}) R(c, s)`
/// acting on the `(p, q)` plane, where `phi = arg a[p, q]`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    // Entries of U on the (p, q) plane.
    let upp = Complex64::new(c, 0.0);
    let upq = Complex64::new(s, 0.0);
    let uqp = -phase.conj() * s;
    let uqq = phase.conj() * c;

    let n = a.nrows();
    for i in 0..n {
        let (x, y) = (a[(i, p)], a[(i, q)]);
        a[(i, p)] = x * upp + y * uqp;
        a[(i, q)] = x * upq + y * uqq;
    }
    for j in 0..n {
        let (x, y) = (a[(p, j)], a[(q, j)]);
        a[(p, j)] = upp.conj() * x + uqp.conj() * y;
        a[(q, j)] = upq.conj() * x + uqq.conj() * y;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    for i in 0..n {
        let (x, y) = (v[(i, p)], v[(i, q)]);
        v[(i, p)] = x * upp + y * uqp;
        v[(i, q)] = x * upq + y * uqq;
    }
}
