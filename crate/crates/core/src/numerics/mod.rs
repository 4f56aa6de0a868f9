//! Dense numeric kernels behind the estimators: Hermitian eigendecomposition
//! and polynomial rooting.

mod eigen;
mod roots;

pub use eigen::{hermitian_evd, EigenDecomposition};
pub use roots::{eval_poly, polynomial_roots};

use crate::Complex64;

/// `|re| + |im|`, the cheap modulus used for deflation and balancing tests.
#[inline]
pub(crate) fn abs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}
