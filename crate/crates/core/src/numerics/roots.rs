use super::abs1;
use crate::error::{invalid, DoaError, Result};
use crate::Complex64;

const MAX_QR_ITERS_PER_ROOT: usize = 60;
const POLISH_STEPS: usize = 3;

/// Evaluates `sum_k coeffs[k] z^k` by Horner's rule.
pub fn eval_poly(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// All roots, with multiplicity, of the polynomial with coefficients in
/// ascending powers.
///
/// Trailing zero coefficients are trimmed first; the degree is that of the
/// trimmed polynomial. Roots come from the eigenvalues of the balanced
/// companion matrix, followed by a few Newton steps on the original
/// polynomial.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(invalid("polynomial has non-finite coefficients"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let hi = coeffs
        .iter()
        .rposition(|&c| c != zero)
        .ok_or_else(|| invalid("zero polynomial has no well-defined roots"))?;
    if hi == 0 {
        return Err(invalid("constant polynomial has no roots"));
    }
    let lo = coeffs.iter().position(|&c| c != zero).unwrap_or(0);
    let reduced = &coeffs[lo..=hi];
    let m = hi - lo;

    let mut roots = vec![zero; lo];
    match m {
        0 => {}
        1 => roots.push(-reduced[0] / reduced[1]),
        _ => {
            let mut h = companion(reduced);
            balance(&mut h, m);
            let eig = hessenberg_eigenvalues(&mut h, m)?;
            roots.extend(eig.into_iter().map(|z| polish(reduced, z)));
        }
    }
    Ok(roots)
}

/// Row-major companion matrix of the monic form of `c` (degree `m >= 2`).
/// First row `-c[m-1..0] / c[m]`, ones on the subdiagonal.
fn companion(c: &[Complex64]) -> Vec<Complex64> {
    let m = c.len() - 1;
    let lead = c[m];
    let mut h = vec![Complex64::new(0.0, 0.0); m * m];
    for j in 0..m {
        h[j] = -c[m - 1 - j] / lead;
    }
    for i in 1..m {
        h[i * m + i - 1] = Complex64::new(1.0, 0.0);
    }
    h
}

/// Diagonal similarity scaling by powers of two so that off-diagonal row and
/// column norms are comparable.
fn balance(h: &mut [Complex64], n: usize) {
    const RADIX: f64 = 2.0;
    loop {
        let mut done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += abs1(h[j * n + i]);
                    r += abs1(h[i * n + j]);
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    h[i * n + j] *= inv;
                }
                for j in 0..n {
                    h[j * n + i] *= f;
                }
            }
        }
        if done {
            break;
        }
    }
}

/// Eigenvalues of an upper Hessenberg matrix by explicitly shifted complex QR
/// with Wilkinson shifts and deflation. Destroys `h`.
fn hessenberg_eigenvalues(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let zero = Complex64::new(0.0, 0.0);
    let mut eig = vec![zero; n];
    let norm: f64 = h.iter().map(|&z| abs1(z)).sum();
    let mut rot = vec![(0.0, zero); n];
    let mut hi = n - 1;
    let mut iters = 0usize;

    loop {
        if hi == 0 {
            eig[0] = h[0];
            break;
        }
        // Look for a negligible subdiagonal entry in the active block.
        let mut l = hi;
        while l > 0 {
            let mut s = abs1(h[(l - 1) * n + l - 1]) + abs1(h[l * n + l]);
            if s == 0.0 {
                s = norm;
            }
            if abs1(h[l * n + l - 1]) <= f64::EPSILON * s {
                h[l * n + l - 1] = zero;
                break;
            }
            l -= 1;
        }
        if l == hi {
            eig[hi] = h[hi * n + hi];
            hi -= 1;
            iters = 0;
            continue;
        }

        iters += 1;
        if iters > MAX_QR_ITERS_PER_ROOT {
            return Err(DoaError::Numerical(
                "companion QR iteration failed to converge".into(),
            ));
        }

        let shift = if iters % 10 == 0 {
            // exceptional shift to break cycles
            h[hi * n + hi] + abs1(h[hi * n + hi - 1]) * 0.75
        } else {
            wilkinson_shift(
                h[(hi - 1) * n + hi - 1],
                h[(hi - 1) * n + hi],
                h[hi * n + hi - 1],
                h[hi * n + hi],
            )
        };

        for k in l..=hi {
            h[k * n + k] -= shift;
        }
        // H - mu I = QR, rotations applied from the left.
        for k in l..hi {
            let (c, s) = givens(h[k * n + k], h[(k + 1) * n + k]);
            rot[k] = (c, s);
            for j in k..=hi {
                let x = h[k * n + j];
                let y = h[(k + 1) * n + j];
                h[k * n + j] = x * c + s * y;
                h[(k + 1) * n + j] = -s.conj() * x + y * c;
            }
        }
        // R Q, rotations applied from the right.
        for k in l..hi {
            let (c, s) = rot[k];
            for i in l..=(k + 1) {
                let x = h[i * n + k];
                let y = h[i * n + k + 1];
                h[i * n + k] = x * c + y * s.conj();
                h[i * n + k + 1] = -x * s + y * c;
            }
        }
        for k in l..=hi {
            h[k * n + k] += shift;
        }
    }
    Ok(eig)
}

/// Rotation `[[c, s], [-conj(s), c]]` with real `c` mapping `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    let alpha = x / ax;
    (ax / r, alpha * y.conj() / r)
}

/// Eigenvalue of `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mid = (a + d) * 0.5;
    let mu1 = mid + disc;
    let mu2 = mid - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

/// Newton refinement that only accepts steps reducing `|p(z)|`.
fn polish(c: &[Complex64], mut z: Complex64) -> Complex64 {
    let deriv: Vec<Complex64> = c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &ck)| ck * k as f64)
        .collect();
    let mut pz = eval_poly(c, z).norm();
    for _ in 0..POLISH_STEPS {
        let dp = eval_poly(&deriv, z);
        if dp.norm() == 0.0 || pz == 0.0 {
            break;
        }
        let cand = z - eval_poly(c, z) / dp;
        let pc = eval_poly(c, cand).norm();
        if !(pc < pz) {
            break;
        }
        z = cand;
        pz = pc;
    }
    z
}
