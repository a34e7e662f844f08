//! Complex linear-algebra helpers shared by the estimation, precoding and
//! rate code. Dense matrices are `nalgebra::DMatrix<Complex64>`; the small
//! Hermitian kernels at the bottom work on flat row-major slices and are used
//! in the optimizer's inner loops where allocation would dominate.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Reciprocal-condition threshold below which a Gram matrix counts as singular.
const RCOND_FLOOR: f64 = 1e-13;

pub fn frobenius_sq(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

pub fn trace(m: &CMat) -> Complex64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Natural log-determinant of a Hermitian positive-definite matrix.
pub fn hpd_logdet(m: &CMat) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)].re;
        if !(d > 0.0) {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// `ln|det(m)|` for a general square matrix, via LU.
pub fn general_log_abs_det(m: &CMat) -> f64 {
    m.clone().lu().determinant().norm().ln()
}

/// Outcome of inverting a Gram matrix that may be rank deficient.
#[derive(Debug, Clone)]
pub struct GramInverse {
    pub inverse: CMat,
    /// Tikhonov loading applied (zero when the Gram was well conditioned).
    pub loading: f64,
}

impl GramInverse {
    pub fn regularized(&self) -> bool {
        self.loading > 0.0
    }
}

/// Inverts a Hermitian PSD Gram matrix. When the Cholesky factorization fails
/// or the matrix is numerically singular, the inverse of `gram + eps*I` is
/// returned instead with `eps = 1e-8 * tr(gram) / scale_dim`.
pub fn invert_gram(gram: &CMat, scale_dim: usize) -> GramInverse {
    let n = gram.nrows();
    if let Some(chol) = gram.clone().cholesky() {
        let l = chol.l_dirty();
        let diag: Vec<f64> = (0..n).map(|i| l[(i, i)].re).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if max > 0.0 && (min / max).powi(2) > RCOND_FLOOR {
            return GramInverse {
                inverse: chol.inverse(),
                loading: 0.0,
            };
        }
    }
    let tr = trace(gram).re.max(0.0);
    let mut eps = 1e-8 * tr / scale_dim.max(1) as f64;
    if !(eps > 0.0) {
        eps = f64::MIN_POSITIVE.sqrt();
    }
    let loaded = gram + CMat::identity(n, n) * Complex64::from(eps);
    let inverse = loaded
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .or_else(|| loaded.try_inverse())
        .unwrap_or_else(|| CMat::zeros(n, n));
    GramInverse {
        inverse,
        loading: eps,
    }
}

/// Moore-Penrose pseudo-inverse via SVD.
pub fn pinv(m: &CMat) -> CMat {
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps = 1e-12 * scale.max(f64::MIN_POSITIVE);
    m.clone()
        .pseudo_inverse(eps)
        .unwrap_or_else(|_| CMat::zeros(m.ncols(), m.nrows()))
}

/// Right pseudo-inverse `B^H (B B^H)^{-1}`. Falls back to the SVD
/// pseudo-inverse when `B B^H` is singular. The flag reports a fallback on a
/// wide or square `B` only; a tall `B` never has a right inverse.
pub fn right_inverse(b: &CMat) -> (CMat, bool) {
    if b.nrows() > b.ncols() {
        return (pinv(b), false);
    }
    let gram = b * b.adjoint();
    match checked_hpd_inverse(&gram) {
        Some(inv) => (b.adjoint() * inv, false),
        None => (pinv(b), true),
    }
}

/// Left pseudo-inverse `(A^H A)^{-1} A^H`, with the same fallback as
/// [`right_inverse`].
pub fn left_inverse(a: &CMat) -> (CMat, bool) {
    if a.ncols() > a.nrows() {
        return (pinv(a), false);
    }
    let gram = a.adjoint() * a;
    match checked_hpd_inverse(&gram) {
        Some(inv) => (inv * a.adjoint(), false),
        None => (pinv(a), true),
    }
}

fn checked_hpd_inverse(gram: &CMat) -> Option<CMat> {
    let n = gram.nrows();
    let chol = gram.clone().cholesky()?;
    let l = chol.l_dirty();
    let diag: Vec<f64> = (0..n).map(|i| l[(i, i)].re).collect();
    let max = diag.iter().cloned().fold(0.0, f64::max);
    let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if max > 0.0 && (min / max).powi(2) > RCOND_FLOOR {
        Some(chol.inverse())
    } else {
        None
    }
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| {
        a[(i / br, j / bc)] * b[(i % br, j % bc)]
    })
}

/// Column-major vectorization.
pub fn vec(m: &CMat) -> CMat {
    CMat::from_column_slice(m.len(), 1, m.as_slice())
}

pub fn unvec(v: &CMat, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Small Hermitian kernels over flat row-major `p x p` buffers.
pub mod small {
    use num_complex::Complex64;

    /// Natural log-determinant of a Hermitian positive-definite matrix held in
    /// `a`. The matrix is factorized in place (`a` is clobbered). Returns
    /// `None` when the matrix is not positive definite.
    pub fn logdet_in_place(a: &mut [Complex64], p: usize) -> Option<f64> {
        if p == 1 {
            let d = a[0].re;
            return (d > 0.0).then(|| d.ln());
        }
        cholesky_in_place(a, p)?;
        Some(2.0 * (0..p).map(|i| a[i * p + i].re.ln()).sum::<f64>())
    }

    /// Lower Cholesky factor written into the lower triangle of `a`.
    fn cholesky_in_place(a: &mut [Complex64], p: usize) -> Option<()> {
        for j in 0..p {
            let mut d = a[j * p + j].re;
            for k in 0..j {
                d -= a[j * p + k].norm_sqr();
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            a[j * p + j] = Complex64::new(d, 0.0);
            for i in (j + 1)..p {
                let mut s = a[i * p + j];
                for k in 0..j {
                    s -= a[i * p + k] * a[j * p + k].conj();
                }
                a[i * p + j] = s / d;
            }
        }
        Some(())
    }

    /// Inverse of a Hermitian positive-definite matrix; `a` is clobbered and
    /// the inverse is written to `out`.
    pub fn inverse_into(a: &mut [Complex64], p: usize, out: &mut [Complex64]) -> Option<()> {
        if p == 1 {
            let d = a[0].re;
            if !(d > 0.0) {
                return None;
            }
            out[0] = Complex64::new(1.0 / d, 0.0);
            return Some(());
        }
        cholesky_in_place(a, p)?;
        // Solve L L^H X = I column by column.
        for c in 0..p {
            let mut y = vec![Complex64::new(0.0, 0.0); p];
            for i in 0..p {
                let mut s = if i == c {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                for k in 0..i {
                    s -= a[i * p + k] * y[k];
                }
                y[i] = s / a[i * p + i].re;
            }
            for i in (0..p).rev() {
                let mut s = y[i];
                for k in (i + 1)..p {
                    s -= a[k * p + i].conj() * out[k * p + c];
                }
                out[i * p + c] = s / a[i * p + i].re;
            }
        }
        Some(())
    }

    /// `Re tr(A B)` for `p x p` matrices.
    pub fn trace_product(a: &[Complex64], b: &[Complex64], p: usize) -> f64 {
        let mut acc = 0.0;
        for i in 0..p {
            for k in 0..p {
                acc += (a[i * p + k] * b[k * p + i]).re;
            }
        }
        acc
    }

    /// `acc += s * m`.
    pub fn axpy(acc: &mut [Complex64], s: f64, m: &[Complex64]) {
        for (a, x) in acc.iter_mut().zip(m) {
            *a += x * s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian, stream};

    fn random(rows: usize, cols: usize, seed: u64) -> CMat {
        let mut rng = stream(seed, &[]);
        CMat::from_fn(rows, cols, |_, _| complex_gaussian(&mut rng, 1.0))
    }

    fn to_flat(m: &CMat) -> Vec<Complex64> {
        let p = m.nrows();
        (0..p * p).map(|i| m[(i / p, i % p)]).collect()
    }

    #[test]
    fn small_kernels_match_nalgebra() {
        for p in 1..5 {
            let a = random(p, p + 2, p as u64);
            let h = &a * a.adjoint() + CMat::identity(p, p) * Complex64::from(0.1);
            let mut buf = to_flat(&h);
            let ld = small::logdet_in_place(&mut buf, p).unwrap();
            assert!((ld - hpd_logdet(&h).unwrap()).abs() < 1e-10);
            let mut buf = to_flat(&h);
            let mut out = vec![ZERO; p * p];
            small::inverse_into(&mut buf, p, &mut out).unwrap();
            let inv = h.clone().try_inverse().unwrap();
            for i in 0..p * p {
                assert!((out[i] - inv[(i / p, i % p)]).norm() < 1e-10);
            }
            let b = random(p, p, 99);
            let tp = small::trace_product(&to_flat(&h), &to_flat(&b), p);
            assert!((tp - trace(&(&h * &b)).re).abs() < 1e-10);
        }
    }

    #[test]
    fn kron_vec_identity() {
        // vec(A X B) = (B^T kron A) vec(X)
        let a = random(3, 2, 1);
        let x = random(2, 4, 2);
        let b = random(4, 2, 3);
        let lhs = vec(&(&a * &x * &b));
        let rhs = kron(&b.transpose(), &a) * vec(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn regularized_gram_on_rank_deficient_input() {
        let g = random(4, 2, 5);
        let gram = &g * g.adjoint();
        let inv = invert_gram(&gram, 4);
        assert!(inv.regularized());
        let well = g.adjoint() * &g;
        assert!(!invert_gram(&well, 2).regularized());
    }
}
