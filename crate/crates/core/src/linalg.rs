//! Small dense complex linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Relative tolerance for Hermitian symmetry checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues above `-PSD_TOL * trace` are accepted as nonnegative.
pub const PSD_TOL: f64 = 1e-10;

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest entrywise deviation from Hermitian symmetry.
pub fn hermitian_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMat) -> bool {
    m.is_square() && hermitian_defect(m) <= HERMITIAN_TOL * frobenius(m).max(f64::MIN_POSITIVE)
}

pub fn trace_re(m: &CMat) -> f64 {
    m.diagonal().iter().map(|z| z.re).sum()
}

/// Replace a nearly Hermitian matrix by its Hermitian part.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitian_part(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Checks Hermitian symmetry and positive semidefiniteness within tolerance.
pub fn check_hermitian_psd(m: &CMat, what: &str) -> Result<()> {
    if !is_hermitian(m) {
        return Err(Error::NumericDomain(format!(
            "{what} is not Hermitian (defect {:e})",
            hermitian_defect(m)
        )));
    }
    let tr = trace_re(m).abs();
    let min = hermitian_eigenvalues(m).first().copied().unwrap_or(0.0);
    if min < -PSD_TOL * tr {
        return Err(Error::NumericDomain(format!(
            "{what} is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Principal square root of a Hermitian PSD matrix; negative eigenvalues are clipped to zero.
pub fn sqrtm_psd(m: &CMat) -> Result<CMat> {
    if !is_hermitian(m) {
        return Err(Error::NumericDomain(format!(
            "square root of a non-Hermitian matrix (defect {:e})",
            hermitian_defect(m)
        )));
    }
    let n = m.nrows();
    if frobenius(m) == 0.0 {
        return Ok(CMat::zeros(n, n));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(&scaled * u.adjoint())
}

/// Condition number (2-norm) of a Hermitian PSD matrix, `inf` when singular.
pub fn hermitian_condition(m: &CMat) -> f64 {
    let ev = hermitian_eigenvalues(m);
    match (ev.first(), ev.last()) {
        (Some(&lo), Some(&hi)) if lo > 0.0 => hi / lo,
        (Some(_), Some(&hi)) if hi > 0.0 => f64::INFINITY,
        _ => f64::INFINITY,
    }
}

/// Cholesky factorization of a Hermitian positive-definite matrix.
pub fn cholesky(m: CMat, what: &str) -> Result<Cholesky<Complex64, Dyn>> {
    Cholesky::new(hermitian_part(&m))
        .ok_or_else(|| Error::NumericDomain(format!("{what} is not positive definite")))
}

/// Solves `a x = b` for Hermitian positive-definite `a`.
pub fn solve_hpd(a: CMat, b: &CMat, what: &str) -> Result<CMat> {
    Ok(cholesky(a, what)?.solve(b))
}

/// `x^H a x` for Hermitian `a`; the (numerically tiny) imaginary part is dropped.
pub fn quad_form(a: &CMat, x: &CVec) -> f64 {
    x.dotc(&(a * x)).re
}

pub fn quad_form_slice(a: &CMat, x: &nalgebra::DVectorView<'_, Complex64>) -> f64 {
    let ax = a * x;
    x.dotc(&ax).re
}
