use nalgebra::{Schur, SymmetricEigen};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by [`hermitian_min_eig`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Smallest eigenvalue of the Hermitian part of `m`.
pub fn hermitian_min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of the Hermitian part of `m`, unordered.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let n = m.ensure_square()?;
    let deviation = m.hermitian_deviation();
    if deviation > HERMITIAN_TOL * m.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { deviation });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    let eig = SymmetricEigen::new(m.hermitian_part().to_nalgebra());
    Ok(eig.eigenvalues.iter().copied().collect())
}

/// Eigenvalues of a general complex square matrix (complex Schur form).
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    let n = m.ensure_square()?;
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![m[(0, 0)]]),
        _ => {}
    }
    let schur = Schur::try_new(m.to_nalgebra(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::InvalidInput("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|k| t[(k, k)]).collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}
