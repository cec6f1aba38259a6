use super::eig::eigenvalues;
use super::lu::Lu;
use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Relative eigenvalue separation below which `F·X − X·G = C` is treated as ill-posed.
pub const SEPARATION_GATE: f64 = 1e-8;

/// Minimum distance between the spectra of `f` and `g`.
pub fn spectral_separation(f_eigs: &[C64], g_eigs: &[C64]) -> f64 {
    f_eigs
        .iter()
        .flat_map(|l| g_eigs.iter().map(move |m| (l - m).norm()))
        .fold(f64::INFINITY, f64::min)
}

/// Solves `F·X − X·G = C` for `X`.
///
/// `F` is p×p, `G` is q×q and `C` is p×q. The pq×pq Kronecker system is
/// solved directly, which is fine for the small orders this crate targets.
/// Returns `SpectraOverlap` when the spectra of `F` and `G` come within
/// [`SEPARATION_GATE`]`·(‖F‖+‖G‖)` of each other.
pub fn solve_sylvester(f: &ComplexMatrix, g: &ComplexMatrix, c: &ComplexMatrix) -> Result<ComplexMatrix> {
    let fe = eigenvalues(f)?;
    let ge = eigenvalues(g)?;
    solve_sylvester_with_spectra(f, g, c, &fe, &ge)
}

/// As [`solve_sylvester`], reusing already computed spectra.
pub fn solve_sylvester_with_spectra(
    f: &ComplexMatrix,
    g: &ComplexMatrix,
    c: &ComplexMatrix,
    f_eigs: &[C64],
    g_eigs: &[C64],
) -> Result<ComplexMatrix> {
    let p = f.ensure_square()?;
    let q = g.ensure_square()?;
    if c.shape() != (p, q) {
        return Err(Error::ShapeMismatch(format!(
            "Sylvester rhs is {}x{}, expected {p}x{q}",
            c.rows(),
            c.cols()
        )));
    }
    let gate = SEPARATION_GATE * (f.norm() + g.norm());
    let separation = spectral_separation(f_eigs, g_eigs);
    if separation <= gate {
        return Err(Error::SpectraOverlap { separation, gate });
    }

    let dim = p * q;
    let mut k = ComplexMatrix::zeros(dim, dim);
    for i in 0..p {
        for j in 0..q {
            let row = i * q + j;
            for l in 0..p {
                k[(row, l * q + j)] += f[(i, l)];
            }
            for l in 0..q {
                k[(row, i * q + l)] -= g[(l, j)];
            }
        }
    }
    let lu = Lu::factor(&k)?;
    let rhs = ComplexMatrix::new(dim, 1, c.as_slice().to_vec())?;
    let mut x = lu.solve(&rhs)?;
    // one step of iterative refinement
    let r = &rhs - &(&k * &x);
    let dx = lu.solve(&r)?;
    x += &dx;
    ComplexMatrix::new(p, q, x.into_vec())
}

/// `‖F·X − X·G − C‖`
pub fn sylvester_residual(f: &ComplexMatrix, g: &ComplexMatrix, c: &ComplexMatrix, x: &ComplexMatrix) -> f64 {
    (&(&(f * x) - &(x * g)) - c).norm()
}
