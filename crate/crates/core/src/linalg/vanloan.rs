use super::expm::mat_exp;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};

/// `∫₀ˣ e^{rF} C e^{rG} dr` via one exponential of the block matrix
/// `[[F, C], [0, −G]]`.
///
/// The top-right block of `exp(x·[[F, C], [0, −G]])` equals
/// `(∫₀ˣ e^{rF} C e^{rG} dr)·e^{−xG}`, so right-multiplying by `e^{xG}`
/// recovers the integral. Negative `x` yields the signed integral.
pub fn van_loan_integral(
    f: &ComplexMatrix,
    c: &ComplexMatrix,
    g: &ComplexMatrix,
    x: f64,
) -> Result<ComplexMatrix> {
    let p = f.ensure_square()?;
    let q = g.ensure_square()?;
    if c.shape() != (p, q) {
        return Err(Error::ShapeMismatch(format!(
            "integrand core is {}x{}, expected {p}x{q}",
            c.rows(),
            c.cols()
        )));
    }
    let mut block = ComplexMatrix::zeros(p + q, p + q);
    block.set_block(0, 0, f);
    block.set_block(0, p, c);
    block.set_block(p, p, &-g);
    let e = mat_exp(&block, x)?;
    let top_right = e.block(0, p, p, q);
    Ok(&top_right * &mat_exp(g, x)?)
}
