use super::matrix::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};

/// Condition estimates above this are treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// LU factorisation with partial pivoting, `P·M = L·U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn factor(m: &ComplexMatrix) -> Result<Self> {
        let n = m.ensure_square()?;
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].norm()))
                .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != ZERO {
                    for j in k + 1..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= f * u;
                    }
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn det(&self) -> C64 {
        let mut d = C64::new(self.sign, 0.0);
        for k in 0..self.n {
            d *= self.lu[k * self.n + k];
        }
        d
    }

    /// Solves `M·X = B` for a matrix right-hand side.
    pub fn solve(&self, b: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::ShapeMismatch(format!(
                "rhs has {} rows, system has {n}",
                b.rows()
            )));
        }
        if self.singular {
            return Err(Error::NearSingular {
                condition: f64::INFINITY,
            });
        }
        let m = b.cols();
        let mut x = ComplexMatrix::zeros(n, m);
        for i in 0..n {
            for j in 0..m {
                x[(i, j)] = b[(self.perm[i], j)];
            }
        }
        for j in 0..m {
            for i in 0..n {
                let mut s = x[(i, j)];
                for k in 0..i {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, j)];
                for k in i + 1..n {
                    s -= self.lu[i * n + k] * x[(k, j)];
                }
                x[(i, j)] = s / self.lu[i * n + i];
            }
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("LU solve"));
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<ComplexMatrix> {
        self.solve(&ComplexMatrix::identity(self.n))
    }
}

pub fn solve(m: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    Lu::factor(m)?.solve(b)
}

pub fn det(m: &ComplexMatrix) -> Result<C64> {
    Ok(Lu::factor(m)?.det())
}

/// Inverse together with the 1-norm condition number `‖M‖₁·‖M⁻¹‖₁`.
///
/// Fails with `NearSingular` when the condition number exceeds
/// [`CONDITION_LIMIT`].
pub fn inverse_with_condition(m: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let n = m.ensure_square()?;
    if n == 0 {
        return Ok((ComplexMatrix::zeros(0, 0), 1.0));
    }
    let lu = Lu::factor(m)?;
    let inv = match lu.inverse() {
        Ok(inv) => inv,
        Err(_) => {
            return Err(Error::NearSingular {
                condition: f64::INFINITY,
            })
        }
    };
    let condition = m.norm_1() * inv.norm_1();
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::NearSingular { condition });
    }
    Ok((inv, condition))
}
