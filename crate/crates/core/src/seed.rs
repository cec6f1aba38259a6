use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64, I};

/// The scalar potential `u(x)` of the seed system `ψ_x = iσ₃(−ψ_y + Vψ)`,
/// `V = [[0, u], [−ū, 0]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SeedPotential {
    Zero,
    Constant {
        c: f64,
    },
    /// `amp·exp(−(x − center)² / (2·width²))`
    Gaussian {
        amp: f64,
        center: f64,
        width: f64,
    },
    /// Piecewise-linear through `(knots[k], values[k])`; values may be complex.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<[f64; 2]>,
    },
}

impl SeedPotential {
    pub fn validate(&self) -> Result<()> {
        match self {
            SeedPotential::Zero => Ok(()),
            SeedPotential::Constant { c } if c.is_finite() => Ok(()),
            SeedPotential::Constant { .. } => Err(Error::InvalidInput("constant seed must be finite".into())),
            SeedPotential::Gaussian { amp, center, width } => {
                if !(amp.is_finite() && center.is_finite() && width.is_finite() && *width > 0.0) {
                    return Err(Error::InvalidInput("gaussian seed needs finite amp/center and width > 0".into()));
                }
                Ok(())
            }
            SeedPotential::Tabulated { knots, values } => {
                if knots.len() < 2 || knots.len() != values.len() {
                    return Err(Error::InvalidInput(
                        "tabulated seed needs at least two knots and one value per knot".into(),
                    ));
                }
                crate::grid::ensure_monotone(knots)?;
                if values.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("tabulated seed has non-finite values".into()));
                }
                Ok(())
            }
        }
    }

    /// Parses `zero`, `constant:c`, `gaussian:amp,center,width`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
        let nums: Vec<f64> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("bad number `{s}` in seed `{spec}`")))
                })
                .collect::<Result<_>>()?
        };
        let seed = match (kind.trim().to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("zero", []) => SeedPotential::Zero,
            ("constant", [c]) => SeedPotential::Constant { c: *c },
            ("gaussian", [amp, center, width]) => SeedPotential::Gaussian {
                amp: *amp,
                center: *center,
                width: *width,
            },
            _ => {
                return Err(Error::InvalidInput(format!(
                    "seed `{spec}` is not zero | constant:c | gaussian:amp,center,width"
                )))
            }
        };
        seed.validate()?;
        Ok(seed)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SeedPotential::Zero)
    }

    /// Closed interval on which `u` is defined.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            SeedPotential::Tabulated { knots, .. } => (knots[0], knots[knots.len() - 1]),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Points where `u` may fail to be smooth.
    pub fn breakpoints(&self) -> &[f64] {
        match self {
            SeedPotential::Tabulated { knots, .. } => knots,
            _ => &[],
        }
    }

    pub fn u(&self, x: f64) -> C64 {
        match self {
            SeedPotential::Zero => C64::new(0.0, 0.0),
            SeedPotential::Constant { c } => C64::new(*c, 0.0),
            SeedPotential::Gaussian { amp, center, width } => {
                let z = (x - center) / width;
                C64::new(amp * (-0.5 * z * z).exp(), 0.0)
            }
            SeedPotential::Tabulated { knots, values } => {
                let k = match knots.iter().position(|&kx| kx > x) {
                    Some(0) => 0,
                    Some(k) => k - 1,
                    None => knots.len() - 2,
                };
                let k = k.min(knots.len() - 2);
                let (x0, x1) = (knots[k], knots[k + 1]);
                let v0 = C64::new(values[k][0], values[k][1]);
                let v1 = C64::new(values[k + 1][0], values[k + 1][1]);
                let s = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
                v0 + (v1 - v0) * s
            }
        }
    }

    pub fn is_real(&self) -> bool {
        match self {
            SeedPotential::Tabulated { values, .. } => values.iter().all(|v| v[1] == 0.0),
            _ => true,
        }
    }

    /// `V(x) = [[0, u], [−ū, 0]]`
    pub fn v(&self, x: f64) -> ComplexMatrix {
        crate::explicit::seed_matrix(self.u(x))
    }
}

/// `Q₁ = −iσ₃`
pub fn q1() -> ComplexMatrix {
    crate::linalg::pauli::sigma3().scale(-I)
}

/// `Q₀(x) = −iσ₃V(x)`
pub fn q0(u: C64) -> ComplexMatrix {
    (&crate::linalg::pauli::sigma3() * &crate::explicit::seed_matrix(u)).scale(-I)
}
