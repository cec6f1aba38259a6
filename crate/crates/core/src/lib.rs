//! Explicit potentials and wavefunctions for the stationary-in-x Dirac–Weyl
//! system `ψ_x = iσ₃(−ψ_y + iu(x)σ₂ψ)` built by generalized
//! Bäcklund–Darboux (GBDT) dressing of a seed system, together with an
//! independent numerical verification harness.

pub mod error;
pub mod explicit;
pub mod general;
pub mod grid;
pub mod linalg;
pub mod ode;
pub mod quadrature;
pub mod seed;
pub mod triple;
pub mod verification;

pub use error::{Error, Result};
