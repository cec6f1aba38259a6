//! Dense complex kernels for small matrices.

mod eig;
mod expm;
mod lu;
pub mod matrix;
mod sylvester;
mod vanloan;

pub use eig::{eigenvalues, hermitian_eigenvalues, hermitian_min_eig, spectral_radius, HERMITIAN_TOL};
pub use expm::mat_exp;
pub use lu::{det, inverse_with_condition, solve, Lu, CONDITION_LIMIT};
pub use matrix::{pauli, ComplexMatrix, C64, I, ONE, ZERO};
pub use sylvester::{
    solve_sylvester, solve_sylvester_with_spectra, spectral_separation, sylvester_residual,
    SEPARATION_GATE,
};
pub use vanloan::van_loan_integral;
