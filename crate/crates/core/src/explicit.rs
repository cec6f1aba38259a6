//! Closed-form dressing of the trivial seed `V ≡ 0`.
//!
//! With a zero seed, `Π(x) = [e^{−ixA}Λ₁(0), e^{ixA}Λ₂(0)]` and
//! `S(x) = S(0) + ∫₀ˣ Π σ₃ Π* dr`. `S(x)` is obtained by one of three
//! independent routes (the operator identity as a Sylvester equation, block
//! exponential integrals, or adaptive quadrature) so that they can be
//! cross-checked against each other.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_min_eig, inverse_with_condition, mat_exp, pauli, solve_sylvester_with_spectra,
    van_loan_integral, ComplexMatrix, Lu, C64, I,
};
use crate::quadrature::{integrate, QuadratureTolerance};
use crate::triple::{identity_defect, ParameterTriple};

/// `2·|x|·ρ(A)` beyond this would overflow `S(x)`.
pub const GROWTH_LIMIT: f64 = 700.0;
/// Allowed gap between the two routes to `ũ`.
pub const U_CONSISTENCY_TOL: f64 = 1e-10;

/// How `S(x)` was (or should be) computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SMethod {
    Sylvester,
    VanLoan,
    Quadrature,
}

/// Requested route; `Auto` tries Sylvester, then Van Loan, then quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Only(SMethod),
}

impl From<SMethod> for MethodChoice {
    fn from(m: SMethod) -> Self {
        MethodChoice::Only(m)
    }
}

/// Π(x), S(x) and, where conditioning allows, S(x)⁻¹.
#[derive(Debug, Clone)]
pub struct DressedState {
    pub x: f64,
    pub pi: ComplexMatrix,
    pub s: ComplexMatrix,
    /// `None` when the condition estimate exceeds the inversion gate.
    pub s_inv: Option<ComplexMatrix>,
    pub condition: f64,
    /// `‖AS − SA* − iΠΠ*‖ / (1 + ‖S‖)`
    pub identity_residual: f64,
    pub min_eig: f64,
    pub method: SMethod,
}

impl DressedState {
    pub fn s_inv(&self) -> Result<&ComplexMatrix> {
        self.s_inv.as_ref().ok_or(Error::NearSingular {
            condition: self.condition,
        })
    }
}

/// 𝒳(x), Ṽ(x) and ũ(x).
#[derive(Debug, Clone)]
pub struct DressedPotential {
    pub x: f64,
    pub chi: ComplexMatrix,
    pub v_tilde: ComplexMatrix,
    pub u_tilde: C64,
}

pub fn normalized_identity_residual(t: &ParameterTriple, pi: &ComplexMatrix, s: &ComplexMatrix) -> f64 {
    identity_defect(t.a(), s, pi).norm() / (1.0 + s.norm())
}

fn growth_guard(t: &ParameterTriple, x: f64) -> Result<()> {
    let growth = 2.0 * x.abs() * t.spectral_radius();
    if growth > GROWTH_LIMIT {
        return Err(Error::Overflow(format!(
            "2|x|ρ(A) = {growth:.1} exceeds {GROWTH_LIMIT} at x = {x}"
        )));
    }
    Ok(())
}

/// `Π(x) = [e^{−ixA}Λ₁(0), e^{ixA}Λ₂(0)]`
pub fn eval_pi(t: &ParameterTriple, x: f64) -> Result<ComplexMatrix> {
    if x == 0.0 {
        return Ok(t.pi0().clone());
    }
    let m = t.a().scale(I);
    let l1 = &mat_exp(&m, -x)? * &t.lambda1_0();
    let l2 = &mat_exp(&m, x)? * &t.lambda2_0();
    ComplexMatrix::hstack(&[&l1, &l2])
}

fn s_sylvester(t: &ParameterTriple, pi: &ComplexMatrix) -> Result<ComplexMatrix> {
    let a = t.a();
    let rhs = (pi * &pi.adjoint()).scale(I);
    let conj_eigs: Vec<C64> = t.a_eigenvalues().iter().map(|z| z.conj()).collect();
    solve_sylvester_with_spectra(a, &a.adjoint(), &rhs, t.a_eigenvalues(), &conj_eigs)
}

fn s_van_loan(t: &ParameterTriple, x: f64) -> Result<ComplexMatrix> {
    // Λ₁Λ₁* = e^{−irA} C₁ e^{irA*},  Λ₂Λ₂* = e^{irA} C₂ e^{−irA*}
    let ia = t.a().scale(I);
    let ia_star = t.a().adjoint().scale(I);
    let l1 = t.lambda1_0();
    let l2 = t.lambda2_0();
    let first = van_loan_integral(&-&ia, &(&l1 * &l1.adjoint()), &ia_star, x)?;
    let second = van_loan_integral(&ia, &(&l2 * &l2.adjoint()), &-&ia_star, x)?;
    Ok(&(t.s0() + &first) - &second)
}

fn s_quadrature(t: &ParameterTriple, x: f64) -> Result<ComplexMatrix> {
    let s3 = pauli::sigma3();
    let integral = integrate(
        |r| {
            let pi = eval_pi(t, r)?;
            Ok(&(&pi * &s3) * &pi.adjoint())
        },
        0.0,
        x,
        QuadratureTolerance::default(),
    )?;
    Ok(t.s0() + &integral)
}

/// `S(x)` by a single route, without inversion or certification.
pub fn s_by(t: &ParameterTriple, x: f64, method: SMethod, pi: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x == 0.0 {
        return Ok(t.s0().clone());
    }
    let s = match method {
        SMethod::Sylvester => s_sylvester(t, pi)?,
        SMethod::VanLoan => s_van_loan(t, x)?,
        SMethod::Quadrature => s_quadrature(t, x)?,
    };
    // S(x) is Hermitian; drop the round-off skew part
    Ok(s.hermitian_part())
}

/// Evaluates Π(x), S(x) and S(x)⁻¹ with the requested route.
pub fn eval_s(t: &ParameterTriple, x: f64, method: impl Into<MethodChoice>) -> Result<DressedState> {
    growth_guard(t, x)?;
    let pi = eval_pi(t, x)?;
    let (s, used) = match method.into() {
        MethodChoice::Only(m) => (s_by(t, x, m, &pi)?, m),
        MethodChoice::Auto => match s_by(t, x, SMethod::Sylvester, &pi) {
            Ok(s) => (s, SMethod::Sylvester),
            Err(Error::SpectraOverlap { .. }) => match s_by(t, x, SMethod::VanLoan, &pi) {
                Ok(s) => (s, SMethod::VanLoan),
                Err(_) => (s_by(t, x, SMethod::Quadrature, &pi)?, SMethod::Quadrature),
            },
            Err(e) => return Err(e),
        },
    };
    let identity_residual = normalized_identity_residual(t, &pi, &s);
    let min_eig = hermitian_min_eig(&s)?;
    let (s_inv, condition) = match inverse_with_condition(&s) {
        Ok((inv, c)) => (Some(inv), c),
        Err(Error::NearSingular { condition }) => (None, condition),
        Err(e) => return Err(e),
    };
    Ok(DressedState {
        x,
        pi,
        s,
        s_inv,
        condition,
        identity_residual,
        min_eig,
        method: used,
    })
}

/// Largest pairwise gap `‖S_a − S_b‖ / (1 + ‖S‖)` among the routes that
/// succeed at `x`, together with the routes compared.
pub fn method_cross_agreement(t: &ParameterTriple, x: f64) -> Result<(f64, Vec<SMethod>)> {
    growth_guard(t, x)?;
    let pi = eval_pi(t, x)?;
    let mut results = Vec::new();
    for m in [SMethod::Sylvester, SMethod::VanLoan, SMethod::Quadrature] {
        match s_by(t, x, m, &pi) {
            Ok(s) => results.push((m, s)),
            Err(Error::SpectraOverlap { .. }) if m == SMethod::Sylvester => {}
            Err(e) => return Err(e.at(x)),
        }
    }
    let mut worst: f64 = 0.0;
    for i in 0..results.len() {
        for j in i + 1..results.len() {
            let (a, b) = (&results[i].1, &results[j].1);
            worst = worst.max((a - b).norm() / (1.0 + a.norm()));
        }
    }
    Ok((worst, results.into_iter().map(|(m, _)| m).collect()))
}

/// `𝒳 = Π*S⁻¹Π`, `Ṽ = V + i(σ₃𝒳σ₃ − 𝒳)`, `ũ = Ṽ₁₂`.
///
/// `ũ` is recomputed as `u − 2iΛ₁*(S \ Λ₂)` through an LU solve and the
/// two routes must agree.
pub(crate) fn assemble_potential(
    x: f64,
    pi: &ComplexMatrix,
    s: &ComplexMatrix,
    s_inv: &ComplexMatrix,
    seed_u: C64,
) -> Result<DressedPotential> {
    let chi = &(&pi.adjoint() * s_inv) * pi;
    let s3 = pauli::sigma3();
    let seed_v = seed_matrix(seed_u);
    let v_tilde = &seed_v + &(&(&(&s3 * &chi) * &s3) - &chi).scale(I);
    if !v_tilde.is_finite() {
        return Err(Error::NonFinite("dressed potential"));
    }
    let u_tilde = v_tilde[(0, 1)];

    let w = Lu::factor(s)?.solve(&pi.column(1))?;
    let l1 = pi.column(0);
    let direct = seed_u - I * 2.0 * (&l1.adjoint() * &w)[(0, 0)];
    if (direct - u_tilde).norm() > U_CONSISTENCY_TOL * (1.0 + u_tilde.norm()) {
        return Err(Error::Internal(format!(
            "ũ from Ṽ ({u_tilde}) and from the direct formula ({direct}) disagree at x = {x}"
        )));
    }
    Ok(DressedPotential {
        x,
        chi,
        v_tilde,
        u_tilde,
    })
}

/// `V = [[0, u], [−ū, 0]]`
pub fn seed_matrix(u: C64) -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[C64::new(0.0, 0.0), u], &[-u.conj(), C64::new(0.0, 0.0)]])
}

pub fn potential_from_state(state: &DressedState) -> Result<DressedPotential> {
    assemble_potential(state.x, &state.pi, &state.s, state.s_inv()?, C64::new(0.0, 0.0))
}

pub fn eval_potential(t: &ParameterTriple, x: f64) -> Result<DressedPotential> {
    potential_from_state(&eval_s(t, x, MethodChoice::Auto)?)
}

/// `ψ̃(x, y) = Π(x)*·S(x)⁻¹·e^{−yA}·h`
pub fn eval_psi(t: &ParameterTriple, x: f64, y: f64, h: &[C64]) -> Result<[C64; 2]> {
    let state = eval_s(t, x, MethodChoice::Auto)?;
    psi_from_state(t, &state, y, h)
}

pub fn psi_from_state(t: &ParameterTriple, state: &DressedState, y: f64, h: &[C64]) -> Result<[C64; 2]> {
    psi_from_parts(t.a(), &state.pi, state.s_inv()?, y, h)
}

pub(crate) fn psi_from_parts(
    a: &ComplexMatrix,
    pi: &ComplexMatrix,
    s_inv: &ComplexMatrix,
    y: f64,
    h: &[C64],
) -> Result<[C64; 2]> {
    if h.len() != a.rows() {
        return Err(Error::ShapeMismatch(format!(
            "h has length {}, expected {}",
            h.len(),
            a.rows()
        )));
    }
    let eh = mat_exp(a, -y)?.mat_vec(h)?;
    let v = (&pi.adjoint() * s_inv).mat_vec(&eh)?;
    Ok([v[0], v[1]])
}

/// One grid point of a sampled profile.
#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub state: DressedState,
    pub potential: DressedPotential,
}

/// Evaluates the dressing on a strictly increasing grid, in grid order.
pub fn sample_profile(
    t: &ParameterTriple,
    grid: &[f64],
    method: impl Into<MethodChoice>,
) -> Result<Vec<ProfilePoint>> {
    crate::grid::ensure_monotone(grid)?;
    let method = method.into();
    grid.iter()
        .map(|&x| {
            let state = eval_s(t, x, method).map_err(|e| e.at(x))?;
            let potential = potential_from_state(&state).map_err(|e| e.at(x))?;
            Ok(ProfilePoint { state, potential })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{det, ONE, ZERO};
    use crate::triple::{make_example1, make_example2, realness_conditions, validate_triple, Sign};

    const ALL: [SMethod; 3] = [SMethod::Sylvester, SMethod::VanLoan, SMethod::Quadrature];

    fn sech_triple() -> ParameterTriple {
        make_example1(1.0, 1.0, 1.0, Sign::Plus, Sign::Plus).unwrap()
    }

    fn zero_triple() -> ParameterTriple {
        validate_triple(
            ComplexMatrix::zeros(1, 1),
            ComplexMatrix::identity(1),
            ComplexMatrix::zeros(1, 2),
        )
        .unwrap()
    }

    #[test]
    fn pi_of_jordan_example() {
        let t = make_example2();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for &x in &[-1.5, -0.3, 0.0, 0.7, 2.0] {
            let pi = eval_pi(&t, x).unwrap();
            let e = x.exp();
            let want = ComplexMatrix::from_rows(&[
                &[C64::new(0.0, 2.0 * r * e), ZERO],
                &[C64::new(0.0, r * e * (2.0 * x + 1.0)), C64::new(r * 3f64.sqrt() / e, 0.0)],
            ]);
            assert!((&pi - &want).norm() <= 1e-13 * want.norm(), "x = {x}");
        }
    }

    #[test]
    fn pi_at_zero_is_exact() {
        let t = make_example2();
        assert_eq!(&eval_pi(&t, 0.0).unwrap(), t.pi0());
    }

    #[test]
    fn pi_of_scalar_example() {
        let t = sech_triple();
        for &x in &[-2.0, 0.5, 1.0] {
            let pi = eval_pi(&t, x).unwrap();
            assert!((pi[(0, 0)] - C64::new(0.0, x.exp())).norm() < 1e-14 * x.exp());
            assert!((pi[(0, 1)] - C64::new((-x).exp(), 0.0)).norm() < 1e-14 * (-x).exp().max(1.0));
        }
    }

    #[test]
    fn s_at_zero_every_method() {
        let t = make_example2();
        for m in ALL {
            let st = eval_s(&t, 0.0, m).unwrap();
            assert_eq!(&st.s, t.s0());
            assert!(st.identity_residual <= 1e-14);
        }
    }

    #[test]
    fn jordan_resolvent_closed_form() {
        let t = make_example2();
        for m in ALL {
            for &x in &[-2.5, -1.0, 0.3, 1.0, 2.0] {
                let st = eval_s(&t, x, m).unwrap();
                let d = det(&st.s).unwrap();
                let want_det = 0.25 * ((4.0 * x).exp() + 3.0);
                assert!((d.re - want_det).abs() <= 1e-10 * want_det, "{m:?} x = {x}");
                let e2 = (2.0 * x).exp();
                let k = 4.0 / ((4.0 * x).exp() + 3.0);
                let want = ComplexMatrix::from_real(
                    2,
                    2,
                    &[
                        k * 0.25 * ((4.0 * x * x + 1.0) * e2 + 3.0 / e2),
                        -k * x * e2,
                        -k * x * e2,
                        k * e2,
                    ],
                )
                .unwrap();
                let inv = st.s_inv().unwrap();
                assert!((inv - &want).max_abs() <= 1e-10, "{m:?} x = {x}");
            }
        }
    }

    #[test]
    fn scalar_soliton_s_is_cosh() {
        let t = sech_triple();
        for m in ALL {
            for &x in &[-3.0, -0.4, 0.9, 2.2] {
                let st = eval_s(&t, x, m).unwrap();
                let want = (2.0 * x).cosh();
                assert!((st.s[(0, 0)].re - want).abs() <= 1e-10 * want, "{m:?} x = {x}");
            }
        }
    }

    #[test]
    fn jordan_potential_closed_form() {
        let t = make_example2();
        let p = eval_potential(&t, 0.0).unwrap();
        assert!((p.u_tilde - C64::new(-3f64.sqrt(), 0.0)).norm() < 1e-14);
        for &x in &[-2.0, -0.5, 0.8, 2.5] {
            let p = eval_potential(&t, x).unwrap();
            let want = -4.0 * 3f64.sqrt() * (2.0 * x).exp() / ((4.0 * x).exp() + 3.0);
            assert!((p.u_tilde.re - want).abs() <= 1e-12 * want.abs());
            assert!(p.u_tilde.im.abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_dressing_gives_zero_potential() {
        let t = zero_triple();
        for &x in &[-1.0, 0.0, 3.0] {
            let p = eval_potential(&t, x).unwrap();
            assert_eq!(p.u_tilde, C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn scalar_soliton_potential_is_sech() {
        let t = sech_triple();
        for &x in &[-2.0, 0.0, 0.6, 1.7] {
            let p = eval_potential(&t, x).unwrap();
            let want = -2.0 / (2.0 * x).cosh();
            assert!((p.u_tilde.re - want).abs() <= 1e-12);
            assert!(p.u_tilde.im.abs() <= 1e-14);
        }
    }

    #[test]
    fn potential_structure() {
        let t = make_example2();
        for &x in &[-1.0, 0.25, 1.5] {
            let p = eval_potential(&t, x).unwrap();
            assert!(p.chi.hermitian_deviation() <= 1e-12 * p.chi.norm());
            assert_eq!(p.v_tilde[(0, 0)], C64::new(0.0, 0.0));
            assert_eq!(p.v_tilde[(1, 1)], C64::new(0.0, 0.0));
            assert!((p.v_tilde[(1, 0)] + p.v_tilde[(0, 1)].conj()).norm() <= 1e-12);
        }
    }

    #[test]
    fn psi_at_origin() {
        let t = make_example2();
        let psi = eval_psi(&t, 0.0, 0.0, &[ONE, ZERO]).unwrap();
        assert!((psi[0] - C64::new(0.0, -2f64.sqrt())).norm() < 1e-14);
        assert!(psi[1].norm() < 1e-14);
        let zero = eval_psi(&t, 0.7, -0.2, &[ZERO, ZERO]).unwrap();
        assert_eq!(zero, [ZERO, ZERO]);
        assert!(matches!(
            eval_psi(&t, 0.0, 0.0, &[ONE]),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn psi_is_linear_in_h() {
        let t = make_example2();
        let (h1, h2) = ([ONE, I], [C64::new(0.3, -1.0), C64::new(2.0, 0.5)]);
        let (alpha, beta) = (C64::new(0.7, 0.2), C64::new(-1.1, 0.4));
        let combo = [alpha * h1[0] + beta * h2[0], alpha * h1[1] + beta * h2[1]];
        let a = eval_psi(&t, 0.4, 1.2, &h1).unwrap();
        let b = eval_psi(&t, 0.4, 1.2, &h2).unwrap();
        let c = eval_psi(&t, 0.4, 1.2, &combo).unwrap();
        for k in 0..2 {
            assert!((c[k] - (alpha * a[k] + beta * b[k])).norm() <= 1e-12);
        }
    }

    #[test]
    fn methods_agree() {
        let t = make_example2();
        for &x in &[-2.0, -0.1, 1.3, 3.0] {
            let (gap, used) = method_cross_agreement(&t, x).unwrap();
            assert_eq!(used.len(), 3);
            assert!(gap <= 1e-8, "x = {x}: {gap}");
        }
    }

    #[test]
    fn auto_falls_back_when_spectra_overlap() {
        // A = 0: Sylvester is ill-posed, S(x) = S(0) for Pi0 = 0
        let t = zero_triple();
        let st = eval_s(&t, 1.0, MethodChoice::Auto).unwrap();
        assert_eq!(st.method, SMethod::VanLoan);
        assert!(matches!(
            eval_s(&t, 1.0, SMethod::Sylvester),
            Err(Error::SpectraOverlap { .. })
        ));
    }

    #[test]
    fn growth_guard_raises_overflow() {
        let t = make_example2();
        assert!(matches!(eval_s(&t, 400.0, MethodChoice::Auto), Err(Error::Overflow(_))));
    }

    #[test]
    fn profile_positivity_and_peak() {
        let t = make_example2();
        let grid: Vec<f64> = (0..=600).map(|k| -3.0 + 0.01 * k as f64).collect();
        let prof = sample_profile(&t, &grid, MethodChoice::Auto).unwrap();
        assert_eq!(prof.len(), 601);
        assert!(prof.iter().all(|p| p.state.min_eig > 0.0));

        let t = sech_triple();
        let grid: Vec<f64> = (0..=100).map(|k| -5.0 + 0.1 * k as f64).collect();
        let prof = sample_profile(&t, &grid, MethodChoice::Auto).unwrap();
        let (imax, pmax) = prof
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.potential.u_tilde.norm().partial_cmp(&b.1.potential.u_tilde.norm()).unwrap())
            .unwrap();
        assert!((grid[imax]).abs() < 1e-12);
        assert!((pmax.potential.u_tilde.norm() - 2.0).abs() < 1e-12);
        assert!(realness_conditions(&t).is_real_form);

        assert!(sample_profile(&t, &[], MethodChoice::Auto).unwrap().is_empty());
        assert!(sample_profile(&t, &[1.0, 0.0], MethodChoice::Auto).is_err());
    }
}
