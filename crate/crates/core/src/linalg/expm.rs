//! Matrix exponential by scaling and squaring with diagonal Padé approximants.
//!
//! Degree selection follows Higham's 2005 bounds on the 1-norm, so defective
//! (non-diagonalizable) inputs such as Jordan cells are handled exactly as
//! well as any other matrix: nothing here relies on an eigenbasis.

use super::lu::Lu;
use super::matrix::ComplexMatrix;
#[cfg(test)]
use super::matrix::C64;
use crate::error::{Error, Result};

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

/// Beyond this many squarings the result cannot be finite in f64.
const MAX_SQUARINGS: i32 = 1100;

/// Returns `exp(t·M)`.
pub fn mat_exp(m: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let n = m.ensure_square()?;
    if !t.is_finite() {
        return Err(Error::InvalidInput(format!("mat_exp: t = {t}")));
    }
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let a = m.scale_real(t);
    if n == 1 {
        let z = a[(0, 0)].exp();
        if !(z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::Overflow(format!("exp of {}", a[(0, 0)])));
        }
        return Ok(ComplexMatrix::diag(&[z]));
    }
    expm(&a)
}

fn expm(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let norm = a.norm_1();
    let ident = ComplexMatrix::identity(a.rows());
    if norm == 0.0 {
        return Ok(ident);
    }
    let a2 = a * a;
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(a, &a2, &B3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(a, &a2, &B5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(a, &a2, &B7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(a, &a2, &B9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA13).log2().ceil() as i32).max(0);
        if s > MAX_SQUARINGS {
            return Err(Error::Overflow(format!("‖tM‖₁ = {norm:.3e}")));
        }
        let scaled = a.scale_real(2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };

    // r = (V - U)^{-1} (V + U)
    let q = &v - &u;
    let p = &v + &u;
    let mut r = Lu::factor(&q)?.solve(&p)?;
    for _ in 0..squarings {
        r = &r * &r;
        if !r.is_finite() {
            return Err(Error::Overflow(format!("‖tM‖₁ = {norm:.3e}")));
        }
    }
    if !r.is_finite() {
        return Err(Error::Overflow(format!("‖tM‖₁ = {norm:.3e}")));
    }
    Ok(r)
}

/// Odd/even split for the degree 3..9 approximants.
fn pade_low(a: &ComplexMatrix, a2: &ComplexMatrix, b: &[f64]) -> (ComplexMatrix, ComplexMatrix) {
    let n = a.rows();
    let mut odd = ComplexMatrix::identity(n).scale_real(b[1]);
    let mut even = ComplexMatrix::identity(n).scale_real(b[0]);
    let mut power = ComplexMatrix::identity(n);
    for k in 1..b.len() / 2 {
        power = &power * a2;
        odd += &power.scale_real(b[2 * k + 1]);
        even += &power.scale_real(b[2 * k]);
    }
    (a * &odd, even)
}

fn pade13(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let b = &B13;
    let n = a.rows();
    let id = ComplexMatrix::identity(n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let lin = |c: [f64; 4]| -> ComplexMatrix {
        let mut m = a6.scale_real(c[0]);
        m += &a4.scale_real(c[1]);
        m += &a2.scale_real(c[2]);
        m += &id.scale_real(c[3]);
        m
    };
    let u_inner = {
        let hi = &a6 * &lin([b[13], b[11], b[9], 0.0]);
        &hi + &lin([b[7], b[5], b[3], b[1]])
    };
    let u = a * &u_inner;
    let v = {
        let hi = &a6 * &lin([b[12], b[10], b[8], 0.0]);
        &hi + &lin([b[6], b[4], b[2], b[0]])
    };
    (u, v)
}

/// Plain Taylor summation of `exp(t·M)`; reference route for tests only.
#[cfg(test)]
pub(crate) fn taylor_exp(m: &ComplexMatrix, t: f64, terms: usize) -> ComplexMatrix {
    let n = m.rows();
    let a = m.scale_real(t);
    let mut term = ComplexMatrix::identity(n);
    let mut sum = term.clone();
    for k in 1..terms {
        term = (&term * &a).scale(C64::new(1.0 / k as f64, 0.0));
        sum += &term;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::{I, ONE, ZERO};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut impl Rng, n: usize, scale: f64) -> ComplexMatrix {
        ComplexMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
        })
    }

    fn rel_err(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn jordan_cell_shift() {
        // (calA - I) with calA = [[1,0],[1,1]] is nilpotent
        let m = ComplexMatrix::from_rows(&[&[ZERO, ZERO], &[ONE, ZERO]]);
        for &x in &[-3.0, -0.5, 0.0, 1.0, 2.5, 7.0] {
            let e = mat_exp(&m, x).unwrap();
            let want = ComplexMatrix::from_rows(&[&[ONE, ZERO], &[C64::new(x, 0.0), ONE]]);
            assert!((&e - &want).norm() <= 1e-14 * (1.0 + x.abs()), "x = {x}");
        }
    }

    #[test]
    fn jordan_cell_full() {
        // exp(±x calA) = e^{±x} [[1,0],[±x,1]]
        let a = ComplexMatrix::from_rows(&[&[ONE, ZERO], &[ONE, ONE]]);
        for &x in &[-2.0, -1.0, 0.3, 1.0, 3.0] {
            let e = mat_exp(&a, x).unwrap();
            let want = ComplexMatrix::from_rows(&[&[ONE, ZERO], &[C64::new(x, 0.0), ONE]])
                .scale_real(x.exp());
            assert!(rel_err(&e, &want) < 1e-14, "x = {x}");
        }
    }

    #[test]
    fn zero_matrix_gives_identity() {
        for n in 1..6 {
            let e = mat_exp(&ComplexMatrix::zeros(n, n), 123.0).unwrap();
            assert_eq!(e, ComplexMatrix::identity(n));
        }
    }

    #[test]
    fn non_square_rejected() {
        assert!(matches!(
            mat_exp(&ComplexMatrix::zeros(2, 3), 1.0),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn overflow_reported() {
        let m = ComplexMatrix::diag(&[C64::new(1.0, 0.0), ONE]);
        assert!(matches!(mat_exp(&m, 1e4), Err(Error::Overflow(_))));
        assert!(matches!(
            mat_exp(&ComplexMatrix::diag(&[ONE]), 1e4),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn matches_taylor_oracle_random_4x4() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 4, 1.0);
            let e = mat_exp(&m, 0.7).unwrap();
            let oracle = taylor_exp(&m, 0.7, 128);
            assert!(rel_err(&e, &oracle) <= 1e-12, "{}", rel_err(&e, &oracle));
        }
    }

    #[test]
    fn matches_eigendecomposition_oracle() {
        // M = P diag(d) P^{-1}, exp(tM) = P diag(e^{t d}) P^{-1}
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = &random_matrix(&mut rng, 4, 1.0) + &ComplexMatrix::identity(4).scale_real(2.0);
            let d: Vec<C64> = (0..4)
                .map(|_| C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                .collect();
            let pinv = Lu::factor(&p).unwrap().inverse().unwrap();
            let m = &(&p * &ComplexMatrix::diag(&d)) * &pinv;
            let ed: Vec<C64> = d.iter().map(|z| (z * 0.7).exp()).collect();
            let oracle = &(&p * &ComplexMatrix::diag(&ed)) * &pinv;
            let e = mat_exp(&m, 0.7).unwrap();
            assert!(rel_err(&e, &oracle) <= 1e-12, "{}", rel_err(&e, &oracle));
        }
    }

    #[test]
    fn scaled_path_matches_taylor_with_squaring() {
        // norm large enough to hit the Pade-13 branch with squarings
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let m = random_matrix(&mut rng, 3, 3.0);
        let e = mat_exp(&m, 1.0).unwrap();
        let half = taylor_exp(&m, 1.0 / 64.0, 60);
        let mut oracle = half;
        for _ in 0..6 {
            oracle = &oracle * &oracle;
        }
        assert!(rel_err(&e, &oracle) <= 1e-12);
    }

    #[test]
    fn skew_hermitian_gives_unitary() {
        let h = ComplexMatrix::from_rows(&[&[ZERO, I], &[I, ZERO]]);
        let u = mat_exp(&h, 2.0).unwrap();
        let prod = &u * &u.adjoint();
        assert!((&prod - &ComplexMatrix::identity(2)).norm() < 1e-14);
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n).prop_map(move |v| {
            let data = v.into_iter().map(|(re, im)| C64::new(re, im)).collect();
            ComplexMatrix::new(n, n, data).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn inverse_property(m in (1usize..6).prop_flat_map(arb_matrix), s in 0.1f64..2.5) {
            // scale so that ‖M‖ ≤ 10
            let m = m.scale_real(s * 10.0 / (m.norm() + 1e-300)).scale_real(0.999);
            let fwd = mat_exp(&m, 1.0).unwrap();
            let back = mat_exp(&m, -1.0).unwrap();
            let prod = &fwd * &back;
            let err = (&prod - &ComplexMatrix::identity(m.rows())).norm();
            prop_assert!(err <= 1e-12 * fwd.norm() * back.norm(), "err {}", err);
        }

        #[test]
        fn semigroup_property(m in (1usize..6).prop_flat_map(arb_matrix), s in -1.5f64..1.5, t in -1.5f64..1.5) {
            let lhs = mat_exp(&m, s + t).unwrap();
            let rhs = &mat_exp(&m, s).unwrap() * &mat_exp(&m, t).unwrap();
            prop_assert!((&lhs - &rhs).norm() <= 1e-11 * (1.0 + lhs.norm()));
        }

        #[test]
        fn real_input_stays_real(v in proptest::collection::vec(-2.0f64..2.0, 9), t in -2.0f64..2.0) {
            let m = ComplexMatrix::from_real(3, 3, &v).unwrap();
            let e = mat_exp(&m, t).unwrap();
            prop_assert!(e.max_abs_imag() <= 1e-14);
        }
    }
}
