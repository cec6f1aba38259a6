//! Parameter triples `{A, S(0), Π(0)}` certified against the operator
//! identity `A·S(0) − S(0)·A* = i·Π(0)·Π(0)*`, plus the four example families.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hermitian_min_eig, ComplexMatrix, C64, I, ZERO};

/// Relative tolerance for the initial operator identity.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Imaginary parts up to this size still count as real.
pub const REALNESS_TOL: f64 = 1e-12;
/// `Im λ ≥ −HALFPLANE_TOL·‖A‖` is accepted as the closed upper half-plane.
pub const HALFPLANE_TOL: f64 = 1e-10;

/// A certified GBDT seed datum. Immutable once constructed.
#[derive(Debug, Clone)]
pub struct ParameterTriple {
    a: ComplexMatrix,
    s0: ComplexMatrix,
    pi0: ComplexMatrix,
    s0_positive_definite: bool,
    s0_min_eig: f64,
    identity_residual: f64,
    a_eigenvalues: Vec<C64>,
}

/// `AS − SA* − iΠΠ*`
pub fn identity_defect(a: &ComplexMatrix, s: &ComplexMatrix, pi: &ComplexMatrix) -> ComplexMatrix {
    let lhs = &(a * s) - &(s * &a.adjoint());
    let rhs = (pi * &pi.adjoint()).scale(I);
    &lhs - &rhs
}

/// Checks shapes, Hermiticity of `s0` and the operator identity.
pub fn validate_triple(a: ComplexMatrix, s0: ComplexMatrix, pi0: ComplexMatrix) -> Result<ParameterTriple> {
    let n = a.ensure_square()?;
    if s0.shape() != (n, n) {
        return Err(Error::ShapeMismatch(format!(
            "S0 is {}x{}, expected {n}x{n}",
            s0.rows(),
            s0.cols()
        )));
    }
    if pi0.shape() != (n, 2) {
        return Err(Error::ShapeMismatch(format!(
            "Pi0 is {}x{}, expected {n}x2",
            pi0.rows(),
            pi0.cols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("order n must be at least 1".into()));
    }
    let deviation = s0.hermitian_deviation();
    if deviation > IDENTITY_TOL * s0.norm() {
        return Err(Error::NotHermitian { deviation });
    }
    let residual = identity_defect(&a, &s0, &pi0).norm();
    let tolerance = IDENTITY_TOL * (a.norm() * s0.norm() + pi0.norm().powi(2));
    if residual > tolerance {
        return Err(Error::IdentityViolated { residual, tolerance });
    }
    let s0_min_eig = hermitian_min_eig(&s0)?;
    let a_eigenvalues = eigenvalues(&a)?;
    Ok(ParameterTriple {
        s0_positive_definite: s0_min_eig > 0.0,
        s0_min_eig,
        identity_residual: residual,
        a_eigenvalues,
        a,
        s0,
        pi0,
    })
}

impl ParameterTriple {
    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn a(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn s0(&self) -> &ComplexMatrix {
        &self.s0
    }

    pub fn pi0(&self) -> &ComplexMatrix {
        &self.pi0
    }

    /// Λ₁(0), the first column of Π(0).
    pub fn lambda1_0(&self) -> ComplexMatrix {
        self.pi0.column(0)
    }

    /// Λ₂(0), the second column of Π(0).
    pub fn lambda2_0(&self) -> ComplexMatrix {
        self.pi0.column(1)
    }

    pub fn is_s0_positive_definite(&self) -> bool {
        self.s0_positive_definite
    }

    pub fn s0_min_eig(&self) -> f64 {
        self.s0_min_eig
    }

    /// Unnormalised residual of the identity at x = 0, as recorded at construction.
    pub fn identity_residual(&self) -> f64 {
        self.identity_residual
    }

    pub fn a_eigenvalues(&self) -> &[C64] {
        &self.a_eigenvalues
    }

    pub fn spectral_radius(&self) -> f64 {
        self.a_eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `𝒜 = −iA`
    pub fn cal_a(&self) -> ComplexMatrix {
        self.a.scale(-I)
    }
}

/// Whether the dressed system reduces to the scalar real Dirac–Weyl form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RealnessCertificate {
    pub is_real_form: bool,
    pub max_violation: f64,
}

/// Entries of `iA`, `S(0)`, `iΛ₁(0)` and `Λ₂(0)` must all be real.
pub fn realness_conditions(t: &ParameterTriple) -> RealnessCertificate {
    let max_violation = [
        t.a.scale(I).max_abs_imag(),
        t.s0.max_abs_imag(),
        t.lambda1_0().scale(I).max_abs_imag(),
        t.lambda2_0().max_abs_imag(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    RealnessCertificate {
        is_real_form: max_violation <= REALNESS_TOL,
        max_violation,
    }
}

/// True iff every eigenvalue of `A` lies in the closed upper half-plane (up to tolerance).
pub fn spectrum_in_closed_upper_halfplane(t: &ParameterTriple) -> bool {
    let floor = -HALFPLANE_TOL * t.a.norm();
    t.a_eigenvalues.iter().all(|z| z.im >= floor)
}

/// Half-plane check gated on `S(0) > 0`; `None` means the hypothesis
/// fails and the check was skipped.
pub fn spectrum_halfplane_check(t: &ParameterTriple) -> Option<bool> {
    t.s0_positive_definite
        .then(|| spectrum_in_closed_upper_halfplane(t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Sign {
    #[default]
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Scalar (n = 1) triple: `A = i·calA`, `S0 = 1`, `Π(0) = [±i·m1, ±m2]`,
/// admissible iff `2·calA = m1² + m2²`.
pub fn make_example1(cal_a: f64, m1: f64, m2: f64, sign1: Sign, sign2: Sign) -> Result<ParameterTriple> {
    if !(cal_a > 0.0) || m1 < 0.0 || m2 < 0.0 || !m1.is_finite() || !m2.is_finite() {
        return Err(Error::ConstraintViolated(format!(
            "need calA > 0 and m1, m2 >= 0 (got {cal_a}, {m1}, {m2})"
        )));
    }
    let lhs = 2.0 * cal_a;
    let rhs = m1 * m1 + m2 * m2;
    if (lhs - rhs).abs() > 1e-12 * lhs.max(1.0) {
        return Err(Error::ConstraintViolated(format!(
            "2·calA = {lhs} but m1² + m2² = {rhs}"
        )));
    }
    let a = ComplexMatrix::diag(&[C64::new(0.0, cal_a)]);
    let pi0 = ComplexMatrix::from_rows(&[&[
        C64::new(0.0, sign1.value() * m1),
        C64::new(sign2.value() * m2, 0.0),
    ]]);
    validate_triple(a, ComplexMatrix::identity(1), pi0)
}

/// The 2×2 Jordan-cell triple: `A = i[[1,0],[1,1]]`, `S0 = I`,
/// `Π(0) = (1/√2)[[2i, 0], [i, √3]]`.
pub fn make_example2() -> ParameterTriple {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let a = ComplexMatrix::from_rows(&[&[I, ZERO], &[I, I]]);
    let pi0 = ComplexMatrix::from_rows(&[
        &[C64::new(0.0, 2.0 * r), ZERO],
        &[C64::new(0.0, r), C64::new(3f64.sqrt() * r, 0.0)],
    ]);
    validate_triple(a, ComplexMatrix::identity(2), pi0).expect("fixed example satisfies the identity")
}

fn check_real_vector(name: &str, v: &[f64], n: usize) -> Result<()> {
    if v.len() != n {
        return Err(Error::ShapeMismatch(format!("{name} has length {}, expected {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!("{name} has non-finite entries")));
    }
    Ok(())
}

fn gram(h1: &[f64], h2: &[f64]) -> Vec<f64> {
    let n = h1.len();
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            g[i * n + j] = h1[i] * h1[j] + h2[i] * h2[j];
        }
    }
    g
}

fn pi_from(h1: &[f64], h2: &[f64], scale: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(h1.len(), 2, |i, j| {
        if j == 0 {
            C64::new(0.0, scale * h1[i])
        } else {
            C64::new(scale * h2[i], 0.0)
        }
    })
}

/// `𝒜 = 𝒜₀ + h1h1ᵀ + h2h2ᵀ` with real skew `𝒜₀`; `A = i𝒜`, `S0 = I`,
/// `Π(0) = √2·[i·h1, h2]`.
pub fn make_example3(cal_a0: &ComplexMatrix, h1: &[f64], h2: &[f64]) -> Result<ParameterTriple> {
    let n = cal_a0.ensure_square()?;
    check_real_vector("h1", h1, n)?;
    check_real_vector("h2", h2, n)?;
    let mut deviation = cal_a0.max_abs_imag();
    for i in 0..n {
        for j in 0..n {
            deviation = deviation.max((cal_a0[(i, j)] + cal_a0[(j, i)]).norm());
        }
    }
    if deviation > REALNESS_TOL * cal_a0.max_abs().max(1.0) {
        return Err(Error::NotSkewSymmetric { deviation });
    }
    let g = gram(h1, h2);
    let cal_a = ComplexMatrix::from_fn(n, n, |i, j| C64::new(cal_a0[(i, j)].re + g[i * n + j], 0.0));
    let pi0 = pi_from(h1, h2, std::f64::consts::SQRT_2);
    validate_triple(cal_a.scale(I), ComplexMatrix::identity(n), pi0)
}

/// Lower-triangular real `𝒜` with `𝒜 + 𝒜ᵀ = h1h1ᵀ + h2h2ᵀ`; `A = i𝒜`,
/// `S0 = I`, `Π(0) = [i·h1, h2]`.
///
/// The diagonal and strictly-lower entries are forced by that identity.
/// A supplied `lower` must agree with the forced strictly-lower part; its
/// diagonal and upper part are ignored.
pub fn make_example4(h1: &[f64], h2: &[f64], lower: Option<&ComplexMatrix>) -> Result<ParameterTriple> {
    let n = h1.len();
    check_real_vector("h1", h1, n)?;
    check_real_vector("h2", h2, n)?;
    if n == 0 {
        return Err(Error::InvalidInput("order n must be at least 1".into()));
    }
    let g = gram(h1, h2);
    let cal_a = ComplexMatrix::from_fn(n, n, |i, j| {
        let v = match i.cmp(&j) {
            std::cmp::Ordering::Equal => 0.5 * g[i * n + i],
            std::cmp::Ordering::Greater => g[i * n + j],
            std::cmp::Ordering::Less => 0.0,
        };
        C64::new(v, 0.0)
    });
    if let Some(lower) = lower {
        if lower.shape() != (n, n) {
            return Err(Error::ShapeMismatch(format!(
                "lower part is {}x{}, expected {n}x{n}",
                lower.rows(),
                lower.cols()
            )));
        }
        for i in 0..n {
            for j in 0..i {
                let given = lower[(i, j)];
                let forced = cal_a[(i, j)].re;
                if (given - C64::new(forced, 0.0)).norm() > 1e-12 * forced.abs().max(1.0) {
                    return Err(Error::InconsistentLowerPart {
                        row: i,
                        col: j,
                        given: given.re,
                        forced,
                    });
                }
            }
        }
    }
    validate_triple(cal_a.scale(I), ComplexMatrix::identity(n), pi_from(h1, h2, 1.0))
}

/// Scale applied to random `h` vectors so that `‖h1‖² + ‖h2‖²` stays O(1)
/// and dressed quantities remain well inside f64 range on |x| ≤ 10.
pub fn random_h_scale(n: usize) -> f64 {
    0.5 / (n as f64).sqrt()
}

fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| scale * rng.gen_range(-1.0..1.0)).collect()
}

/// Random real skew-symmetric matrix with entries in (−1, 1).
pub fn random_skew(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = C64::new(v, 0.0);
            m[(j, i)] = C64::new(-v, 0.0);
        }
    }
    m
}

/// Deterministic generator for the randomized example families.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

/// Example-3 triple with random skew part and random `h1`, `h2`.
pub fn random_example3(rng: &mut impl Rng, n: usize) -> Result<ParameterTriple> {
    let scale = random_h_scale(n);
    let a0 = random_skew(rng, n);
    let h1 = random_vec(rng, n, scale);
    let h2 = random_vec(rng, n, scale);
    make_example3(&a0, &h1, &h2)
}

/// Example-4 triple with random `h1`, `h2`.
pub fn random_example4(rng: &mut impl Rng, n: usize) -> Result<ParameterTriple> {
    let scale = random_h_scale(n);
    let h1 = random_vec(rng, n, scale);
    let h2 = random_vec(rng, n, scale);
    make_example4(&h1, &h2, None)
}

/// Complex matrix as nested row arrays of `[re, im]` pairs.
pub type NestedMatrix = Vec<Vec<[f64; 2]>>;

pub fn to_nested(m: &ComplexMatrix) -> NestedMatrix {
    (0..m.rows())
        .map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn from_nested(rows: &NestedMatrix) -> Result<ComplexMatrix> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::ShapeMismatch("ragged rows".into()));
    }
    ComplexMatrix::new(
        r,
        c,
        rows.iter()
            .flat_map(|row| row.iter().map(|&[re, im]| C64::new(re, im)))
            .collect(),
    )
}

/// Serialized triple: `{"n": .., "A": .., "S0": .., "Pi0": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleDocument {
    pub n: usize,
    #[serde(rename = "A")]
    pub a: NestedMatrix,
    #[serde(rename = "S0")]
    pub s0: NestedMatrix,
    #[serde(rename = "Pi0")]
    pub pi0: NestedMatrix,
}

impl TripleDocument {
    pub fn from_triple(t: &ParameterTriple) -> Self {
        Self {
            n: t.n(),
            a: to_nested(&t.a),
            s0: to_nested(&t.s0),
            pi0: to_nested(&t.pi0),
        }
    }

    pub fn to_triple(&self) -> Result<ParameterTriple> {
        let a = from_nested(&self.a)?;
        if a.rows() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "declared n = {} but A has {} rows",
                self.n,
                a.rows()
            )));
        }
        validate_triple(a, from_nested(&self.s0)?, from_nested(&self.pi0)?)
    }
}
