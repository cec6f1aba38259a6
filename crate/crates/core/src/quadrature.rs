//! Adaptive composite Gauss–Legendre quadrature for matrix-valued integrands.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

pub const PANEL_POINTS: usize = 15;
pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureTolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for QuadratureTolerance {
    fn default() -> Self {
        Self {
            abs: DEFAULT_ABS_TOL,
            rel: DEFAULT_REL_TOL,
        }
    }
}

/// Nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_POINTS))
}

fn panel<F>(f: &mut F, a: f64, b: f64) -> Result<ComplexMatrix>
where
    F: FnMut(f64) -> Result<ComplexMatrix>,
{
    let (nodes, weights) = rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc: Option<ComplexMatrix> = None;
    for (&t, &w) in nodes.iter().zip(weights) {
        let v = f(mid + half * t)?.scale_real(w * half);
        match acc.as_mut() {
            Some(sum) => *sum += &v,
            None => acc = Some(v),
        }
    }
    Ok(acc.expect("rule has nodes"))
}

/// Signed integral `∫_a^b f(r) dr`; `b < a` is allowed.
///
/// Panels are bisected until a panel and its two halves agree within
/// its share of `max(abs, rel·‖I‖)`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, tol: QuadratureTolerance) -> Result<ComplexMatrix>
where
    F: FnMut(f64) -> Result<ComplexMatrix>,
{
    let whole = panel(&mut f, a, b)?;
    if a == b {
        return Ok(whole.scale_real(0.0));
    }
    let width = (b - a).abs();
    let scale = tol.abs.max(tol.rel * whole.norm());
    let mut total = whole.scale_real(0.0);
    let mut stack = vec![(a, b, whole, 0u32)];
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = panel(&mut f, lo, mid)?;
        let right = panel(&mut f, mid, hi)?;
        let refined = &left + &right;
        let err = (&refined - &est).norm();
        let allowed = scale * (hi - lo).abs() / width;
        if err <= allowed || err <= tol.rel * refined.norm() * (hi - lo).abs() / width {
            total += &refined;
        } else if depth >= MAX_DEPTH {
            return Err(Error::QuadratureNonConvergence { a, b });
        } else {
            stack.push((mid, hi, right, depth + 1));
            stack.push((lo, mid, left, depth + 1));
        }
    }
    Ok(total)
}
