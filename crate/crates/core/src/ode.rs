//! Dormand–Prince 5(4) with continuous (dense) output for complex state vectors.

use crate::error::{Error, Result};
use crate::linalg::C64;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 1_000_000;

/// One accepted step with its continuous-extension coefficients.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub x0: f64,
    pub x1: f64,
    coeffs: [Vec<C64>; 5],
}

impl DenseStep {
    pub fn y0(&self) -> &[C64] {
        &self.coeffs[0]
    }

    pub fn y1(&self) -> Vec<C64> {
        self.coeffs[0]
            .iter()
            .zip(&self.coeffs[1])
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = if self.x0 <= self.x1 {
            (self.x0, self.x1)
        } else {
            (self.x1, self.x0)
        };
        (lo..=hi).contains(&x)
    }

    /// Fourth-order interpolant at `x` within the step.
    pub fn eval(&self, x: f64) -> Vec<C64> {
        let theta = (x - self.x0) / (self.x1 - self.x0);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coeffs;
        (0..r1.len())
            .map(|i| r1[i] + (r2[i] + (r3[i] + (r4[i] + r5[i] * theta1) * theta) * theta1) * theta)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl std::ops::AddAssign for IntegratorStats {
    fn add_assign(&mut self, o: Self) {
        self.accepted += o.accepted;
        self.rejected += o.rejected;
        self.evaluations += o.evaluations;
    }
}

/// Componentwise error weights `atol + rtol·|y_i|`.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
}

impl StepControl {
    /// `atol = rtol = tol`.
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_min: 1e-14,
        }
    }

    pub fn with_atol(self, atol: f64) -> Self {
        Self { atol, ..self }
    }
}

fn axpy(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y' = f(x, y)` from `x0` to `x_end` (either direction),
/// stopping exactly on every point of `breakpoints` that lies in between.
///
/// `on_accept` sees each accepted step and may replace the new state
/// (for projection) or abort with an error.
pub fn integrate<F, A>(
    mut f: F,
    x0: f64,
    y0: Vec<C64>,
    x_end: f64,
    breakpoints: &[f64],
    control: StepControl,
    mut on_accept: A,
) -> Result<(Vec<DenseStep>, IntegratorStats)>
where
    F: FnMut(f64, &[C64], &mut [C64]) -> Result<()>,
    A: FnMut(&DenseStep, &mut Vec<C64>) -> Result<()>,
{
    let dir = if x_end >= x0 { 1.0 } else { -1.0 };
    let mut stops: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| (b - x0) * dir > 0.0 && (x_end - b) * dir > 0.0)
        .collect();
    stops.sort_by(|a, b| (a * dir).partial_cmp(&(b * dir)).expect("finite breakpoints"));
    stops.push(x_end);

    let dim = y0.len();
    let mut steps = Vec::new();
    let mut stats = IntegratorStats::default();
    let mut x = x0;
    let mut y = y0;
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut ks: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); dim]; 6];
    let mut tmp = vec![C64::new(0.0, 0.0); dim];
    let mut y_new = vec![C64::new(0.0, 0.0); dim];

    for &stop in &stops {
        if x == stop {
            continue;
        }
        // restart at each segment: derivative may jump across a breakpoint
        f(x, &y, &mut k1)?;
        stats.evaluations += 1;
        let mut h = initial_step(&y, &k1, &control, (stop - x).abs()) * dir;
        let mut last_rejected = false;
        loop {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::StepSizeUnderflow { x });
            }
            let remaining = stop - x;
            let mut hit_stop = false;
            if (h - remaining) * dir >= 0.0 || (remaining - h).abs() < 1e-12 * remaining.abs() {
                h = remaining;
                hit_stop = true;
            }
            if h.abs() < control.h_min * x.abs().max(1.0) && !hit_stop {
                return Err(Error::StepSizeUnderflow { x });
            }

            let [k2, k3, k4, k5, k6, k7] = {
                let (a, rest) = ks.split_at_mut(1);
                let (b, rest) = rest.split_at_mut(1);
                let (c, rest) = rest.split_at_mut(1);
                let (d, rest) = rest.split_at_mut(1);
                let (e, g) = rest.split_at_mut(1);
                [&mut a[0], &mut b[0], &mut c[0], &mut d[0], &mut e[0], &mut g[0]]
            };
            axpy(&mut tmp, &y, h, &[(A21, &k1)]);
            f(x + C2 * h, &tmp, k2)?;
            axpy(&mut tmp, &y, h, &[(A31, &k1), (A32, k2)]);
            f(x + C3 * h, &tmp, k3)?;
            axpy(&mut tmp, &y, h, &[(A41, &k1), (A42, k2), (A43, k3)]);
            f(x + C4 * h, &tmp, k4)?;
            axpy(&mut tmp, &y, h, &[(A51, &k1), (A52, k2), (A53, k3), (A54, k4)]);
            f(x + C5 * h, &tmp, k5)?;
            axpy(
                &mut tmp,
                &y,
                h,
                &[(A61, &k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)],
            );
            let x_new = if hit_stop { stop } else { x + h };
            f(x_new, &tmp, k6)?;
            axpy(
                &mut y_new,
                &y,
                h,
                &[(A71, &k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)],
            );
            f(x_new, &y_new, k7)?;
            stats.evaluations += 6;

            let mut err_sq = 0.0;
            for i in 0..dim {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sc = control.atol + control.rtol * y[i].norm().max(y_new[i].norm());
                err_sq += (e.norm() / sc).powi(2);
            }
            let err = (err_sq / dim.max(1) as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::NonFinite("ODE step"));
            }

            if err <= 1.0 {
                let r2: Vec<C64> = (0..dim).map(|i| y_new[i] - y[i]).collect();
                let r3: Vec<C64> = (0..dim).map(|i| k1[i] * h - r2[i]).collect();
                let r4: Vec<C64> = (0..dim).map(|i| r2[i] - k7[i] * h - r3[i]).collect();
                let r5: Vec<C64> = (0..dim)
                    .map(|i| {
                        (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h
                    })
                    .collect();
                let step = DenseStep {
                    x0: x,
                    x1: x_new,
                    coeffs: [y.clone(), r2, r3, r4, r5],
                };
                let mut accepted = y_new.clone();
                on_accept(&step, &mut accepted)?;
                let projected = accepted != y_new;
                steps.push(step);
                stats.accepted += 1;
                x = x_new;
                y = accepted;
                if projected {
                    f(x, &y, &mut k1)?;
                    stats.evaluations += 1;
                } else {
                    k1.copy_from_slice(k7);
                }
                let mut fac = (SAFETY * err.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
                if last_rejected {
                    fac = fac.min(1.0);
                }
                last_rejected = false;
                h *= fac;
                if hit_stop {
                    break;
                }
            } else {
                stats.rejected += 1;
                last_rejected = true;
                h *= (SAFETY * err.powf(-0.2)).max(FAC_MIN);
            }
        }
    }
    Ok((steps, stats))
}

fn initial_step(y: &[C64], dy: &[C64], control: &StepControl, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let sc = |v: C64, yi: C64| v.norm() / (control.atol + control.rtol * yi.norm());
    let d0 = (y.iter().map(|&v| sc(v, v).powi(2)).sum::<f64>() / n).sqrt();
    let d1 = (y.iter().zip(dy).map(|(&v, &d)| sc(d, v).powi(2)).sum::<f64>() / n).sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12_f64.min(span))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_scalar(
        lambda: C64,
        x_end: f64,
        tol: f64,
    ) -> (Vec<DenseStep>, IntegratorStats) {
        integrate(
            |_, y, dy| {
                dy[0] = lambda * y[0];
                Ok(())
            },
            0.0,
            vec![C64::new(1.0, 0.0)],
            x_end,
            &[],
            StepControl::new(tol),
            |_, _| Ok(()),
        )
        .unwrap()
    }

    #[test]
    fn exponential_growth_and_decay() {
        for &(lam, x) in &[(C64::new(1.0, 0.0), 3.0), (C64::new(-2.0, 1.0), 2.0), (C64::new(0.5, 0.0), -4.0)] {
            let (steps, stats) = run_scalar(lam, x, 1e-10);
            let end = steps.last().unwrap();
            assert_eq!(end.x1, x);
            let exact = (lam * x).exp();
            assert!((end.y1()[0] - exact).norm() <= 1e-8 * exact.norm(), "{lam} {x}");
            assert!(stats.accepted > 3);
        }
    }

    #[test]
    fn dense_output_matches_solution() {
        let lam = C64::new(0.0, 3.0);
        let (steps, _) = run_scalar(lam, 2.0, 1e-10);
        for s in &steps {
            let xm = 0.5 * (s.x0 + s.x1);
            let exact = (lam * xm).exp();
            assert!((s.eval(xm)[0] - exact).norm() <= 1e-8);
            assert!((s.eval(s.x0)[0] - s.y0()[0]).norm() < 1e-15);
            assert!((s.eval(s.x1)[0] - s.y1()[0]).norm() < 1e-14);
        }
    }

    #[test]
    fn stops_on_breakpoints() {
        let (steps, _) = integrate(
            |x, _, dy| {
                dy[0] = C64::new((x - 0.5).abs(), 0.0);
                Ok(())
            },
            0.0,
            vec![C64::new(0.0, 0.0)],
            1.0,
            &[0.5, 2.0, -1.0],
            StepControl::new(1e-10),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!(steps.iter().any(|s| s.x1 == 0.5));
        let end = steps.last().unwrap().y1()[0];
        assert!((end - C64::new(0.25, 0.0)).norm() < 1e-12, "{end}");
    }

    #[test]
    fn global_error_order() {
        // tighter tolerance, smaller error
        let lam = C64::new(1.0, 0.0);
        let err = |tol| {
            let (steps, _) = run_scalar(lam, 2.0, tol);
            (steps.last().unwrap().y1()[0] - (lam * 2.0).exp()).norm()
        };
        assert!(err(1e-10) < err(1e-6));
    }

    #[test]
    fn callback_error_aborts() {
        let res = integrate(
            |_, y, dy| {
                dy[0] = y[0];
                Ok(())
            },
            0.0,
            vec![C64::new(1.0, 0.0)],
            1.0,
            &[],
            StepControl::new(1e-8),
            |s, _| {
                if s.x1 > 0.5 {
                    Err(Error::IdentityDriftExceeded { drift: 1.0, limit: 0.0, x: s.x1 })
                } else {
                    Ok(())
                }
            },
        );
        assert!(matches!(res, Err(Error::IdentityDriftExceeded { .. })));
    }
}
