//! Dressing of a nontrivial seed by integrating
//! `Π′ = AΠQ₁ + ΠQ₀`, `S′ = iΠQ₁Π*` outward from x = 0.
//!
//! The operator identity `AS − SA* = iΠΠ*` is conserved by the exact flow;
//! along the numerical trajectory its residual is recorded as drift and is
//! only corrected when projection is explicitly requested.

use std::thread;

use crate::error::{Error, Result};
use crate::explicit::{assemble_potential, normalized_identity_residual, psi_from_parts, DressedPotential};
use crate::linalg::{
    hermitian_min_eig, inverse_with_condition, solve_sylvester_with_spectra, ComplexMatrix, C64, I,
};
use crate::ode::{integrate, DenseStep, IntegratorStats, StepControl};
use crate::seed::{q0, q1, SeedPotential};
use crate::triple::ParameterTriple;

/// Drift above this aborts the integration.
pub const DRIFT_LIMIT: f64 = 1e-6;

/// Absolute error weight relative to the tolerance. `S(x)` can decay far
/// below one while `S(x)⁻¹` is still needed to full relative accuracy.
pub const ATOL_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct DressingOptions {
    pub tolerance: f64,
    pub drift_limit: f64,
    /// Re-solve the identity for `S` given `Π` after every accepted step.
    pub project: bool,
}

impl DressingOptions {
    pub fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            drift_limit: DRIFT_LIMIT,
            project: false,
        }
    }
}

/// Π and S at one accepted node.
#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub x: f64,
    pub pi: ComplexMatrix,
    pub s: ComplexMatrix,
    pub identity_residual: f64,
}

#[derive(Debug, Clone)]
pub struct DressingTrajectory {
    triple: ParameterTriple,
    seed: SeedPotential,
    /// Accepted steps ordered by increasing x.
    steps: Vec<DenseStep>,
    samples: Vec<TrajectorySample>,
    pub max_identity_drift: f64,
    pub max_hermitian_drift: f64,
    pub min_eig_s: f64,
    pub stats: IntegratorStats,
    lo: f64,
    hi: f64,
}

fn pack(pi: &ComplexMatrix, s: &ComplexMatrix) -> Vec<C64> {
    pi.as_slice().iter().chain(s.as_slice()).copied().collect()
}

fn unpack(n: usize, y: &[C64]) -> (ComplexMatrix, ComplexMatrix) {
    let pi = ComplexMatrix::new(n, 2, y[..2 * n].to_vec()).expect("state layout");
    let s = ComplexMatrix::new(n, n, y[2 * n..].to_vec()).expect("state layout");
    (pi, s)
}

struct Rhs<'a> {
    a: &'a ComplexMatrix,
    q1: ComplexMatrix,
    seed: &'a SeedPotential,
    n: usize,
}

impl Rhs<'_> {
    fn eval(&self, x: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let (pi, _) = unpack(self.n, y);
        let u = self.seed.u(x);
        let api = self.a * &pi;
        let dpi = &(&api * &self.q1) + &(&pi * &q0(u));
        let ds = (&(&pi * &self.q1) * &pi.adjoint()).scale(I);
        let np = 2 * self.n;
        dy[..np].copy_from_slice(dpi.as_slice());
        dy[np..].copy_from_slice(ds.as_slice());
        Ok(())
    }
}

fn run_direction(
    t: &ParameterTriple,
    seed: &SeedPotential,
    x_end: f64,
    opts: DressingOptions,
) -> Result<(Vec<DenseStep>, Vec<TrajectorySample>, IntegratorStats)> {
    let n = t.n();
    let rhs = Rhs {
        a: t.a(),
        q1: q1(),
        seed,
        n,
    };
    let a_star = t.a().adjoint();
    let conj_eigs: Vec<C64> = t.a_eigenvalues().iter().map(|z| z.conj()).collect();
    let mut samples = Vec::new();
    let limit = opts.drift_limit;
    let (steps, stats) = integrate(
        |x, y, dy| rhs.eval(x, y, dy),
        0.0,
        pack(t.pi0(), t.s0()),
        x_end,
        seed.breakpoints(),
        StepControl::new(opts.tolerance).with_atol(opts.tolerance * ATOL_RATIO),
        |step, y| {
            let (pi, s) = unpack(n, y);
            let drift = normalized_identity_residual(t, &pi, &s);
            if !(drift <= limit) {
                return Err(Error::IdentityDriftExceeded {
                    drift,
                    limit,
                    x: step.x1,
                });
            }
            let s = if opts.project {
                let rhs = (&pi * &pi.adjoint()).scale(I);
                match solve_sylvester_with_spectra(t.a(), &a_star, &rhs, t.a_eigenvalues(), &conj_eigs) {
                    Ok(projected) => {
                        let projected = projected.hermitian_part();
                        *y = pack(&pi, &projected);
                        projected
                    }
                    Err(Error::SpectraOverlap { .. }) => s,
                    Err(e) => return Err(e),
                }
            } else {
                s
            };
            samples.push(TrajectorySample {
                x: step.x1,
                pi,
                s,
                identity_residual: drift,
            });
            Ok(())
        },
    )?;
    Ok((steps, samples, stats))
}

/// Integrates the dressing ODEs on `[a, b]` (which must contain 0) with
/// local error tolerance `opts.tolerance`. The two half-intervals run on
/// separate threads.
pub fn integrate_dressing(
    t: &ParameterTriple,
    seed: &SeedPotential,
    interval: (f64, f64),
    opts: DressingOptions,
) -> Result<DressingTrajectory> {
    let (a, b) = interval;
    if !(a <= 0.0 && 0.0 <= b && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("interval [{a}, {b}] must contain 0")));
    }
    if !(opts.tolerance > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    seed.validate()?;
    let (dlo, dhi) = seed.domain();
    if a < dlo || b > dhi {
        return Err(Error::InvalidInput(format!(
            "seed is defined on [{dlo}, {dhi}], not on [{a}, {b}]"
        )));
    }

    let (left, right) = thread::scope(|scope| {
        let left = scope.spawn(|| run_direction(t, seed, a, opts));
        let right = run_direction(t, seed, b, opts);
        (left.join().expect("integration thread panicked"), right)
    });
    let (mut lsteps, mut lsamples, lstats) = left?;
    let (rsteps, rsamples, rstats) = right?;

    lsteps.reverse();
    lsamples.reverse();
    let origin = TrajectorySample {
        x: 0.0,
        pi: t.pi0().clone(),
        s: t.s0().clone(),
        identity_residual: normalized_identity_residual(t, t.pi0(), t.s0()),
    };
    let mut samples = lsamples;
    samples.push(origin);
    samples.extend(rsamples);
    let mut steps = lsteps;
    steps.extend(rsteps);

    let mut max_identity_drift: f64 = 0.0;
    let mut max_hermitian_drift: f64 = 0.0;
    let mut min_eig_s = f64::INFINITY;
    for smp in &samples {
        max_identity_drift = max_identity_drift.max(smp.identity_residual);
        max_hermitian_drift = max_hermitian_drift.max(smp.s.hermitian_deviation() / (1.0 + smp.s.norm()));
        min_eig_s = min_eig_s.min(hermitian_min_eig(&smp.s.hermitian_part())?);
    }
    let mut stats = lstats;
    stats += rstats;
    Ok(DressingTrajectory {
        triple: t.clone(),
        seed: seed.clone(),
        steps,
        samples,
        max_identity_drift,
        max_hermitian_drift,
        min_eig_s,
        stats,
        lo: a,
        hi: b,
    })
}

impl DressingTrajectory {
    pub fn triple(&self) -> &ParameterTriple {
        &self.triple
    }

    pub fn seed(&self) -> &SeedPotential {
        &self.seed
    }

    pub fn coverage(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Accepted nodes in increasing order (includes 0).
    pub fn grid(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.x).collect()
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    /// Π(x) and S(x) from the step's continuous extension.
    pub fn state_at(&self, x: f64) -> Result<(ComplexMatrix, ComplexMatrix)> {
        if !(self.lo <= x && x <= self.hi) {
            return Err(Error::OutOfCoverage {
                x,
                lo: self.lo,
                hi: self.hi,
            });
        }
        if x == 0.0 || self.steps.is_empty() {
            return Ok((self.triple.pi0().clone(), self.triple.s0().clone()));
        }
        // steps are ordered by their lower end
        let idx = self
            .steps
            .partition_point(|s| s.x0.max(s.x1) < x)
            .min(self.steps.len() - 1);
        let step = &self.steps[idx];
        debug_assert!(step.contains(x) || idx + 1 == self.steps.len());
        Ok(unpack(self.triple.n(), &step.eval(x)))
    }

    pub fn transformed_potential(&self, x: f64) -> Result<DressedPotential> {
        let (pi, s) = self.state_at(x)?;
        let (s_inv, _) = inverse_with_condition(&s)?;
        assemble_potential(x, &pi, &s, &s_inv, self.seed.u(x))
    }

    /// `ψ̃(x, y) = Π(x)*S(x)⁻¹e^{−yA}h`
    pub fn psi(&self, x: f64, y: f64, h: &[C64]) -> Result<[C64; 2]> {
        let (pi, s) = self.state_at(x)?;
        let (s_inv, _) = inverse_with_condition(&s)?;
        psi_from_parts(self.triple.a(), &pi, &s_inv, y, h)
    }
}

/// Free-function form of [`DressingTrajectory::transformed_potential`].
pub fn transformed_potential(traj: &DressingTrajectory, x: f64) -> Result<DressedPotential> {
    traj.transformed_potential(x)
}

/// Free-function form of [`DressingTrajectory::psi`].
pub fn eval_psi_general(traj: &DressingTrajectory, x: f64, y: f64, h: &[C64]) -> Result<[C64; 2]> {
    traj.psi(x, y, h)
}
