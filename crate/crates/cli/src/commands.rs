use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use num_complex::Complex64;

use gbdt_core::explicit::{eval_s, normalized_identity_residual, potential_from_state, psi_from_state};
use gbdt_core::general::{integrate_dressing, DressingOptions, DressingTrajectory};
use gbdt_core::grid::Grid;
use gbdt_core::linalg::hermitian_min_eig;
use gbdt_core::seed::SeedPotential;
use gbdt_core::triple::{
    realness_conditions, spectrum_halfplane_check, ParameterTriple, TripleDocument, IDENTITY_TOL,
};
use gbdt_core::verification::{full_report, ReportOptions, Thresholds};
use gbdt_core::Error;

use crate::config::{h_from_config, parse_err, parse_h, resolve_grid, BuildError, MethodName, RunConfig};
use crate::{
    ExampleArgs, Failure, PotentialArgs, ProfileArgs, SolveArgs, TripleArgs, ValidateArgs, VerifyArgs,
};

const DEFAULT_TOL: f64 = 1e-10;

type CmdResult = Result<(), Failure>;

/// Shortest round-trip form; scientific outside `[1e-4, 1e15)`.
struct Num(f64);

impl std::fmt::Display for Num {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let a = self.0.abs();
        if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
            write!(f, "{:e}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

fn load_config(t: &TripleArgs) -> Result<RunConfig, Failure> {
    Ok(match &t.config {
        Some(p) => parse_err(RunConfig::load(p))?,
        None => RunConfig::default(),
    })
}

fn build_triple(t: &TripleArgs, cfg: &RunConfig) -> Result<ParameterTriple, Failure> {
    let source = parse_err(t.source(cfg))?;
    source.build().map_err(|e| match e {
        BuildError::Input(e) => Failure::Parse(e),
        BuildError::Invalid(
            e @ (Error::ShapeMismatch(_) | Error::NotSquare { .. } | Error::NonFinite(_) | Error::InvalidInput(_)),
        ) => Failure::Parse(e.into()),
        BuildError::Invalid(e) => Failure::Run(anyhow!(e).context("triple is not valid")),
    })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display())).map_err(Failure::Run)?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn seed_of(p: &ProfileArgs, cfg: &RunConfig) -> Result<SeedPotential, Failure> {
    let seed = match &p.seed {
        Some(s) => parse_err(SeedPotential::parse(s).map_err(Into::into))?,
        None => cfg.seed.clone().unwrap_or(SeedPotential::Zero),
    };
    parse_err(seed.validate().map_err(Into::into))?;
    Ok(seed)
}

fn method_of(p: &ProfileArgs, cfg: &RunConfig) -> Result<MethodName, Failure> {
    Ok(match &p.method {
        Some(m) => parse_err(MethodName::parse(m))?,
        None => cfg.method.unwrap_or(MethodName::Auto),
    })
}

fn tol_of(p: &ProfileArgs, cfg: &RunConfig) -> Result<f64, Failure> {
    let tol = p.tol.or(cfg.tolerances.ode).unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Parse(anyhow!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

/// Integration interval covering the grid and the origin.
fn span(grid: &Grid, margin: f64) -> (f64, f64) {
    ((grid.min - margin).min(0.0), (grid.max + margin).max(0.0))
}

/// Per-x evaluation backed by either the closed-form or the ODE path.
enum Engine<'a> {
    Explicit(&'a ParameterTriple, MethodName),
    Ode(DressingTrajectory),
}

impl<'a> Engine<'a> {
    fn new(
        t: &'a ParameterTriple,
        seed: &SeedPotential,
        method: MethodName,
        tol: f64,
        grid: &Grid,
    ) -> Result<Self, Failure> {
        if seed.is_zero() {
            return Ok(Engine::Explicit(t, method));
        }
        if method != MethodName::Auto {
            eprintln!("warning: --method applies to the zero seed only; using the ODE path");
        }
        let traj = integrate_dressing(t, seed, span(grid, 0.0), DressingOptions::new(tol))?;
        Ok(Engine::Ode(traj))
    }
}

fn validate_inner(t: &ParameterTriple) -> (Vec<String>, bool) {
    let mut lines = Vec::new();
    let mut ok = true;
    let tol = IDENTITY_TOL * (t.a().norm() * t.s0().norm() + t.pi0().norm().powi(2));
    lines.push(format!("n: {}", t.n()));
    lines.push(format!("identity_residual: {:e} (tolerance {:e})", t.identity_residual(), tol));
    lines.push(format!("hermitian_deviation: {:e}", t.s0().hermitian_deviation()));
    lines.push(format!(
        "s0_positive_definite: {} (min eigenvalue {})",
        t.is_s0_positive_definite(),
        t.s0_min_eig()
    ));
    if !t.is_s0_positive_definite() {
        lines.push("warning: S0 is not positive definite; invertibility of S(x) is not guaranteed".into());
    }
    let cert = realness_conditions(t);
    lines.push(format!("realness: {} (max violation {:e})", cert.is_real_form, cert.max_violation));
    match spectrum_halfplane_check(t) {
        Some(inside) => {
            lines.push(format!("spectrum_upper_halfplane: {inside}"));
            ok &= inside;
        }
        None => lines.push("spectrum_upper_halfplane: n/a (S0 not positive definite)".into()),
    }
    (lines, ok)
}

pub fn validate(a: &ValidateArgs) -> CmdResult {
    let cfg = load_config(&a.triple)?;
    let t = match build_triple(&a.triple, &cfg) {
        Ok(t) => t,
        Err(Failure::Run(e)) => {
            println!("status: failed");
            println!("reason: {}", e.root_cause());
            return Err(Failure::Silent);
        }
        Err(e) => return Err(e),
    };
    let (lines, ok) = validate_inner(&t);
    for l in lines {
        println!("{l}");
    }
    println!("status: {}", if ok { "ok" } else { "failed" });
    if ok {
        Ok(())
    } else {
        Err(Failure::Silent)
    }
}

fn at(x: f64, e: Error) -> Failure {
    Failure::Run(anyhow!(e).context(format!("aborted at x = {x}")))
}

pub fn potential(a: &PotentialArgs) -> CmdResult {
    let cfg = load_config(&a.triple)?;
    let t = build_triple(&a.triple, &cfg)?;
    let p = &a.profile;
    let grid = parse_err(resolve_grid(p.xgrid.as_deref(), p.x, cfg.grids.x.as_ref(), "-3:3:0.1"))?;
    let seed = seed_of(p, &cfg)?;
    let method = method_of(p, &cfg)?;
    let tol = tol_of(p, &cfg)?;
    let physical = match (a.hbar_vf, a.energy, cfg.physical) {
        (Some(h), Some(e), _) => Some((h, e)),
        (None, None, Some(ph)) => Some((ph.hbar_vf, ph.energy)),
        (None, None, None) => None,
        _ => return Err(Failure::Parse(anyhow!("--hbar-vf and --energy must be given together"))),
    };
    if let Some((h, e)) = physical {
        if !(h.is_finite() && e.is_finite()) {
            return Err(Failure::Parse(anyhow!("physical constants must be finite")));
        }
    }

    let engine = Engine::new(&t, &seed, method, tol, &grid)?;
    let mut out = output(p.out.as_deref())?;
    write!(out, "x,u_re,u_im,min_eig_S,identity_residual")?;
    if physical.is_some() {
        write!(out, ",U")?;
    }
    writeln!(out)?;
    for x in grid.points() {
        let (u, min_eig, residual) = match &engine {
            Engine::Explicit(t, m) => {
                let st = eval_s(t, x, m.choice()).map_err(|e| at(x, e))?;
                let pot = potential_from_state(&st).map_err(|e| at(x, e))?;
                (pot.u_tilde, st.min_eig, st.identity_residual)
            }
            Engine::Ode(traj) => {
                let (pi, s) = traj.state_at(x).map_err(|e| at(x, e))?;
                let pot = traj.transformed_potential(x).map_err(|e| at(x, e))?;
                let min_eig = hermitian_min_eig(&s.hermitian_part()).map_err(|e| at(x, e))?;
                (pot.u_tilde, min_eig, normalized_identity_residual(&t, &pi, &s))
            }
        };
        write!(out, "{},{},{},{},{}", Num(x), Num(u.re), Num(u.im), Num(min_eig), Num(residual))?;
        if let Some((hbar_vf, energy)) = physical {
            write!(out, ",{}", Num(energy - hbar_vf * u.re))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

fn h_of(spec: Option<&str>, cfg: &RunConfig, n: usize) -> Result<Vec<Complex64>, Failure> {
    Ok(match (spec, &cfg.h) {
        (Some(s), _) => parse_err(parse_h(s, n))?,
        (None, Some(pairs)) => parse_err(h_from_config(pairs, n))?,
        (None, None) => parse_err(parse_h("e1", n))?,
    })
}

pub fn solve(a: &SolveArgs) -> CmdResult {
    let cfg = load_config(&a.triple)?;
    let t = build_triple(&a.triple, &cfg)?;
    let p = &a.profile;
    let xg = parse_err(resolve_grid(p.xgrid.as_deref(), p.x, cfg.grids.x.as_ref(), "-2:2:0.1"))?;
    let yg = parse_err(resolve_grid(a.ygrid.as_deref(), a.y, cfg.grids.y.as_ref(), "-2:2:0.1"))?;
    let seed = seed_of(p, &cfg)?;
    let method = method_of(p, &cfg)?;
    let tol = tol_of(p, &cfg)?;
    let h = h_of(a.h.as_deref(), &cfg, t.n())?;

    let engine = Engine::new(&t, &seed, method, tol, &xg)?;
    let ys = yg.points();
    let mut out = output(p.out.as_deref())?;
    writeln!(out, "x,y,psi1_re,psi1_im,psi2_re,psi2_im")?;
    for x in xg.points() {
        let state = match &engine {
            Engine::Explicit(t, m) => Some(eval_s(t, x, m.choice()).map_err(|e| at(x, e))?),
            Engine::Ode(_) => None,
        };
        for &y in &ys {
            let psi = match (&engine, &state) {
                (Engine::Explicit(t, _), Some(st)) => psi_from_state(t, st, y, &h),
                (Engine::Ode(traj), _) => traj.psi(x, y, &h),
                _ => unreachable!(),
            }
            .map_err(|e| at(x, e))?;
            writeln!(
                out,
                "{},{},{},{},{},{}",
                Num(x),
                Num(y),
                Num(psi[0].re),
                Num(psi[0].im),
                Num(psi[1].re),
                Num(psi[1].im)
            )?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    let cfg = load_config(&a.triple)?;
    let t = build_triple(&a.triple, &cfg)?;
    let p = &a.profile;
    let xg = parse_err(resolve_grid(p.xgrid.as_deref(), p.x, cfg.grids.x.as_ref(), "-2:2:0.25"))?;
    let yg = parse_err(resolve_grid(a.ygrid.as_deref(), None, cfg.grids.y.as_ref(), "-1:1:0.25"))?;
    let seed = seed_of(p, &cfg)?;
    if p.method.is_some() {
        eprintln!("warning: --method is ignored by verify; S(x) routes are cross-checked");
    }
    let tol = tol_of(p, &cfg)?;
    let h = match (&a.h, &cfg.h) {
        (None, None) => None,
        _ => Some(vec![h_of(a.h.as_deref(), &cfg, t.n())?]),
    };
    let opts = ReportOptions {
        thresholds: Thresholds {
            ode_tolerance: tol,
            ..Thresholds::default()
        },
        h,
        inject_error: a.inject_error,
    };
    let report = full_report(&t, &seed, &xg, &yg, &opts)?;
    let mut out = output(p.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report).map_err(|e| Failure::Run(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    if report.path == "ode" {
        eprintln!("identity drift: {:e}", report.identity_residual_max);
    }
    for c in report.criteria.iter().filter(|c| !c.passed) {
        eprintln!("failed: {} = {:?} (threshold {})", c.name, c.value, c.threshold);
    }
    eprintln!("verify: {}", if report.passed { "PASS" } else { "FAIL" });
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Silent)
    }
}

pub fn example(a: &ExampleArgs) -> CmdResult {
    let cfg = load_config(&a.triple)?;
    let t = build_triple(&a.triple, &cfg)?;
    let mut out = output(a.out.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &TripleDocument::from_triple(&t)).map_err(|e| Failure::Run(e.into()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
