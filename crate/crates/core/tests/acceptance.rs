//! Acceptance suite. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use gbdt_core::explicit::{
    eval_potential, eval_psi, eval_s, method_cross_agreement, normalized_identity_residual, potential_from_state,
    MethodChoice, SMethod,
};
use gbdt_core::general::{integrate_dressing, DressingOptions};
use gbdt_core::grid::Grid;
use gbdt_core::linalg::{det, ComplexMatrix, C64, ONE, ZERO};
use gbdt_core::seed::SeedPotential;
use gbdt_core::triple::{
    make_example1, make_example2, make_example3, make_example4, random_example3, random_example4, seeded_rng,
    ParameterTriple, Sign,
};
use gbdt_core::verification::{convergence_order, pde_residual, v_from_u};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    Grid::new(min, max, step).unwrap().points()
}

fn i() -> C64 {
    C64::new(0.0, 1.0)
}

// closed forms for the n = 2 Jordan-block example

fn u_exact(x: f64) -> f64 {
    -4.0 * 3f64.sqrt() * (2.0 * x).exp() / ((4.0 * x).exp() + 3.0)
}

fn det_exact(x: f64) -> f64 {
    0.25 * ((4.0 * x).exp() + 3.0)
}

fn s_inv_exact(x: f64) -> [[f64; 2]; 2] {
    let f = 4.0 / ((4.0 * x).exp() + 3.0);
    let e2 = (2.0 * x).exp();
    [
        [f * 0.25 * ((4.0 * x * x + 1.0) * e2 + 3.0 * (-2.0 * x).exp()), -f * x * e2],
        [-f * x * e2, f * e2],
    ]
}

fn psi_exact(x: f64, y: f64, h: [C64; 2]) -> [C64; 2] {
    let s3 = 3f64.sqrt();
    let pre = C64::from_polar(2.0 * 2f64.sqrt() / ((4.0 * x).exp() + 3.0), -y);
    let g = [h[0], -i() * y * h[0] + h[1]];
    let m = [
        [i() * 0.5 * ((2.0 * x - 1.0) * (3.0 * x).exp() - 3.0 * (-x).exp()), -i() * (3.0 * x).exp()],
        [C64::from(-s3 * x * x.exp()), C64::from(s3 * x.exp())],
    ];
    [
        pre * (m[0][0] * g[0] + m[0][1] * g[1]),
        pre * (m[1][0] * g[0] + m[1][1] * g[1]),
    ]
}

fn criterion_1() -> Outcome {
    let t = make_example2();
    let xs = grid(-3.0, 3.0, 0.01);
    assert_eq!(xs.len(), 601);
    let start = Instant::now();
    let mut syl: f64 = 0.0;
    for &x in &xs {
        let st = eval_s(&t, x, SMethod::Sylvester).map_err(|e| e.to_string())?;
        let u = potential_from_state(&st).map_err(|e| e.to_string())?.u_tilde;
        syl = syl.max((u - u_exact(x)).norm() / u_exact(x).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let mut quad: f64 = 0.0;
    for &x in &xs {
        let st = eval_s(&t, x, SMethod::Quadrature).map_err(|e| e.to_string())?;
        let u = potential_from_state(&st).map_err(|e| e.to_string())?.u_tilde;
        quad = quad.max((u - u_exact(x)).norm() / u_exact(x).abs());
    }
    let u0 = eval_potential(&t, 0.0).map_err(|e| e.to_string())?.u_tilde;
    let spot = (u0 - C64::from(-3f64.sqrt())).norm();
    ensure(
        syl <= 1e-10 && quad <= 1e-8 && spot <= 1e-12 && elapsed < 1.0,
        format!(
            "rel err sylvester {syl:.2e} (<= 1e-10), quadrature {quad:.2e} (<= 1e-8), |u(0) + sqrt 3| {spot:.2e}, 601-point sylvester run {elapsed:.3} s (< 1 s)"
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = make_example2();
    let (mut det_err, mut inv_err): (f64, f64) = (0.0, 0.0);
    for x in grid(-3.0, 3.0, 0.01) {
        let st = eval_s(&t, x, MethodChoice::Auto).map_err(|e| e.to_string())?;
        let d = det(&st.s).map_err(|e| e.to_string())?;
        det_err = det_err.max((d - det_exact(x)).norm() / det_exact(x));
        let inv = st.s_inv().map_err(|e| e.to_string())?;
        let exact = s_inv_exact(x);
        for r in 0..2 {
            for c in 0..2 {
                let e = exact[r][c];
                inv_err = inv_err.max((inv[(r, c)] - e).norm() / e.abs().max(1.0));
            }
        }
    }
    ensure(
        det_err <= 1e-10 && inv_err <= 1e-10,
        format!("det rel err {det_err:.2e}, inverse entry err {inv_err:.2e} (both <= 1e-10)"),
    )
}

fn criterion_3() -> Outcome {
    let t = make_example2();
    let pts = grid(-2.0, 2.0, 0.1);
    assert_eq!(pts.len(), 41);
    let mut worst: f64 = 0.0;
    for h in [[ONE, ZERO], [ZERO, ONE]] {
        for &x in &pts {
            for &y in &pts {
                let got = eval_psi(&t, x, y, &h).map_err(|e| e.to_string())?;
                let want = psi_exact(x, y, h);
                for k in 0..2 {
                    worst = worst.max((got[k] - want[k]).norm());
                }
            }
        }
    }
    ensure(worst <= 1e-9, format!("max entry err {worst:.2e} on 41x41 grid, h = e1, e2 (<= 1e-9)"))
}

/// Fixed-parameter members of every example family.
fn example_family() -> Vec<(String, ParameterTriple)> {
    let mut v = Vec::new();
    for (a, m1, m2, s1, s2) in [
        (1.0, 1.0, 1.0, Sign::Plus, Sign::Plus),
        (1.0, 1.0, 1.0, Sign::Minus, Sign::Plus),
        (0.5, 0.6, 0.8, Sign::Plus, Sign::Minus),
        (2.0, 2.0, 0.0, Sign::Plus, Sign::Plus),
    ] {
        v.push((format!("scalar calA={a} m=({m1},{m2})"), make_example1(a, m1, m2, s1, s2).unwrap()));
    }
    v.push(("jordan n=2".into(), make_example2()));
    let skew = ComplexMatrix::from_rows(&[&[ZERO, ONE], &[-ONE, ZERO]]);
    v.push(("skew n=2".into(), make_example3(&skew, &[0.6, 0.2], &[-0.3, 0.5]).unwrap()));
    let skew3 = ComplexMatrix::from_real(3, 3, &[0.0, 0.4, -0.7, -0.4, 0.0, 0.2, 0.7, -0.2, 0.0]).unwrap();
    v.push(("skew n=3".into(), make_example3(&skew3, &[0.3, -0.2, 0.5], &[0.1, 0.4, -0.3]).unwrap()));
    v.push(("triangular n=2".into(), make_example4(&[1.0, 1.0], &[0.0, 1.0], None).unwrap()));
    v.push(("triangular n=3".into(), make_example4(&[0.5, -0.2, 0.3], &[0.1, 0.6, -0.4], None).unwrap()));
    v
}

fn random_triples() -> Vec<ParameterTriple> {
    let mut rng = seeded_rng(2024);
    (0..60)
        .map(|k| {
            let n = 1 + k % 6;
            if k % 2 == 0 {
                random_example3(&mut rng, n)
            } else {
                random_example4(&mut rng, n)
            }
            .unwrap()
        })
        .collect()
}

fn criterion_4(randoms: &[ParameterTriple]) -> Outcome {
    let mut explicit: f64 = 0.0;
    let xs = grid(-3.0, 3.0, 0.05);
    for (_, t) in example_family() {
        for &x in &xs {
            let st = eval_s(&t, x, MethodChoice::Auto).map_err(|e| e.to_string())?;
            explicit = explicit.max(st.identity_residual);
        }
    }
    let mut explicit_random: f64 = 0.0;
    let mut drift: f64 = 0.0;
    let seeds = [
        SeedPotential::Gaussian { amp: 1.0, center: 0.0, width: 1.0 },
        SeedPotential::Constant { c: 1.0 },
    ];
    for t in randoms {
        for &x in &xs {
            let st = eval_s(t, x, MethodChoice::Auto).map_err(|e| e.to_string())?;
            explicit_random = explicit_random.max(st.identity_residual);
        }
        for seed in &seeds {
            let traj = integrate_dressing(t, seed, (-2.0, 2.0), DressingOptions::new(1e-10)).map_err(|e| e.to_string())?;
            drift = drift.max(traj.max_identity_drift);
        }
    }
    ensure(
        explicit <= 1e-10 && explicit_random <= 1e-10 && drift <= 1e-8 && randoms.len() >= 50,
        format!(
            "explicit residual {explicit:.2e} (examples), {explicit_random:.2e} ({} random, n <= 6); ODE drift {drift:.2e} (<= 1e-8, gaussian + constant seeds, tol 1e-10)",
            randoms.len()
        ),
    )
}

fn criterion_5(randoms: &[ParameterTriple]) -> Outcome {
    let xs = grid(-10.0, 10.0, 0.05);
    let mut min_eig = f64::INFINITY;
    let mut halfplane = f64::INFINITY;
    for t in randoms {
        if t.s0() != &ComplexMatrix::identity(t.n()) {
            return Err("random triple without S(0) = I".into());
        }
        for &x in &xs {
            let st = eval_s(t, x, MethodChoice::Auto).map_err(|e| e.to_string())?;
            min_eig = min_eig.min(st.min_eig);
        }
        let scale = t.a().norm();
        for z in t.a_eigenvalues() {
            halfplane = halfplane.min(z.im / scale);
        }
    }
    ensure(
        min_eig > 0.0 && halfplane >= -1e-10,
        format!(
            "min eig S(x) {min_eig:.3e} (> 0) over {} points of [-10, 10]; min Im(lambda)/|A| {halfplane:.2e} (>= -1e-10)",
            xs.len()
        ),
    )
}

fn criterion_6() -> Outcome {
    let steps = [1e-2, 5e-3, 2.5e-3];
    let t = make_example2();
    let v = |x: f64| eval_potential(&t, x).map(|p| p.v_tilde);
    let bad_v = |x: f64| eval_potential(&t, x).map(|p| v_from_u(p.u_tilde + 0.01));
    let points = [(0.5, 0.3), (-1.2, 0.8), (1.5, -1.0), (0.0, 0.0)];
    let (mut lo, mut hi, mut res): (f64, f64, f64) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    let mut control_min = f64::INFINITY;
    let mut control_order_ok = false;
    for h in [[ONE, ZERO], [ZERO, ONE]] {
        let psi = |x: f64, y: f64| eval_psi(&t, x, y, &h);
        for &(x, y) in &points {
            let p = convergence_order(&psi, &v, (x, y), &steps).map_err(|e| e.to_string())?;
            (lo, hi) = (lo.min(p), hi.max(p));
            res = res.max(pde_residual(&psi, &v, x, y, 1e-3).map_err(|e| e.to_string())?);
            for s in [1e-2, 1e-3, 1e-4] {
                control_min = control_min.min(pde_residual(&psi, &bad_v, x, y, s).map_err(|e| e.to_string())?);
            }
            let pc = convergence_order(&psi, &bad_v, (x, y), &steps).map_err(|e| e.to_string())?;
            control_order_ok |= (pc - 2.0).abs() <= 0.2;
        }
    }
    // the ODE path under a Gaussian seed
    let seed = SeedPotential::Gaussian { amp: 1.0, center: 0.0, width: 1.0 };
    let traj = integrate_dressing(&t, &seed, (-1.5, 1.5), DressingOptions::new(1e-10)).map_err(|e| e.to_string())?;
    let gv = |x: f64| traj.transformed_potential(x).map(|p| p.v_tilde);
    let gpsi = |x: f64, y: f64| traj.psi(x, y, &[ONE, ZERO]);
    let gp = convergence_order(&gpsi, &gv, (0.5, 0.3), &steps).map_err(|e| e.to_string())?;
    (lo, hi) = (lo.min(gp), hi.max(gp));
    let gres = pde_residual(&gpsi, &gv, 0.5, 0.3, 1e-3).map_err(|e| e.to_string())?;
    res = res.max(gres);

    let control_fails = control_min > 1e-3 && !control_order_ok;
    ensure(
        lo >= 1.8 && hi <= 2.2 && res <= 1e-5 && control_fails,
        format!(
            "order in [{lo:.3}, {hi:.3}] (2 +/- 0.2), residual at step 1e-3 {res:.2e} (<= 1e-5); perturbed-u control plateau {control_min:.2e} (> 1e-3), control {}",
            if control_fails { "fails as required" } else { "did NOT fail" }
        ),
    )
}

/// Composite Simpson rule, independent of the library's quadrature.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn criterion_7() -> Outcome {
    let t = make_example1(1.0, 1.0, 1.0, Sign::Plus, Sign::Plus).map_err(|e| e.to_string())?;
    let (l1, l2) = (t.pi0()[(0, 0)], t.pi0()[(0, 1)]);
    // Π σ₃ Π* for n = 1, A = i: |e^{r}Λ₁|² − |e^{−r}Λ₂|²
    let integrand = |r: f64| (2.0 * r).exp() * l1.norm_sqr() - (-2.0 * r).exp() * l2.norm_sqr();
    let (mut s_err, mut oracle_err, mut u_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for x in grid(-3.0, 3.0, 0.05) {
        let st = eval_s(&t, x, MethodChoice::Auto).map_err(|e| e.to_string())?;
        let s = st.s[(0, 0)];
        let oracle = 1.0 + simpson(integrand, 0.0, x, 4000);
        let scale = (2.0 * x).cosh();
        s_err = s_err.max((s - scale).norm() / scale);
        oracle_err = oracle_err.max((s - oracle).norm() / scale);
        let u = potential_from_state(&st).map_err(|e| e.to_string())?.u_tilde;
        u_err = u_err.max((u - C64::from(-2.0 / scale)).norm());
    }
    ensure(
        s_err <= 1e-10 && oracle_err <= 1e-10 && u_err <= 1e-10,
        format!(
            "S vs cosh 2x {s_err:.2e}, S vs Simpson oracle {oracle_err:.2e}, u vs -2 sech 2x {u_err:.2e} (all <= 1e-10)"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (_, t) in example_family() {
        for x in grid(-3.0, 3.0, 0.25) {
            let (gap, methods) = method_cross_agreement(&t, x).map_err(|e| e.to_string())?;
            if methods.len() >= 2 {
                worst = worst.max(gap);
                compared += 1;
            }
        }
    }
    ensure(
        worst <= 1e-8 && compared > 0,
        format!("max pairwise relative gap {worst:.2e} over {compared} (example, x) pairs (<= 1e-8)"),
    )
}

/// Largest relative deviation of the zero-seed trajectory from the closed form.
fn reduction_gap(t: &ParameterTriple, tol: f64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    let traj = integrate_dressing(t, &SeedPotential::Zero, (-2.0, 2.0), DressingOptions::new(tol))
        .map_err(|e| e.to_string())?;
    for smp in traj.samples() {
        let st = eval_s(t, smp.x, MethodChoice::Auto).map_err(|e| e.to_string())?;
        worst = worst.max((&smp.s - &st.s).norm() / (1.0 + st.s.norm()));
        worst = worst.max((&smp.pi - &st.pi).norm() / (1.0 + st.pi.norm()));
    }
    let h: Vec<C64> = (0..t.n()).map(|k| C64::new(1.0, 0.5 * k as f64)).collect();
    for x in grid(-2.0, 2.0, 0.1) {
        let a = traj.transformed_potential(x).map_err(|e| e.to_string())?.u_tilde;
        let b = eval_potential(t, x).map_err(|e| e.to_string())?.u_tilde;
        worst = worst.max((a - b).norm() / (1.0 + b.norm()));
        let p = traj.psi(x, 0.3, &h).map_err(|e| e.to_string())?;
        let q = eval_psi(t, x, 0.3, &h).map_err(|e| e.to_string())?;
        for k in 0..2 {
            worst = worst.max((p[k] - q[k]).norm() / (1.0 + q[k].norm()));
        }
        let (pi, s) = traj.state_at(x).map_err(|e| e.to_string())?;
        if normalized_identity_residual(t, &pi, &s) > 1e-8 {
            return Err(format!("identity drift above 1e-8 at x = {x}"));
        }
    }
    Ok(worst)
}

fn criterion_9(randoms: &[ParameterTriple]) -> Outcome {
    let jordan = reduction_gap(&make_example2(), 1e-10)?;
    let examples: Vec<ParameterTriple> = example_family()
        .into_iter()
        .map(|(_, t)| t)
        .chain(randoms.iter().take(12).cloned())
        .collect();
    let mut all: f64 = 0.0;
    for t in &examples {
        all = all.max(reduction_gap(t, 1e-12)?);
    }
    ensure(
        jordan <= 1e-8 && all <= 1e-8,
        format!(
            "max rel deviation {jordan:.2e} (jordan n=2, tol 1e-10), {all:.2e} across {} triples (tol 1e-12); both <= 1e-8",
            examples.len()
        ),
    )
}

fn main() -> ExitCode {
    let randoms = random_triples();
    let results: Vec<(&str, Outcome)> = vec![
        ("1 closed-form potential", criterion_1()),
        ("2 determinant and inverse", criterion_2()),
        ("3 closed-form wavefunction", criterion_3()),
        ("4 operator identity conservation", criterion_4(&randoms)),
        ("5 positivity of S(x)", criterion_5(&randoms)),
        ("6 PDE residual convergence", criterion_6()),
        ("7 sech soliton", criterion_7()),
        ("8 method cross-agreement", criterion_8()),
        ("9 zero-seed reduction", criterion_9(&randoms)),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(d) => println!("PASS criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
