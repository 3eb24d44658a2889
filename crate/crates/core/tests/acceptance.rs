//! Acceptance suite. Each criterion prints one PASS/FAIL line; the test fails
//! if any criterion fails.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use pcgl::amalgam::{exhaustive_sweeps, random_sweeps};
use pcgl::exhaustion::{run_exhaustion, ExhaustionPlan};
use pcgl::field::norm2;
use pcgl::functionals::{phi, resolvent_phi, resolvent_psi, ProxConfig};
use pcgl::integrator::{simulate, Forcing, Scheme, SchemeConfig};
use pcgl::monitors::{
    check_dissipation, check_first_energy, check_smoothing, identity_suite, key_pairings, smoothing_metrics,
};
use pcgl::region::{find_witness, region_radius, ParamSet};
use pcgl::{Field64, Grid64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn identity_suite_1000() -> Outcome {
    let g = Grid64::new_2d([1.0, 1.0], [64, 64]).unwrap();
    let params = ParamSet { alpha: 0.5, beta: -0.5, p: 3.0, q: 4.0, ..ParamSet::new(2) };
    let start = Instant::now();
    let reports = identity_suite(&g, &params, 1.0, 1e-5, 1000, 2024, &ProxConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    outcome(
        failed.is_empty() && reports.len() == 10 && secs < 10.0,
        format!(
            "{} identities x 1000 fields on 64x64 (p = 3, q = 4, nu = 1e-5) in {secs:.2} s, failing: {failed:?}",
            reports.len()
        ),
    )
}

fn dense_neg_laplacian(g: &Grid64) -> DMatrix<f64> {
    let (nx, ny) = (g.nodes(0), g.nodes(1));
    let (wx, wy) = (1.0 / (g.h(0) * g.h(0)), 1.0 / (g.h(1) * g.h(1)));
    let mut m = DMatrix::zeros(g.len(), g.len());
    for ix in 0..nx {
        for iy in 0..ny {
            let i = g.index(ix, iy);
            m[(i, i)] = 2.0 * (wx + wy);
            if ix > 0 {
                m[(i, g.index(ix - 1, iy))] = -wx;
            }
            if ix + 1 < nx {
                m[(i, g.index(ix + 1, iy))] = -wx;
            }
            if iy > 0 {
                m[(i, g.index(ix, iy - 1))] = -wy;
            }
            if iy + 1 < ny {
                m[(i, g.index(ix, iy + 1))] = -wy;
            }
        }
    }
    m
}

fn resolvent_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let g = Grid64::new_2d([1.0, 1.0], [16, 16]).unwrap();

    let mut psi_residual: f64 = 0.0;
    for &q in &[2.0, 2.5, 3.0, 4.0, 6.0] {
        for &mu in &[0.01, 1.0, 100.0] {
            let u = Field64::random(&g, &mut rng, 1.0);
            let j = resolvent_psi(&u, mu, q);
            for (a, b) in j.values().iter().zip(u.values()) {
                let w = mu * norm2(*a).powf(q - 2.0);
                let r = [a[0] + w * a[0] - b[0], a[1] + w * a[1] - b[1]];
                psi_residual = psi_residual.max(norm2(r));
            }
        }
    }

    let g8 = Grid64::new_2d([1.0, 1.0], [8, 8]).unwrap();
    let u = Field64::random(&g8, &mut rng, 1.0);
    let nu = 0.05;
    let rep = resolvent_phi(&u, nu, 2.0, &ProxConfig { tol: 1e-13, ..ProxConfig::default() });
    let m = DMatrix::<f64>::identity(g8.len(), g8.len()) + dense_neg_laplacian(&g8) * nu;
    let lu = m.lu();
    let mut oracle_err: f64 = 0.0;
    for c in 0..2 {
        let rhs = DVector::from_iterator(g8.len(), u.values().iter().map(|v| v[c]));
        let x = lu.solve(&rhs).unwrap();
        for (k, v) in rep.output.values().iter().enumerate() {
            oracle_err = oracle_err.max((v[c] - x[k]).abs());
        }
    }

    let mut worst_psi: f64 = f64::NEG_INFINITY;
    let mut worst_phi: f64 = f64::NEG_INFINITY;
    let cfg = ProxConfig::default();
    for k in 0..100 {
        let (q, p, mu, nu) = ([2.0, 3.0, 4.0][k % 3], [1.5, 2.0, 3.0][k % 3], 0.5, 0.01);
        let u = Field64::random(&g, &mut rng, 1.0);
        let v = Field64::random(&g, &mut rng, 1.0);
        let d = (&u - &v).l2_norm();
        worst_psi = worst_psi.max((&resolvent_psi(&u, mu, q) - &resolvent_psi(&v, mu, q)).l2_norm() - d);
        let (a, b) = (resolvent_phi(&u, nu, p, &cfg), resolvent_phi(&v, nu, p, &cfg));
        let slack = 10.0 * (a.residual + b.residual);
        worst_phi = worst_phi.max((&a.output - &b.output).l2_norm() - d - slack);
    }
    outcome(
        psi_residual <= 1e-13 && oracle_err <= 1e-10 && worst_psi <= 0.0 && worst_phi <= 0.0,
        format!(
            "psi residual {psi_residual:.2e}, phi vs dense oracle {oracle_err:.2e}, \
             nonexpansive excess psi {worst_psi:.2e} phi {worst_phi:.2e}"
        ),
    )
}

fn angle_condition() -> Outcome {
    let g = Grid64::new_2d([1.0, 1.0], [16, 16]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for k in 0..500 {
        let u = Field64::random(&g, &mut rng, 2.0);
        let p = [1.5, 2.0, 3.0, 4.0][k % 4];
        let base = phi(&u, p);
        for &mu in &[0.1, 1.0, 10.0] {
            for &q in &[2.0, 3.0, 4.0] {
                worst = worst.max(phi(&resolvent_psi(&u, mu, q), p) - base);
                checks += 1;
            }
        }
    }
    outcome(worst <= 1e-10, format!("{checks} comparisons, max phi(J U) - phi(U) = {worst:.3e}"))
}

/// `A(cos θ, sin θ)` with Gaussian amplitude and the phase that makes the key
/// inequality sharp.
fn twisted_gaussian(g: &Grid64, q: f64) -> Field64 {
    let s2 = 0.12f64 * 0.12;
    Field64::from_fn(g, |x| {
        let r2 = (x[0] - 0.5).powi(2) + if g.dim() == 2 { (x[1] - 0.5).powi(2) } else { 0.0 };
        let a = (-r2 / (2.0 * s2)).exp();
        let theta = -(q - 1.0).sqrt() * r2 / (2.0 * s2);
        [a * theta.cos(), a * theta.sin()]
    })
}

fn key_inequality() -> Outcome {
    let q = 4.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for dim in [1usize, 2] {
        for p in [2.0, 3.0] {
            let params = ParamSet { p, q, ..ParamSet::new(dim) };
            let mut defects = Vec::new();
            let mut gaps = Vec::new();
            for n in [32usize, 64, 128] {
                let g = if dim == 1 {
                    Grid64::new_1d(1.0, n - 1).unwrap()
                } else {
                    Grid64::new_2d([1.0, 1.0], [n - 1, n - 1]).unwrap()
                };
                let k = key_pairings(&twisted_gaussian(&g, q), 0.0, &params).unwrap();
                defects.push(k.relative_defect());
                gaps.push((k.skew - k.bound).abs() / k.bound);
            }
            // a defect that is already zero cannot shrink further
            let defect_ok = defects.windows(2).all(|w| w[1] == 0.0 || w[0] / w[1] >= 1.8);
            let gap_ok = gaps.windows(2).all(|w| w[0] / w[1] >= 1.8);
            ok &= defect_ok && gap_ok;
            parts.push(format!(
                "N={dim} p={p}: defect {:.1e}/{:.1e}/{:.1e}, sharpness gap {:.2e}/{:.2e}/{:.2e}",
                defects[0], defects[1], defects[2], gaps[0], gaps[1], gaps[2]
            ));
        }
    }
    outcome(ok, parts.join("; "))
}

fn gaussian_swirl(g: &Grid64, w: f64) -> Field64 {
    Field64::from_fn(g, |x| {
        let r2 = (x[0] - 0.5).powi(2) + if g.dim() == 2 { (x[1] - 0.5).powi(2) } else { 0.0 };
        let a = (-r2 / w).exp();
        [a * (3.0 * x[0]).cos(), a * (3.0 * x[0]).sin()]
    })
}

fn dissipation() -> Outcome {
    let mut ok = true;
    let mut worst_budget: f64 = 0.0;
    let mut worst_step = f64::NEG_INFINITY;
    let mut runs = 0;
    for dim in [1usize, 2] {
        let g = if dim == 1 { Grid64::new_1d(1.0, 63).unwrap() } else { Grid64::new_2d([1.0, 1.0], [15, 15]).unwrap() };
        let u0 = gaussian_swirl(&g, 0.1);
        for p in [2.0, 3.0] {
            for q in [2.0, 4.0] {
                let params = ParamSet { alpha: 0.5, beta: 0.5, p, q, ..ParamSet::new(dim) };
                let cfg = SchemeConfig::new(Scheme::FullyImplicit, 2e-4, 200.0 * 2e-4);
                let traj = simulate(&u0, &cfg, &params, &Forcing::Zero).unwrap();
                let reports = check_dissipation(&traj.trace, &params, 10.0 * cfg.prox.tol, 0.02).unwrap();
                ok &= reports.iter().all(|r| r.passed) && traj.trace.rows.len() == 201;
                worst_step = worst_step.max(reports[0].lhs - reports[0].rhs);
                worst_budget = worst_budget.max((reports[1].lhs - reports[1].rhs).abs() / reports[1].rhs);
                runs += 1;
            }
        }
    }
    outcome(
        ok,
        format!("{runs} runs, max step increase {worst_step:.2e}, max budget error {:.2}%", 100.0 * worst_budget),
    )
}

fn gronwall() -> Outcome {
    let g = Grid64::new_1d(1.0, 31).unwrap();
    let u0 = gaussian_swirl(&g, 0.05);
    let bump = Field64::from_fn(&g, |x| [(-((x[0] - 0.3) / 0.1).powi(2)).exp(), 0.0]);
    let times: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
    let fields = times.iter().map(|t| bump.scale((2.0 * std::f64::consts::PI * t).sin() + 0.5)).collect();
    let forcing = Forcing::Sampled { times, fields };
    let mut ok = true;
    let mut ratios = Vec::new();
    for gamma in [-1.0, 0.0, 1.0] {
        let params = ParamSet { alpha: 0.5, beta: 0.5, gamma, p: 3.0, q: 4.0, ..ParamSet::new(1) };
        let cfg = SchemeConfig::new(Scheme::FullyImplicit, 1e-3, 1.0);
        let traj = simulate(&u0, &cfg, &params, &forcing).unwrap();
        let reports = check_first_energy(&traj.trace, &params).unwrap();
        let gr = &reports[0];
        ok &= gr.passed;
        ratios.push(format!("gamma={gamma}: sup ratio {:.3}", gr.lhs / gr.rhs));
    }
    outcome(ok, ratios.join(", "))
}

fn linear_oracle() -> Outcome {
    let g = Grid64::new_1d(1.0, 63).unwrap();
    let h = g.h(0);
    let mode = |x: [f64; 2]| (std::f64::consts::PI * x[0]).sin();
    let u0 = Field64::from_fn(&g, |x| [mode(x), 0.0]);
    let eig = 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let start = Instant::now();

    let params = ParamSet::new(1);
    let cfg = SchemeConfig::new(Scheme::ImexSplit, 1e-3, 1.0);
    let traj = simulate(&u0, &cfg, &params, &Forcing::Zero).unwrap();
    let n = cfg.steps() as i32;
    let want = u0.scale((1.0 + cfg.dt * (eig + 1.0)).powi(-n));
    let abs_plain = (&traj.final_state - &want).l2_norm();
    let rel_plain = abs_plain / want.l2_norm();

    let params = ParamSet { alpha: 0.3, beta: 0.2, ..ParamSet::new(1) };
    let cfg = SchemeConfig::new(Scheme::FullyImplicit, 1e-3, 1.0);
    let traj = simulate(&u0, &cfg, &params, &Forcing::Zero).unwrap();
    let (re, im) = (1.0 + cfg.dt * (eig + 1.0), cfg.dt * (0.3 * eig + 0.2));
    let modulus = (re * re + im * im).sqrt().powi(-n);
    let angle = -(n as f64) * im.atan2(re);
    let want = Field64::from_fn(&g, |x| [modulus * angle.cos() * mode(x), modulus * angle.sin() * mode(x)]);
    let abs_rot = (&traj.final_state - &want).l2_norm();
    let rel_rot = abs_rot / want.l2_norm();

    let secs = start.elapsed().as_secs_f64();
    outcome(
        abs_plain <= 1e-6 && abs_rot <= 1e-6 && secs < 5.0,
        format!(
            "L2 error {abs_plain:.2e} (real mode, relative {rel_plain:.2e}), \
             {abs_rot:.2e} (rotating mode, relative {rel_rot:.2e}), {secs:.2} s"
        ),
    )
}

fn region_draws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut disagreements, mut band, mut inside) = (0, 0, 0);
    for k in 0..10_000 {
        let lambda = 10f64.powf(rng.gen_range(-1.0..1.0));
        let kappa = 10f64.powf(rng.gen_range(-1.0..1.0));
        let alpha = rng.gen_range(-10.0..10.0);
        let beta = rng.gen_range(-10.0..10.0);
        let q = if k % 20 == 0 { 2.0 } else { rng.gen_range(2.0..8.0) };
        let params = ParamSet { lambda, kappa, alpha, beta, q, ..ParamSet::new(1) };
        let (x, y) = (alpha / lambda, beta / kappa);
        let expected = if q == 2.0 {
            true
        } else {
            let r = 2.0 * (q - 1.0).sqrt() / (q - 2.0);
            let d = 1.0 + r * (x.abs() + y.abs()) - x.abs() * y.abs();
            if x * y < 0.0 && d.abs() <= 1e-12 * (1.0 + x.abs() * y.abs()) {
                band += 1;
                continue;
            }
            x * y >= 0.0 || d > 0.0
        };
        assert_eq!(region_radius(q).unwrap().is_infinite(), q == 2.0);
        let found = find_witness(&params).unwrap().witness.is_some();
        inside += usize::from(expected);
        if found != expected {
            disagreements += 1;
        }
    }
    outcome(
        disagreements == 0,
        format!("10000 draws, {inside} inside, {band} in boundary band, {disagreements} disagreements"),
    )
}

fn smoothing() -> Outcome {
    let params = ParamSet { alpha: 0.5, beta: 0.5, p: 2.0, q: 4.0, ..ParamSet::new(1) };
    let run = |n: usize| {
        let g = Grid64::new_1d(1.0, n - 1).unwrap();
        let h = g.h(0);
        let dt = h * h / 2.0;
        let steps = (0.05 / dt).round();
        let u0 = Field64::step_noise(&g, 7, 1.0, 4);
        let cfg = SchemeConfig::new(Scheme::ImexSplit, dt, steps * dt);
        simulate(&u0, &cfg, &params, &Forcing::Zero).unwrap().trace
    };
    let coarse = run(32);
    let fine = run(64);
    let reports = check_smoothing(&coarse, &fine).unwrap();
    let (a, b) = (smoothing_metrics(&coarse), smoothing_metrics(&fine));
    let finite = [a.t_dudt, b.t_dudt].iter().all(|x| x.is_finite());
    outcome(
        finite && reports.iter().all(|r| r.passed),
        format!(
            "ratios t*phi {:.3}, t*psi {:.3}, int t|dU/dt|^2 {:.3} (h = 1/32 vs 1/64)",
            reports[0].lhs, reports[1].lhs, reports[2].lhs
        ),
    )
}

fn exhaustion() -> Outcome {
    let parent = Grid64::new_1d(16.0, 127).unwrap();
    let u0 = Field64::from_fn(&parent, |x| {
        let r2 = (x[0] - 8.0).powi(2);
        let a = if r2 < 1.0 { (-r2 / 0.25).exp() * (1.0 - r2).powi(2) } else { 0.0 };
        [a, 0.5 * a]
    });
    let plan = ExhaustionPlan::concentric(parent, &[vec![4.0], vec![8.0], vec![16.0]], u0).unwrap();
    let params = ParamSet { alpha: 0.5, beta: 0.5, p: 2.0, q: 4.0, ..ParamSet::new(1) };
    let cfg = SchemeConfig::new(Scheme::ImexSplit, 0.01, 1.0);
    let rep = run_exhaustion(&plan, &cfg, &params, &Forcing::Zero).unwrap();
    let energies = rep.first_energy.len() == 3 && rep.first_energy.iter().all(|r| r.passed);
    let d: Vec<String> = rep.rows.iter().map(|r| format!("{:.3e}", r.sup_diff)).collect();
    outcome(
        rep.failure.is_none() && rep.rows.len() == 2 && rep.strictly_decreasing() && energies,
        format!("d_k = [{}], shared C1 = {:.4}, first energy ok for all children: {energies}", d.join(", "), rep.c1),
    )
}

fn sweeps() -> Outcome {
    let start = Instant::now();
    let mut all = random_sweeps(100_000, 77).unwrap();
    all.extend(exhaustive_sweeps().unwrap());
    let secs = start.elapsed().as_secs_f64();
    let hard_failures: usize = all.iter().filter(|s| s.hard).map(|s| s.failures).sum();
    let reported: Vec<String> = all
        .iter()
        .filter(|s| !s.hard && s.failures > 0)
        .map(|s| format!("{} p={} ({} of {})", s.check, s.p, s.failures, s.samples))
        .collect();
    let random_ok = all.iter().filter(|s| !s.check.starts_with("exhaustive")).all(|s| s.samples >= 100_000);
    outcome(
        hard_failures == 0 && random_ok && secs < 60.0,
        format!(
            "{} sweeps, {hard_failures} failures in asserted checks, {secs:.1} s; reported-only readings with failures: {}",
            all.len(),
            if reported.is_empty() { "none".into() } else { reported.join(", ") }
        ),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("identity suite", identity_suite_1000),
        ("resolvent correctness", resolvent_correctness),
        ("angle condition", angle_condition),
        ("key inequality", key_inequality),
        ("dissipation", dissipation),
        ("gronwall bound", gronwall),
        ("linear oracle", linear_oracle),
        ("region and witness", region_draws),
        ("smoothing", smoothing),
        ("exhaustion", exhaustion),
        ("inequality sweeps", sweeps),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        println!("criterion {:>2} [{}] {name}: {}", i + 1, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
