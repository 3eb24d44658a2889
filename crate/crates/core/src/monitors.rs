//! Quantitative checks of the identities, inequalities and energy estimates
//! on discrete fields and traces.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PcglError, Result};
use crate::field::{dot2, grad, norm2, rotate, Field};
use crate::functionals::{dphi_with, dpsi, resolvent_psi, yosida_phi, yosida_psi, ProxConfig};
use crate::grid::Grid;
use crate::integrator::EnergyTrace;
use crate::region::{strength_constant, ParamSet, RegionVerdict};
use crate::scalar::{compensated_sum, Real};

/// Outcome of a single check. `passed` holds exactly when `margin ≥ −tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport<T> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
    pub passed: bool,
    pub tolerance: T,
}

impl<T: Real> CheckReport<T> {
    /// `lhs ≤ rhs` up to `tolerance`.
    pub fn inequality(name: impl Into<String>, lhs: T, rhs: T, tolerance: T) -> Self {
        let margin = rhs - lhs;
        Self { name: name.into(), lhs, rhs, margin, passed: margin >= -tolerance, tolerance }
    }

    /// `lhs = rhs` up to `tolerance`; the margin is `−|lhs − rhs|`.
    pub fn identity(name: impl Into<String>, lhs: T, rhs: T, tolerance: T) -> Self {
        let margin = -(lhs - rhs).abs();
        Self { name: name.into(), lhs, rhs, margin, passed: margin >= -tolerance, tolerance }
    }

    /// The report closest to failing, `None` for an empty list.
    pub fn worst(reports: impl IntoIterator<Item = Self>) -> Option<Self> {
        reports.into_iter().fold(None, |acc: Option<Self>, r| match acc {
            Some(a) if a.slack() <= r.slack() => Some(a),
            _ => Some(r),
        })
    }

    fn slack(&self) -> T {
        if self.margin.is_nan() {
            T::neg_infinity()
        } else {
            self.margin + self.tolerance
        }
    }

    pub fn csv_header() -> &'static str {
        "name,lhs,rhs,margin,passed"
    }
}

/// `|(V·G)|² + |(IV·G)|² = |V|²|G|²` for `V ∈ R²` and a `2N` vector `G`
/// laid out as `[∇v1, ∇v2]`.
pub fn check_pointwise_identity_46<T: Real>(v: [T; 2], g: &[T]) -> CheckReport<T> {
    let n = g.len() / 2;
    let iv = rotate(v);
    let mut lhs = T::zero();
    for a in 0..n {
        let c = [g[a], g[n + a]];
        let x = dot2(v, c);
        let y = dot2(iv, c);
        lhs += x * x + y * y;
    }
    let gsq: T = g.iter().map(|&x| x * x).sum();
    let rhs = dot2(v, v) * gsq;
    CheckReport::identity("pointwise_identity", lhs, rhs, T::lit(1e-12) * rhs.max(T::min_positive_value()))
}

/// Nodewise `(U·V)² + (U·IV)² = |U|²|V|²`, worst node.
pub fn check_pythagoras<T: Real>(u: &Field<T>, v: &Field<T>) -> CheckReport<T> {
    let reports = u.values().iter().zip(v.values()).map(|(&a, &b)| {
        let x = dot2(a, b);
        let y = dot2(a, rotate(b));
        let rhs = dot2(a, a) * dot2(b, b);
        CheckReport::identity("pythagoras", x * x + y * y, rhs, T::lit(1e-12) * rhs)
    });
    CheckReport::worst(reports).unwrap_or_else(|| CheckReport::identity("pythagoras", T::zero(), T::zero(), T::zero()))
}

/// `(U, V)² + (U, IV)² ≤ |U|²|V|²`.
pub fn check_bessel<T: Real>(u: &Field<T>, v: &Field<T>) -> CheckReport<T> {
    let a = u.dot(v);
    let b = u.dot(&v.rotate_i());
    let rhs = u.l2_norm_sq() * v.l2_norm_sq();
    CheckReport::inequality("bessel", a * a + b * b, rhs, T::lit(1e-12) * rhs)
}

/// `grad(IU) = I grad(U)` cellwise.
pub fn check_rotation_commutes<T: Real>(u: &Field<T>) -> CheckReport<T> {
    let a = grad(&u.rotate_i());
    let b = grad(u).rotate_i();
    let diff = a.data().iter().zip(b.data()).map(|(&x, &y)| (x - y).abs()).fold(T::zero(), T::max);
    let scale = b.data().iter().map(|x| x.abs()).fold(T::zero(), T::max);
    CheckReport::identity("rotation_commutes", diff, T::zero(), T::lit(1e-12) * scale)
}

/// `(U − J_μ U)/μ = ∂ψ(J_μ U)` in L².
pub fn check_yosida_identity<T: Real>(u: &Field<T>, mu: T, q: T) -> CheckReport<T> {
    let j = resolvent_psi(u, mu, q);
    let a = yosida_psi(u, mu, q);
    let b = dpsi(&j, q);
    let d = (&a - &b).l2_norm();
    CheckReport::identity("yosida_identity", d, T::zero(), T::lit(1e-10) * a.l2_norm().max(b.l2_norm()))
}

fn orthogonality<T: Real>(name: &str, a: &Field<T>, b: &Field<T>, rel: T, extra: T) -> CheckReport<T> {
    let pair = a.dot(&b.rotate_i());
    let scale = a.l2_norm() * b.l2_norm();
    CheckReport::identity(name, pair, T::zero(), rel * scale + extra)
}

/// The five orthogonality relations `(∂φ(U), IU)`, `(∂ψ(U), IU)`,
/// `(∂φ_ν(U), IU)`, `(∂ψ_μ(U), IU)` and `(∂ψ(U), I∂ψ_μ(U))`.
pub fn check_orthogonality_suite<T: Real>(
    u: &Field<T>,
    mu: T,
    nu: T,
    params: &ParamSet<T>,
    cfg: &ProxConfig<T>,
) -> Result<Vec<CheckReport<T>>> {
    let rel = T::lit(1e-10);
    let dp = dphi_with(u, params.p, cfg.sigma_reg);
    let ds = dpsi(u, params.q);
    let yphi = yosida_phi(u, nu, params.p, cfg)?;
    let ypsi = yosida_psi(u, mu, params.q);
    // the resolvent is only accurate to cfg.tol, which enters (∂φ_ν, IU) linearly
    let solver_slack = yphi.l2_norm() * cfg.tol.max(T::lit(1e-12) * u.l2_norm()) * T::lit(10.0);
    Ok(vec![
        orthogonality("orth_dphi_IU", &dp, u, rel, T::zero()),
        orthogonality("orth_dpsi_IU", &ds, u, rel, T::zero()),
        orthogonality("orth_yosida_phi_IU", &yphi, u, rel, solver_slack),
        orthogonality("orth_yosida_psi_IU", &ypsi, u, rel, T::zero()),
        orthogonality("orth_dpsi_I_yosida_psi", &ds, &ypsi, T::lit(1e-12), T::zero()),
    ])
}

/// Raw pairings behind the key inequality.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyPairings<T> {
    /// `|(∂φ(U), I Y)|`
    pub skew: T,
    /// `c_q (∂φ(U), Y)`
    pub bound: T,
    /// `c_q (∂φ(U), ∂ψ(U))`
    pub unregularized_bound: T,
    /// `2 c_q h |∂φ(U)| |∂ψ(U)|`
    pub tol_h: T,
}

impl<T: Real> KeyPairings<T> {
    /// `max(0, skew − bound) / bound`, 0 when the bound vanishes.
    pub fn relative_defect(&self) -> T {
        let d = (self.skew - self.bound).max(T::zero());
        if d == T::zero() {
            T::zero()
        } else {
            d / self.bound
        }
    }
}

/// Evaluates the pairings with `Y = ∂ψ_μ(U)` for `μ > 0` and `Y = ∂ψ(U)` otherwise.
pub fn key_pairings<T: Real>(u: &Field<T>, mu: T, params: &ParamSet<T>) -> Result<KeyPairings<T>> {
    let cq = strength_constant(params.q)?;
    let dp = dphi_with(u, params.p, T::lit(1e-10));
    let ds = dpsi(u, params.q);
    let y = if mu > T::zero() { yosida_psi(u, mu, params.q) } else { ds.clone() };
    Ok(KeyPairings {
        skew: dp.dot(&y.rotate_i()).abs(),
        bound: cq * dp.dot(&y),
        unregularized_bound: cq * dp.dot(&ds),
        tol_h: T::lit(2.0) * cq * u.grid().h_min() * dp.l2_norm() * ds.l2_norm(),
    })
}

/// `|(∂φ, IY)| ≤ c_q(∂φ, Y)` and the chain `c_q(∂φ, ∂ψ_μ) ≤ c_q(∂φ, ∂ψ)`,
/// both with the first-order discretization allowance `tol_h`.
pub fn check_key_inequality<T: Real>(u: &Field<T>, mu: T, params: &ParamSet<T>) -> Result<Vec<CheckReport<T>>> {
    if params.q == T::lit(2.0) {
        return Ok(vec![
            CheckReport::inequality("key_inequality", T::zero(), T::zero(), T::zero()),
            CheckReport::inequality("key_chain", T::zero(), T::zero(), T::zero()),
        ]);
    }
    let k = key_pairings(u, mu, params)?;
    let round = T::lit(1e-12) * k.unregularized_bound.abs();
    Ok(vec![
        CheckReport::inequality("key_inequality", k.skew, k.bound, k.tol_h + round),
        CheckReport::inequality("key_chain", k.bound, k.unregularized_bound, k.tol_h + round),
    ])
}

/// Nodewise `|J_μ U| ≤ |U|` and cellwise `|∇J_μ U| ≤ |∇U|`.
pub fn check_resolvent_comparisons<T: Real>(u: &Field<T>, mu: T, q: T) -> Vec<CheckReport<T>> {
    let j = resolvent_psi(u, mu, q);
    let nodal = u.values().iter().zip(j.values()).map(|(&a, &b)| norm2(b) - norm2(a)).fold(T::neg_infinity(), T::max);
    let gu = grad(u).magnitudes();
    let gj = grad(&j).magnitudes();
    let scale = gu.iter().copied().fold(T::zero(), T::max);
    let cell = gu.iter().zip(&gj).map(|(&a, &b)| b - a).fold(T::neg_infinity(), T::max);
    vec![
        CheckReport::inequality("resolvent_magnitude", nodal, T::zero(), T::zero()),
        CheckReport::inequality("resolvent_gradient", cell, T::zero(), T::lit(1e-12) * scale),
    ]
}

/// Constants of the first energy estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FirstEnergyBound<T> {
    /// `e^{(2γ₊+1)T}(|U₀|² + ∫|F|²)`
    pub gronwall: T,
    /// `C₁ = G(T) + E (1/(pλ) + 1/(qκ))`
    pub c1: T,
}

/// `G(T)` and `C₁` from `|U₀|²`, `∫₀ᵀ|F|²` and the parameters.
pub fn first_energy_constant<T: Real>(u0_sq: T, forcing_int: T, t_end: T, params: &ParamSet<T>) -> FirstEnergyBound<T> {
    let half = T::lit(0.5);
    let gp = params.gamma_plus();
    let g = ((T::lit(2.0) * gp + T::one()) * t_end).exp() * (u0_sq + forcing_int);
    let e = half * u0_sq + (gp + half) * t_end * g + half * forcing_int;
    let c1 = g + e * (T::one() / (params.p * params.lambda) + T::one() / (params.q * params.kappa));
    FirstEnergyBound { gronwall: g, c1 }
}

fn require_trace<T: Real>(trace: &EnergyTrace<T>) -> Result<()> {
    if trace.len() < 2 {
        return Err(PcglError::Domain("energy checks need a trace with at least one step".into()));
    }
    Ok(())
}

const ENERGY_SLACK: f64 = 0.05;

/// Gronwall bound `|U(t)|² ≤ e^{(2γ₊+1)t}(|U₀|² + ∫₀ᵗ|F|²)` at every trace row
/// and `sup|U|² + ∫φ + ∫ψ ≤ C₁`, both with 5% slack.
pub fn check_first_energy<T: Real>(trace: &EnergyTrace<T>, params: &ParamSet<T>) -> Result<Vec<CheckReport<T>>> {
    require_trace(trace)?;
    let slack = T::lit(ENERGY_SLACK);
    let u0 = trace.rows[0].l2sq;
    let mut fint = T::zero();
    let mut worst: Option<CheckReport<T>> = None;
    for row in &trace.rows {
        fint += trace.dt * row.forcing_sq;
        let g = first_energy_constant(u0, fint, row.t, params).gronwall;
        let r = CheckReport::inequality("gronwall", row.l2sq, g, slack * g);
        worst = CheckReport::worst(worst.into_iter().chain(std::iter::once(r)));
    }
    let bound = first_energy_constant(u0, fint, trace.final_time(), params);
    let lhs = trace.sup(|r| r.l2sq) + trace.integrate(|r| r.phi) + trace.integrate(|r| r.psi);
    Ok(vec![worst.expect("nonempty trace"), CheckReport::inequality("first_energy", lhs, bound.c1, slack * bound.c1)])
}

/// Step-wise `|U^{n+1}| ≤ |U^n| + step_tol` and the integrated budget
/// `½|U₀|² − ½|U(T)|² ≈ ∫(pλφ + qκψ)` within `budget_rel`. The integral uses
/// the right-endpoint rule, which matches the implicit scheme. Only meaningful
/// for unforced runs with `γ = 0`.
pub fn check_dissipation<T: Real>(
    trace: &EnergyTrace<T>,
    params: &ParamSet<T>,
    step_tol: T,
    budget_rel: T,
) -> Result<Vec<CheckReport<T>>> {
    require_trace(trace)?;
    let steps = trace.rows.windows(2).map(|w| {
        let (a, b) = (w[0].l2sq.sqrt(), w[1].l2sq.sqrt());
        CheckReport::inequality("dissipation_step", b, a, step_tol)
    });
    let worst = CheckReport::worst(steps).expect("at least one step");
    let integral = compensated_sum(
        trace
            .rows
            .iter()
            .skip(1)
            .map(|r| trace.dt * (params.p * params.lambda * r.phi + params.q * params.kappa * r.psi)),
    );
    let released = T::lit(0.5) * (trace.rows[0].l2sq - trace.rows.last().expect("nonempty").l2sq);
    Ok(vec![worst, CheckReport::identity("dissipation_budget", integral, released, budget_rel * released.abs())])
}

/// Second energy estimate, asserted only with a witness `(δ, ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondEnergyBound<T> {
    pub phi_sup: T,
    pub psi_sup: T,
    pub dphi_int: T,
    pub dpsi_int: T,
    pub dudt_int: T,
}

pub fn second_energy_constant<T: Real>(
    trace: &EnergyTrace<T>,
    params: &ParamSet<T>,
    verdict: &RegionVerdict<T>,
) -> Result<SecondEnergyBound<T>> {
    let w = verdict.witness.ok_or_else(|| PcglError::NotClaimed("parameters lie outside the CGL region".into()))?;
    require_trace(trace)?;
    let (d2, eps) = (w.delta * w.delta, w.epsilon);
    let two = T::lit(2.0);
    let t_end = trace.final_time();
    let fint = compensated_sum(trace.rows.iter().map(|r| trace.dt * r.forcing_sq));
    let e0 = d2 * trace.rows[0].phi + trace.rows[0].psi;
    let m = params.p.max(params.q);
    let gp = params.gamma_plus();
    let forced = (T::one() + d2) / (two * eps) * fint;
    let e_bound = (gp * m * t_end).exp() * (e0 + forced);
    let dint = e0 + gp * m * t_end * e_bound + forced;
    let phi_sup = e_bound / d2;
    let psi_sup = e_bound;
    let dphi_int = two * dint / (eps * d2);
    let dpsi_int = two * dint / eps;
    let g = first_energy_constant(trace.rows[0].l2sq, fint, t_end, params).gronwall;
    let sq = |x: T| x * x;
    let dudt_int = T::lit(4.0)
        * (fint
            + (sq(params.lambda) + sq(params.alpha)) * dphi_int
            + (sq(params.kappa) + sq(params.beta)) * dpsi_int
            + sq(params.gamma) * t_end * g);
    Ok(SecondEnergyBound { phi_sup, psi_sup, dphi_int, dpsi_int, dudt_int })
}

/// `sup φ`, `sup ψ`, `∫|∂φ|²`, `∫|∂ψ|²` and `∫|dU/dt|²` against the bounds of
/// the second energy estimate, with 5% slack. Returns
/// [`PcglError::NotClaimed`] when the verdict carries no witness.
pub fn check_second_energy<T: Real>(
    trace: &EnergyTrace<T>,
    params: &ParamSet<T>,
    verdict: &RegionVerdict<T>,
) -> Result<Vec<CheckReport<T>>> {
    let b = second_energy_constant(trace, params, verdict)?;
    let s = T::lit(ENERGY_SLACK);
    let ineq = |name: &str, lhs: T, rhs: T| CheckReport::inequality(name, lhs, rhs, s * rhs);
    Ok(vec![
        ineq("second_energy_phi", trace.sup(|r| r.phi), b.phi_sup),
        ineq("second_energy_psi", trace.sup(|r| r.psi), b.psi_sup),
        ineq("second_energy_dphi", trace.integrate(|r| r.dphi_sq), b.dphi_int),
        ineq("second_energy_dpsi", trace.integrate(|r| r.dpsi_sq), b.dpsi_int),
        ineq("second_energy_dudt", trace.integrate(|r| r.dudt_sq), b.dudt_int),
    ])
}

/// Weighted quantities controlled by the smoothing effect.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingMetrics<T> {
    /// `sup_t t φ(U(t))`
    pub t_phi: T,
    /// `sup_t t ψ(U(t))`
    pub t_psi: T,
    /// `∫ t |ΔU/Δt|²`
    pub t_dudt: T,
}

pub fn smoothing_metrics<T: Real>(trace: &EnergyTrace<T>) -> SmoothingMetrics<T> {
    SmoothingMetrics {
        t_phi: trace.sup(|r| r.t * r.phi),
        t_psi: trace.sup(|r| r.t * r.psi),
        t_dudt: trace.integrate(|r| r.t * r.dudt_sq),
    }
}

fn stability(name: &str, a: T64, b: T64, factor: T64) -> CheckReport<T64> {
    let ratio = if a == 0.0 && b == 0.0 { 1.0 } else { (a / b).max(b / a) };
    CheckReport::inequality(name, ratio, factor, 0.0)
}

type T64 = f64;

/// Compares the smoothing metrics of a run with those of its refinement:
/// `sup t φ` and `sup t ψ` within a factor 1.2, `∫ t|dU/dt|²` within 1.5.
pub fn check_smoothing<T: Real>(coarse: &EnergyTrace<T>, fine: &EnergyTrace<T>) -> Result<Vec<CheckReport<T64>>> {
    require_trace(coarse)?;
    require_trace(fine)?;
    let a = smoothing_metrics(coarse);
    let b = smoothing_metrics(fine);
    let fin = [a.t_phi, a.t_psi, a.t_dudt, b.t_phi, b.t_psi, b.t_dudt];
    if fin.iter().any(|x| !x.is_finite()) {
        return Err(PcglError::Domain("smoothing metrics are not finite".into()));
    }
    Ok(vec![
        stability("smoothing_t_phi", a.t_phi.as_f64(), b.t_phi.as_f64(), 1.2),
        stability("smoothing_t_psi", a.t_psi.as_f64(), b.t_psi.as_f64(), 1.2),
        stability("smoothing_t_dudt", a.t_dudt.as_f64(), b.t_dudt.as_f64(), 1.5),
    ])
}

/// Runs every field-level identity on `samples` random fields drawn from
/// `seed` and returns the worst report per identity.
pub fn identity_suite<T: Real>(
    grid: &Grid<T>,
    params: &ParamSet<T>,
    mu: T,
    nu: T,
    samples: usize,
    seed: u64,
    cfg: &ProxConfig<T>,
) -> Result<Vec<CheckReport<T>>> {
    let per_sample: Vec<Vec<CheckReport<T>>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64));
            let u = Field::random(grid, &mut rng, T::one());
            let v = Field::random(grid, &mut rng, T::one());
            let mut out = check_orthogonality_suite(&u, mu, nu, params, cfg)?;
            out.push(check_yosida_identity(&u, mu, params.q));
            out.push(check_rotation_commutes(&u));
            out.push(check_pythagoras(&u, &v));
            out.push(check_bessel(&u, &v));
            let g = grad(&u);
            let c = k % g.cell_count();
            out.push(check_pointwise_identity_46(u.values()[k % u.len()], g.cell(c)));
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let width = per_sample.first().map_or(0, |r| r.len());
    Ok((0..width).filter_map(|i| CheckReport::worst(per_sample.iter().map(|r| r[i].clone()))).collect())
}
