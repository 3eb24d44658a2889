//! The energies `φ(U) = (1/p)∫|∇U|^p` and `ψ(U) = (1/q)∫|U|^q`, their
//! subdifferentials, resolvents, Yosida approximations and the Moreau
//! envelope of `ψ`.

use crate::error::{PcglError, Result};
use crate::field::{div, div_weighted, grad, norm2, Field, GradField};
use crate::region::ParamSet;
use crate::scalar::{compensated_sum, Real};
use crate::solver::{proximal, ProxProblem};

/// Inner solver settings shared by every proximal computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxConfig<T> {
    /// Absolute residual target; the effective target is `max(tol, 1e-12 |U|)`.
    pub tol: T,
    pub max_iter: usize,
    /// Relative size of the smoothing radius used for `p < 2` at flat cells.
    pub sigma_reg: T,
}

impl<T: Real> Default for ProxConfig<T> {
    fn default() -> Self {
        Self { tol: T::lit(1e-10), max_iter: 5000, sigma_reg: T::lit(1e-10) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyPair<T> {
    pub phi: T,
    pub psi: T,
}

pub fn energies<T: Real>(u: &Field<T>, p: T, q: T) -> EnergyPair<T> {
    EnergyPair { phi: phi(u, p), psi: psi(u, q) }
}

/// Outcome of an iterative resolvent solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolventReport<T> {
    /// Best iterate found.
    pub output: Field<T>,
    pub iterations: usize,
    /// `|V + ν ∂(...)V − U|` at `output`.
    pub residual: T,
    pub mu_or_nu: T,
    pub converged: bool,
}

impl<T: Real> ResolventReport<T> {
    pub fn into_result(self, what: &'static str) -> Result<Field<T>> {
        if self.converged {
            Ok(self.output)
        } else {
            Err(PcglError::NotConverged { what, iterations: self.iterations, residual: self.residual.as_f64() })
        }
    }
}

pub fn phi<T: Real>(u: &Field<T>, p: T) -> T {
    phi_of_grad(&grad(u), p)
}

pub(crate) fn phi_of_grad<T: Real>(g: &GradField<T>, p: T) -> T {
    let s = compensated_sum(g.magnitudes().into_iter().map(|m| m.pow_nonneg(p)));
    s * g.grid().cell_volume() / p
}

pub fn psi<T: Real>(u: &Field<T>, q: T) -> T {
    let s = compensated_sum(u.values().iter().map(|&v| norm2(v).pow_nonneg(q)));
    s * u.grid().cell_volume() / q
}

/// Smoothing radius `σ = sigma_reg · max|U| / h_min`.
pub(crate) fn smoothing_radius<T: Real>(u: &Field<T>, sigma_reg: T) -> T {
    sigma_reg * u.max_magnitude() / u.grid().h_min()
}

/// Cell weights `|∇U|^{p−2}`, replaced by `(|∇U|² + σ²)^{(p−2)/2}` where
/// `p < 2` and `|∇U| < σ`.
pub(crate) fn phi_weights<T: Real>(g: &GradField<T>, p: T, sigma: T) -> Vec<T> {
    let mut w = Vec::new();
    phi_weights_into(g.data(), g.width(), p, sigma, &mut w);
    w
}

pub(crate) fn phi_weights_into<T: Real>(data: &[T], width: usize, p: T, sigma: T, out: &mut Vec<T>) {
    let two = T::lit(2.0);
    let e = p - two;
    let half_e = e / two;
    out.clear();
    out.extend(data.chunks_exact(width).map(|c| {
        let m2 = c.iter().fold(T::zero(), |acc, &x| acc + x * x);
        if e == T::zero() {
            T::one()
        } else if e == T::one() {
            m2.sqrt()
        } else if p > two {
            m2.pow_nonneg(half_e)
        } else if m2 < sigma * sigma {
            (m2 + sigma * sigma).pow_nonneg(half_e)
        } else if m2 == T::zero() {
            T::zero()
        } else {
            m2.pow_nonneg(half_e)
        }
    }));
}

/// `div(w ∇V)` without the shape check, for callers that built `w` from `g`.
pub(crate) fn div_weighted_for_solver<T: Real>(g: &GradField<T>, w: &[T]) -> Field<T> {
    div_weighted(g, w).expect("weights sized from the same gradient")
}

pub(crate) fn dphi_sigma<T: Real>(u: &Field<T>, p: T, sigma: T) -> Field<T> {
    let g = grad(u);
    if p == T::lit(2.0) {
        return -&div(&g);
    }
    let w = phi_weights(&g, p, sigma);
    -&div_weighted_for_solver(&g, &w)
}

/// `∂φ(U) = −div(|∇U|^{p−2} ∇U)`, the exact gradient of the discrete `φ`.
pub fn dphi<T: Real>(u: &Field<T>, p: T) -> Field<T> {
    dphi_with(u, p, T::lit(1e-10))
}

pub fn dphi_with<T: Real>(u: &Field<T>, p: T, sigma_reg: T) -> Field<T> {
    let sigma = if p < T::lit(2.0) { smoothing_radius(u, sigma_reg) } else { T::zero() };
    dphi_sigma(u, p, sigma)
}

/// `∂ψ(U) = |U|^{q−2} U` nodewise.
pub fn dpsi<T: Real>(u: &Field<T>, q: T) -> Field<T> {
    let e = q - T::lit(2.0);
    if e == T::zero() {
        return u.clone();
    }
    u.map(|v| {
        let w = norm2(v).pow_nonneg(e);
        [w * v[0], w * v[1]]
    })
}

/// Positive root of `r + μ r^{q−1} = s`.
pub(crate) fn psi_radius<T: Real>(s: T, mu: T, q: T) -> T {
    if s == T::zero() {
        return T::zero();
    }
    let two = T::lit(2.0);
    if q == two {
        return s / (T::one() + mu);
    }
    if q == T::lit(3.0) {
        return two * s / (T::one() + (T::one() + T::lit(4.0) * mu * s).sqrt());
    }
    let e = q - T::one();
    // the left side is convex and increasing in r, so Newton started above
    // the root decreases monotonically onto it
    let ratio = s / mu;
    let root = if e == T::lit(3.0) { ratio.cbrt() } else { ratio.pow_nonneg(T::one() / e) };
    let mut r = s.min(root);
    for _ in 0..200 {
        let pow = r.pow_nonneg(e - T::one());
        let f = r + mu * pow * r - s;
        if f <= T::zero() {
            return r;
        }
        let next = r - f / (T::one() + mu * e * pow);
        if !(next < r) || next <= T::zero() {
            return r;
        }
        if r - next <= T::lit(4.0) * T::epsilon() * r {
            return next;
        }
        r = next;
    }
    r
}

/// `J_μ U = (1 + μ∂ψ)^{−1} U`, solved nodewise along the direction of `U`.
pub fn resolvent_psi<T: Real>(u: &Field<T>, mu: T, q: T) -> Field<T> {
    u.map(|v| {
        let s = norm2(v);
        if s == T::zero() {
            return [T::zero(); 2];
        }
        let k = psi_radius(s, mu, q) / s;
        [k * v[0], k * v[1]]
    })
}

/// `∂ψ_μ(U) = (U − J_μ U)/μ`.
pub fn yosida_psi<T: Real>(u: &Field<T>, mu: T, q: T) -> Field<T> {
    (u - &resolvent_psi(u, mu, q)).scale(T::one() / mu)
}

/// `ψ_μ(U) = ψ(J_μ U) + (μ/2)|∂ψ(J_μ U)|²`.
pub fn moreau_psi<T: Real>(u: &Field<T>, mu: T, q: T) -> T {
    let j = resolvent_psi(u, mu, q);
    psi(&j, q) + mu / T::lit(2.0) * dpsi(&j, q).l2_norm_sq()
}

/// `J_ν U = (1 + ν∂φ)^{−1} U`, the minimizer of `ν φ(V) + ½|V − U|²`.
pub fn resolvent_phi<T: Real>(u: &Field<T>, nu: T, p: T, cfg: &ProxConfig<T>) -> ResolventReport<T> {
    let problem = ProxProblem { a: nu, p, b: T::zero(), q: T::lit(2.0) };
    let mut rep = proximal(u, &problem, cfg, None);
    rep.mu_or_nu = nu;
    rep
}

/// `∂φ_ν(U) = (U − J_ν U)/ν`.
pub fn yosida_phi<T: Real>(u: &Field<T>, nu: T, p: T, cfg: &ProxConfig<T>) -> Result<Field<T>> {
    let j = resolvent_phi(u, nu, p, cfg).into_result("phi resolvent")?;
    Ok((u - &j).scale(T::one() / nu))
}

/// Solves `V + τλ ∂φ(V) + τκ ∂ψ(V) = U`, the proximal map of `τ(λφ + κψ)`.
pub fn combined_monotone_step<T: Real>(
    u: &Field<T>,
    tau: T,
    params: &ParamSet<T>,
    cfg: &ProxConfig<T>,
) -> ResolventReport<T> {
    combined_monotone_step_from(u, tau, params, cfg, None)
}

/// [`combined_monotone_step`] started from `guess`.
pub fn combined_monotone_step_from<T: Real>(
    u: &Field<T>,
    tau: T,
    params: &ParamSet<T>,
    cfg: &ProxConfig<T>,
    guess: Option<&Field<T>>,
) -> ResolventReport<T> {
    let problem = ProxProblem { a: tau * params.lambda, p: params.p, b: tau * params.kappa, q: params.q };
    let mut rep = proximal(u, &problem, cfg, guess);
    rep.mu_or_nu = tau;
    rep
}
