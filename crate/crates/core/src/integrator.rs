//! Time stepping for `dU/dt + λ∂φ(U) + κ∂ψ(U) + αI∂φ(U) + βI∂ψ(U) − γU = F(t)`.
//!
//! Two fixed-step schemes are provided. The IMEX split treats the skew terms
//! `αI∂φ + βI∂ψ` and the gain `γU` explicitly and then applies the proximal
//! map of `dt(λφ + κψ)`. The implicit scheme solves the full nonlinear step
//! by damped fixed-point iteration around the same proximal map.

use std::fmt;

use crate::error::{domain, PcglError, Result};
use crate::field::Field;
use crate::functionals::{combined_monotone_step_from, dphi_with, dpsi, phi, psi, yosida_phi, yosida_psi, ProxConfig};
use crate::grid::Grid;
use crate::region::{strength_constant, ParamSet};
use crate::scalar::Real;

/// External force `F(t)`, sampled at the left endpoint of each step.
#[derive(Clone, Debug, PartialEq)]
pub enum Forcing<T> {
    Zero,
    Constant(Field<T>),
    /// Piecewise constant in time: `fields[i]` acts on `[times[i], times[i+1])`.
    Sampled {
        times: Vec<T>,
        fields: Vec<Field<T>>,
    },
}

impl<T: Real> Forcing<T> {
    pub fn validate(&self, grid: &Grid<T>, t_end: T) -> Result<()> {
        let check = |f: &Field<T>| {
            if f.grid().node_counts() != grid.node_counts() {
                return Err(PcglError::ShapeMismatch("forcing field does not match the grid".into()));
            }
            if !f.is_finite() {
                return domain("forcing samples must be finite");
            }
            Ok(())
        };
        match self {
            Forcing::Zero => Ok(()),
            Forcing::Constant(f) => check(f),
            Forcing::Sampled { times, fields } => {
                if times.is_empty() || times.len() != fields.len() {
                    return domain("sampled forcing needs one field per sample time");
                }
                if times[0] > T::zero() {
                    return domain("sampled forcing must start at t = 0");
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return domain("forcing sample times must increase strictly");
                }
                let _ = t_end;
                fields.iter().try_for_each(check)
            }
        }
    }

    /// `F(t)`, or `None` for the zero force.
    pub fn at(&self, t: T) -> Option<&Field<T>> {
        match self {
            Forcing::Zero => None,
            Forcing::Constant(f) => Some(f),
            Forcing::Sampled { times, fields } => {
                let k = times.partition_point(|&s| s <= t).max(1) - 1;
                Some(&fields[k])
            }
        }
    }

    pub fn l2_norm_sq_at(&self, t: T) -> T {
        self.at(t).map_or(T::zero(), |f| f.l2_norm_sq())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ImexSplit,
    FullyImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeConfig<T> {
    pub scheme: Scheme,
    pub dt: T,
    pub t_end: T,
    /// Yosida parameter for `∂ψ` in the explicit stage (0 disables it).
    pub mu: T,
    /// Yosida parameter for `∂φ` in the explicit stage (0 disables it).
    pub nu: T,
    pub prox: ProxConfig<T>,
    pub damping: T,
    pub max_fixed_point: usize,
    /// Keep every `snapshot_stride`-th state (0 keeps only the first and last).
    pub snapshot_stride: usize,
}

impl<T: Real> SchemeConfig<T> {
    pub fn new(scheme: Scheme, dt: T, t_end: T) -> Self {
        Self {
            scheme,
            dt,
            t_end,
            mu: T::zero(),
            nu: T::zero(),
            prox: ProxConfig::default(),
            damping: T::lit(0.5),
            max_fixed_point: 500,
            snapshot_stride: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return domain(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end >= self.dt) || !self.t_end.is_finite() {
            return domain(format!("T must be finite and at least dt, got {}", self.t_end));
        }
        if !(self.mu >= T::zero()) || !(self.nu >= T::zero()) {
            return domain("regularization parameters must be nonnegative");
        }
        if !(self.damping > T::zero() && self.damping <= T::one()) {
            return domain(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if !(self.prox.tol > T::zero()) || self.prox.max_iter == 0 {
            return domain("inner solver needs a positive tolerance and iteration cap");
        }
        Ok(())
    }

    /// Number of steps, `round(T / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().to_usize().unwrap_or(1).max(1)
    }

    pub fn time(&self, n: usize) -> T {
        self.dt * T::from_usize_lossy(n)
    }
}

/// Result of a single step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step<T> {
    pub next: Field<T>,
    /// Residual of the inner solve that produced `next`.
    pub residual: T,
    pub iterations: usize,
}

/// One IMEX step from `(u, t)`.
pub fn step_imex<T: Real>(
    u: &Field<T>,
    t: T,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
) -> Result<Step<T>> {
    step_imex_from(u, t, cfg, params, forcing, None)
}

fn step_imex_from<T: Real>(
    u: &Field<T>,
    t: T,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
    guess: Option<&Field<T>>,
) -> Result<Step<T>> {
    let dt = cfg.dt;
    let mut w = u.clone();
    if params.gamma != T::zero() {
        w.axpy(dt * params.gamma, u);
    }
    if let Some(f) = forcing.at(t) {
        w.axpy(dt, f);
    }
    if params.alpha != T::zero() {
        let a = if cfg.nu > T::zero() {
            yosida_phi(u, cfg.nu, params.p, &cfg.prox)?
        } else {
            dphi_with(u, params.p, cfg.prox.sigma_reg)
        };
        w.axpy(-dt * params.alpha, &a.rotate_i());
    }
    if params.beta != T::zero() {
        let b = if cfg.mu > T::zero() { yosida_psi(u, cfg.mu, params.q) } else { dpsi(u, params.q) };
        w.axpy(-dt * params.beta, &b.rotate_i());
    }
    let rep = combined_monotone_step_from(&w, dt, params, &cfg.prox, guess);
    let (residual, iterations) = (rep.residual, rep.iterations);
    let next = rep.into_result("monotone stage")?;
    Ok(Step { next, residual, iterations })
}

/// Skew part `αI∂φ(V) + βI∂ψ(V)`.
fn skew<T: Real>(v: &Field<T>, params: &ParamSet<T>, sigma_reg: T) -> Field<T> {
    let mut s = Field::zeros(v.grid());
    if params.alpha != T::zero() {
        s.axpy(params.alpha, &dphi_with(v, params.p, sigma_reg).rotate_i());
    }
    if params.beta != T::zero() {
        s.axpy(params.beta, &dpsi(v, params.q).rotate_i());
    }
    s
}

/// Residual of the implicit step equation at `v`.
pub fn implicit_residual<T: Real>(v: &Field<T>, rhs: &Field<T>, dt: T, params: &ParamSet<T>, sigma_reg: T) -> Field<T> {
    let dp = dphi_with(v, params.p, sigma_reg);
    let ds = dpsi(v, params.q);
    let mut r = v - rhs;
    r.axpy(dt * params.lambda, &dp);
    r.axpy(dt * params.kappa, &ds);
    r.axpy(dt * params.alpha, &dp.rotate_i());
    r.axpy(dt * params.beta, &ds.rotate_i());
    r.axpy(-dt * params.gamma, v);
    r
}

/// One fully implicit step from `(u, t)`.
pub fn step_implicit<T: Real>(
    u: &Field<T>,
    t: T,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
) -> Result<Step<T>> {
    step_implicit_from(u, t, cfg, params, forcing, None)
}

fn step_implicit_from<T: Real>(
    u: &Field<T>,
    t: T,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
    guess: Option<&Field<T>>,
) -> Result<Step<T>> {
    let dt = cfg.dt;
    let mut rhs = u.clone();
    if let Some(f) = forcing.at(t) {
        rhs.axpy(dt, f);
    }
    let inner = ProxConfig { tol: cfg.prox.tol * T::lit(0.1), ..cfg.prox };
    let linear_free = params.alpha == T::zero() && params.beta == T::zero() && params.gamma == T::zero();
    if linear_free {
        let rep = combined_monotone_step_from(&rhs, dt, params, &inner, guess);
        let (residual, iterations) = (rep.residual, rep.iterations);
        let next = rep.into_result("implicit step")?;
        return Ok(Step { next, residual, iterations });
    }
    let tol = cfg.prox.tol.max(T::lit(1e-12) * rhs.l2_norm());
    let mut v = guess.cloned().unwrap_or_else(|| u.clone());
    let mut best: Option<(Field<T>, T)> = None;
    let mut inner_iters = 0;
    for it in 0..=cfg.max_fixed_point {
        let res = implicit_residual(&v, &rhs, dt, params, cfg.prox.sigma_reg).l2_norm();
        if best.as_ref().is_none_or(|b| res < b.1) {
            best = Some((v.clone(), res));
        }
        if res <= tol {
            return Ok(Step { next: v, residual: res, iterations: it + inner_iters });
        }
        if it == cfg.max_fixed_point || !res.is_finite() {
            break;
        }
        let mut z = rhs.clone();
        z.axpy(-dt, &skew(&v, params, cfg.prox.sigma_reg));
        z.axpy(dt * params.gamma, &v);
        let rep = combined_monotone_step_from(&z, dt, params, &inner, Some(&v));
        inner_iters += rep.iterations;
        let p = rep.into_result("implicit step prox")?;
        let d = cfg.damping;
        v = &v.scale(T::one() - d) + &p.scale(d);
    }
    let residual = best.map_or(T::nan(), |b| b.1);
    Err(PcglError::NotConverged {
        what: "implicit step fixed point",
        iterations: cfg.max_fixed_point,
        residual: residual.as_f64(),
    })
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow<T> {
    pub step: usize,
    pub t: T,
    pub l2sq: T,
    pub phi: T,
    pub psi: T,
    /// `(∂φ(U), ∂ψ(U))`.
    pub pairing: T,
    /// `|(∂φ, I∂ψ)| / (c_q (∂φ, ∂ψ))`, 0 when both vanish.
    pub key_ratio: T,
    /// Inner solver residual of the step that produced this state (0 at step 0).
    pub residual: T,
    /// `|U^n − U^{n−1}|² / dt²` (0 at step 0).
    pub dudt_sq: T,
    pub dphi_sq: T,
    pub dpsi_sq: T,
    /// `|F(t_{n−1})|²`, the force that acted during the step ending here.
    pub forcing_sq: T,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyTrace<T> {
    pub dt: T,
    pub rows: Vec<TraceRow<T>>,
}

impl<T: Real> EnergyTrace<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn final_time(&self) -> T {
        self.rows.last().map_or(T::zero(), |r| r.t)
    }

    /// Right-endpoint quadrature `Σ dt f(row_n)` over steps `n ≥ 1`.
    pub fn integrate(&self, f: impl Fn(&TraceRow<T>) -> T) -> T {
        self.rows.iter().skip(1).map(|r| self.dt * f(r)).sum()
    }

    pub fn sup(&self, f: impl Fn(&TraceRow<T>) -> T) -> T {
        self.rows.iter().map(f).fold(T::zero(), T::max)
    }

    pub fn csv_header() -> &'static str {
        "step,t,l2sq,phi,psi,pairing,key_ratio,residual"
    }
}

#[allow(clippy::too_many_arguments)]
fn trace_row<T: Real>(
    step: usize,
    t: T,
    u: &Field<T>,
    prev: Option<&Field<T>>,
    dt: T,
    params: &ParamSet<T>,
    residual: T,
    forcing_sq: T,
    sigma_reg: T,
) -> TraceRow<T> {
    let dp = dphi_with(u, params.p, sigma_reg);
    let ds = dpsi(u, params.q);
    let pairing = dp.dot(&ds);
    let cq = strength_constant(params.q).unwrap_or(T::zero());
    let lhs = dp.dot(&ds.rotate_i()).abs();
    let rhs = cq * pairing;
    let key_ratio = if lhs == T::zero() { T::zero() } else { lhs / rhs };
    let dudt_sq = prev.map_or(T::zero(), |p| (u - p).l2_norm_sq() / (dt * dt));
    TraceRow {
        step,
        t,
        l2sq: u.l2_norm_sq(),
        phi: phi(u, params.p),
        psi: psi(u, params.q),
        pairing,
        key_ratio,
        residual,
        dudt_sq,
        dphi_sq: dp.l2_norm_sq(),
        dpsi_sq: ds.l2_norm_sq(),
        forcing_sq,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub snapshots: Vec<(T, Field<T>)>,
    pub trace: EnergyTrace<T>,
    pub final_state: Field<T>,
}

/// A run that stopped early, with everything computed before the failure.
#[derive(Debug)]
pub struct SimulationFailure<T> {
    pub error: PcglError,
    pub step: usize,
    pub partial: Box<Trajectory<T>>,
}

impl<T> fmt::Display for SimulationFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {} failed: {}", self.step, self.error)
    }
}

impl<T: fmt::Debug> std::error::Error for SimulationFailure<T> {}

/// Integrates from `u0` to `cfg.t_end` recording an [`EnergyTrace`].
pub fn simulate<T: Real>(
    u0: &Field<T>,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
) -> std::result::Result<Trajectory<T>, SimulationFailure<T>> {
    let empty = |error: PcglError| SimulationFailure {
        error,
        step: 0,
        partial: Box::new(Trajectory {
            snapshots: vec![],
            trace: EnergyTrace { dt: cfg.dt, rows: vec![] },
            final_state: u0.clone(),
        }),
    };
    if let Err(e) = params.validate().and_then(|_| cfg.validate()) {
        return Err(empty(e));
    }
    if let Err(e) = forcing.validate(u0.grid(), cfg.t_end) {
        return Err(empty(e));
    }
    if u0.grid().dim() != params.dim {
        return Err(empty(PcglError::ShapeMismatch(format!(
            "parameters for dimension {} but grid of dimension {}",
            params.dim,
            u0.grid().dim()
        ))));
    }
    let sigma_reg = cfg.prox.sigma_reg;
    let steps = cfg.steps();
    let mut u = u0.clone();
    let mut trace = EnergyTrace { dt: cfg.dt, rows: Vec::with_capacity(steps + 1) };
    trace.rows.push(trace_row(0, T::zero(), &u, None, cfg.dt, params, T::zero(), T::zero(), sigma_reg));
    let mut snapshots = vec![(T::zero(), u.clone())];
    for n in 1..=steps {
        let t = cfg.time(n - 1);
        let result = match cfg.scheme {
            Scheme::ImexSplit => step_imex_from(&u, t, cfg, params, forcing, None),
            Scheme::FullyImplicit => step_implicit_from(&u, t, cfg, params, forcing, None),
        };
        let step = match result {
            Ok(s) => s,
            Err(error) => {
                return Err(SimulationFailure {
                    error,
                    step: n,
                    partial: Box::new(Trajectory { snapshots, trace, final_state: u }),
                })
            }
        };
        let tn = cfg.time(n);
        let fsq = forcing.l2_norm_sq_at(t);
        trace.rows.push(trace_row(n, tn, &step.next, Some(&u), cfg.dt, params, step.residual, fsq, sigma_reg));
        u = step.next;
        let keep = if cfg.snapshot_stride == 0 { n == steps } else { n % cfg.snapshot_stride == 0 || n == steps };
        if keep {
            snapshots.push((tn, u.clone()));
        }
    }
    Ok(Trajectory { snapshots, trace, final_state: u })
}

/// `∫₀ᵀ |F|²` with the left-endpoint rule used by the schemes.
pub fn forcing_integral<T: Real>(forcing: &Forcing<T>, cfg: &SchemeConfig<T>) -> T {
    (0..cfg.steps()).map(|n| cfg.dt * forcing.l2_norm_sq_at(cfg.time(n))).sum()
}
