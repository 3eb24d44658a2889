//! Nested-domain experiment: solve on concentric boxes `Ω_1 ⊂ Ω_2 ⊂ ⋯` with
//! data supported in `Ω_1` and measure how the zero-extended solutions settle
//! on a fixed observation window.

use rayon::prelude::*;

use crate::error::{PcglError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::integrator::{forcing_integral, simulate, Forcing, SchemeConfig, Trajectory};
use crate::monitors::{first_energy_constant, CheckReport};
use crate::region::ParamSet;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionPlan<T> {
    pub parent: Grid<T>,
    /// Strictly increasing nested boxes, all nested in `parent`.
    pub children: Vec<Grid<T>>,
    /// Initial data on `parent`, supported in the smallest child.
    pub u0: Field<T>,
    pub window: Grid<T>,
}

impl<T: Real> ExhaustionPlan<T> {
    pub fn new(parent: Grid<T>, children: Vec<Grid<T>>, u0: Field<T>, window: Grid<T>) -> Result<Self> {
        if children.is_empty() {
            return Err(PcglError::Domain("an exhaustion plan needs at least one child".into()));
        }
        if u0.grid() != &parent {
            return Err(PcglError::ShapeMismatch("initial data must live on the parent grid".into()));
        }
        for (k, c) in children.iter().enumerate() {
            c.nesting_shift(&parent)?;
            if k > 0 {
                let prev = &children[k - 1];
                prev.nesting_shift(c)?;
                if prev.len() > c.len() {
                    return Err(PcglError::NotNested(format!("child {k} is smaller than child {}", k - 1)));
                }
            }
        }
        window.nesting_shift(&children[0])?;
        if !u0.supported_in(&children[0])? {
            return Err(PcglError::Domain("initial data is not supported in the smallest child".into()));
        }
        Ok(Self { parent, children, u0, window })
    }

    /// Concentric boxes of the given physical widths inside `parent`, with the
    /// smallest one as window.
    pub fn concentric(parent: Grid<T>, widths: &[Vec<T>], u0: Field<T>) -> Result<Self> {
        let children = widths.iter().map(|w| parent.concentric_child(w)).collect::<Result<Vec<_>>>()?;
        let window = children.first().cloned().ok_or_else(|| PcglError::Domain("no widths given".into()))?;
        Self::new(parent, children, u0, window)
    }
}

/// Restrictions of `u0` (given on a grid containing every child) to each child.
pub fn initial_data_family<T: Real>(u0: &Field<T>, children: &[Grid<T>]) -> Result<Vec<Field<T>>> {
    let Some(first) = children.first() else {
        return Ok(vec![]);
    };
    if !u0.supported_in(first)? {
        return Err(PcglError::Domain("initial data is not supported in the smallest child".into()));
    }
    children.iter().map(|c| u0.restrict(c)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExhaustionRow<T> {
    /// Index of the smaller box of the compared pair (1-based).
    pub k: usize,
    /// Physical width of box `k` along the first axis.
    pub box_width: T,
    /// `max_t |ext U^k(t) − ext U^{k+1}(t)|` on the window.
    pub sup_diff: T,
    /// `d_k / d_{k−1}`, NaN for the first row.
    pub decay_ratio: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionReport<T> {
    pub rows: Vec<ExhaustionRow<T>>,
    /// Shared first energy constant computed from parent-level data.
    pub c1: T,
    /// First energy check of each child run against the shared constant.
    pub first_energy: Vec<CheckReport<T>>,
    /// Error of the first failing child, in which case `rows` is partial.
    pub failure: Option<String>,
}

impl<T: Real> ExhaustionReport<T> {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_diff < w[0].sup_diff)
    }

    pub fn csv_header() -> &'static str {
        "k,box_width,sup_diff,decay_ratio"
    }
}

fn window_diff<T: Real>(a: &Trajectory<T>, b: &Trajectory<T>, parent: &Grid<T>, window: &Grid<T>) -> Result<T> {
    if a.snapshots.len() != b.snapshots.len() {
        return Err(PcglError::ShapeMismatch("child runs produced different snapshot times".into()));
    }
    let mut sup = T::zero();
    for ((_, ua), (_, ub)) in a.snapshots.iter().zip(&b.snapshots) {
        let ea = ua.zero_extend(parent)?.restrict(window)?;
        let eb = ub.zero_extend(parent)?.restrict(window)?;
        sup = sup.max((&ea - &eb).l2_norm());
    }
    Ok(sup)
}

/// Simulates every child in parallel and reports the successive window
/// differences `d_k` together with a first-energy check per child against
/// one constant `C₁` built from `|U₀|` and `∫|F|²` on the parent.
pub fn run_exhaustion<T: Real>(
    plan: &ExhaustionPlan<T>,
    cfg: &SchemeConfig<T>,
    params: &ParamSet<T>,
    forcing: &Forcing<T>,
) -> Result<ExhaustionReport<T>> {
    let data = initial_data_family(&plan.u0, &plan.children)?;
    let child_forcing = plan.children.iter().map(|c| restrict_forcing(forcing, c)).collect::<Result<Vec<_>>>()?;
    let mut run_cfg = *cfg;
    if run_cfg.snapshot_stride == 0 {
        run_cfg.snapshot_stride = 1;
    }
    let c1 = first_energy_constant(plan.u0.l2_norm_sq(), forcing_integral(forcing, cfg), cfg.t_end, params).c1;

    let runs: Vec<_> =
        data.par_iter().zip(child_forcing.par_iter()).map(|(u, f)| simulate(u, &run_cfg, params, f)).collect();

    let mut failure = None;
    let mut trajectories = Vec::new();
    let mut first_energy = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        match run {
            Ok(traj) => {
                let tr = &traj.trace;
                let lhs = tr.sup(|r| r.l2sq) + tr.integrate(|r| r.phi) + tr.integrate(|r| r.psi);
                first_energy.push(CheckReport::inequality(
                    format!("first_energy_child_{}", k + 1),
                    lhs,
                    c1,
                    T::lit(0.05) * c1,
                ));
                trajectories.push(traj);
            }
            Err(e) => {
                failure = Some(format!("child {}: {e}", k + 1));
                break;
            }
        }
    }

    let mut rows: Vec<ExhaustionRow<T>> = Vec::new();
    for k in 0..trajectories.len().saturating_sub(1) {
        let d = window_diff(&trajectories[k], &trajectories[k + 1], &plan.parent, &plan.window)?;
        let decay_ratio = rows.last().map_or(T::nan(), |prev| d / prev.sup_diff);
        rows.push(ExhaustionRow { k: k + 1, box_width: plan.children[k].extent(0), sup_diff: d, decay_ratio });
    }
    Ok(ExhaustionReport { rows, c1, first_energy, failure })
}

fn restrict_forcing<T: Real>(f: &Forcing<T>, child: &Grid<T>) -> Result<Forcing<T>> {
    Ok(match f {
        Forcing::Zero => Forcing::Zero,
        Forcing::Constant(v) => Forcing::Constant(v.restrict(child)?),
        Forcing::Sampled { times, fields } => Forcing::Sampled {
            times: times.clone(),
            fields: fields.iter().map(|v| v.restrict(child)).collect::<Result<_>>()?,
        },
    })
}
