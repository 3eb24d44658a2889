//! The amalgam norm `|U|_X`, Clarkson-type inequalities for vector-valued
//! samples, the helper convexity inequalities, the counting-measure forms of
//! Minkowski's integral inequality, and randomized/exhaustive sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{domain, PcglError, Result};
use crate::field::{grad, Field, GradField};
use crate::grid::Grid;
use crate::monitors::CheckReport;
use crate::region::ParamSet;
use crate::scalar::{compensated_sum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AmalgamBranch {
    /// `(|U|₂^p + |∇U|_p^p)^{1/p}`
    PGeq2,
    /// `(|U|₂^{p′} + |∇U|_p^{p′})^{1/p′}`
    PLeq2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmalgamNorm<T> {
    pub p: T,
    pub value: T,
    pub branch: AmalgamBranch,
}

/// Conjugate exponent `p/(p−1)`.
pub fn conjugate<T: Real>(p: T) -> T {
    p / (p - T::one())
}

pub fn xp_norm<T: Real>(u: &Field<T>, p: T) -> Result<AmalgamNorm<T>> {
    let lb = ParamSet::<T>::p_lower_bound(u.grid().dim());
    if !(p > lb) || !p.is_finite() {
        return domain(format!("amalgam exponent must exceed {lb}, got {p}"));
    }
    let l2 = u.l2_norm();
    let gp = grad(u).lp_norm(p);
    let (e, branch) = if p >= T::lit(2.0) { (p, AmalgamBranch::PGeq2) } else { (conjugate(p), AmalgamBranch::PLeq2) };
    let value = (l2.powf(e) + gp.powf(e)).powf(T::one() / e);
    Ok(AmalgamNorm { p, value, branch })
}

/// Vector-valued samples `f(x) ∈ R^width` with quadrature weight `weight`.
#[derive(Clone, Copy, Debug)]
pub struct Samples<'a, T> {
    pub data: &'a [T],
    pub width: usize,
    pub weight: T,
}

impl<'a, T: Real> Samples<'a, T> {
    pub fn from_field(f: &'a Field<T>) -> Self {
        let data = f.values().as_flattened();
        Self { data, width: 2, weight: f.grid().cell_volume() }
    }

    pub fn from_grad(g: &'a GradField<T>) -> Self {
        Self { data: g.data(), width: g.width(), weight: g.grid().cell_volume() }
    }

    fn magnitudes(&self) -> impl Iterator<Item = T> + '_ {
        self.data.chunks_exact(self.width).map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt())
    }

    /// `(w Σ |f(x)|^p)^{1/p}` with Euclidean pointwise magnitudes.
    pub fn norm(&self, p: T) -> T {
        (self.weight * compensated_sum(self.magnitudes().map(|m| m.powf(p)))).powf(T::one() / p)
    }
}

fn check_shapes<T: Real>(f: &Samples<T>, g: &Samples<T>) -> Result<()> {
    if f.data.len() != g.data.len() || f.width != g.width {
        return Err(PcglError::ShapeMismatch("Clarkson inequalities need samples of equal shape".into()));
    }
    Ok(())
}

fn half_sum_diff<T: Real>(f: &Samples<T>, g: &Samples<T>) -> (Vec<T>, Vec<T>) {
    let half = T::lit(0.5);
    let s = f.data.iter().zip(g.data).map(|(&a, &b)| half * (a + b)).collect();
    let d = f.data.iter().zip(g.data).map(|(&a, &b)| half * (a - b)).collect();
    (s, d)
}

fn rel_tol<T: Real>(lhs: T, rhs: T) -> T {
    T::lit(1e-12) * lhs.abs().max(rhs.abs())
}

/// The three readings of Clarkson's first inequality that are compared.
#[derive(Clone, Debug, PartialEq)]
pub struct ClarksonFirst<T> {
    /// `‖(f+g)/2‖^p + ‖(f−g)/2‖^p ≤ ½‖f‖^p + ½‖g‖^p`
    pub mean: CheckReport<T>,
    /// `… ≤ (½‖f‖^{p′} + ½‖g‖^{p′})^{p−1}`
    pub conjugate: CheckReport<T>,
    /// `… ≤ (½‖f‖^{p′} + ½‖g‖^{p′})^{1/(p−1)}`, not scale invariant and not asserted.
    pub reciprocal: CheckReport<T>,
}

pub fn clarkson_first<T: Real>(f: &Samples<T>, g: &Samples<T>, p: T) -> Result<ClarksonFirst<T>> {
    if !(p >= T::lit(2.0)) {
        return domain(format!("Clarkson's first inequality needs p >= 2, got {p}"));
    }
    check_shapes(f, g)?;
    let (s, d) = half_sum_diff(f, g);
    let sn = Samples { data: &s, ..*f }.norm(p);
    let dn = Samples { data: &d, ..*f }.norm(p);
    let (nf, ng) = (f.norm(p), g.norm(p));
    let lhs = sn.powf(p) + dn.powf(p);
    let half = T::lit(0.5);
    let pc = conjugate(p);
    let inner = half * nf.powf(pc) + half * ng.powf(pc);
    let mean = half * nf.powf(p) + half * ng.powf(p);
    let conjugate_form = inner.powf(p - T::one());
    let reciprocal = inner.powf(T::one() / (p - T::one()));
    Ok(ClarksonFirst {
        mean: CheckReport::inequality("clarkson_first_mean", lhs, mean, rel_tol(lhs, mean)),
        conjugate: CheckReport::inequality(
            "clarkson_first_conjugate",
            lhs,
            conjugate_form,
            rel_tol(lhs, conjugate_form),
        ),
        reciprocal: CheckReport::inequality("clarkson_first_reciprocal", lhs, reciprocal, rel_tol(lhs, reciprocal)),
    })
}

/// `‖(f+g)/2‖^{p′} + ‖(f−g)/2‖^{p′} ≤ (½‖f‖^p + ½‖g‖^p)^{1/(p−1)}` for `1 < p < 2`.
pub fn clarkson_second<T: Real>(f: &Samples<T>, g: &Samples<T>, p: T) -> Result<CheckReport<T>> {
    if !(p > T::one() && p < T::lit(2.0)) {
        return domain(format!("Clarkson's second inequality needs 1 < p < 2, got {p}"));
    }
    check_shapes(f, g)?;
    let (s, d) = half_sum_diff(f, g);
    let pc = conjugate(p);
    let lhs = Samples { data: &s, ..*f }.norm(p).powf(pc) + Samples { data: &d, ..*f }.norm(p).powf(pc);
    let half = T::lit(0.5);
    let rhs = (half * f.norm(p).powf(p) + half * g.norm(p).powf(p)).powf(T::one() / (p - T::one()));
    Ok(CheckReport::inequality("clarkson_second", lhs, rhs, rel_tol(lhs, rhs)))
}

fn vnorm<T: Real>(a: &[T]) -> T {
    a.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// `(|(a+b)/2|^p + |(a−b)/2|^p)^{1/p} ≤ (½|a|^{p′} + ½|b|^{p′})^{1/p′}` for `p ≥ 2`.
pub fn local_clarkson<T: Real>(a: &[T], b: &[T], p: T) -> Result<CheckReport<T>> {
    if !(p >= T::lit(2.0)) {
        return domain(format!("local Clarkson inequality needs p >= 2, got {p}"));
    }
    if a.len() != b.len() {
        return Err(PcglError::ShapeMismatch("vectors of different length".into()));
    }
    let half = T::lit(0.5);
    let s: Vec<T> = a.iter().zip(b).map(|(&x, &y)| half * (x + y)).collect();
    let d: Vec<T> = a.iter().zip(b).map(|(&x, &y)| half * (x - y)).collect();
    let lhs = (vnorm(&s).powf(p) + vnorm(&d).powf(p)).powf(T::one() / p);
    let pc = conjugate(p);
    let rhs = (half * vnorm(a).powf(pc) + half * vnorm(b).powf(pc)).powf(T::one() / pc);
    Ok(CheckReport::inequality("local_clarkson", lhs, rhs, rel_tol(lhs, rhs)))
}

/// `(a−b)^r ≤ a^r − b^r` and `(a+b)^r ≤ 2^{r−1}(a^r + b^r)` for `a ≥ b ≥ 0`, `r ≥ 1`.
pub fn helper_inequalities<T: Real>(a: T, b: T, r: T) -> Result<Vec<CheckReport<T>>> {
    if !(a >= b && b >= T::zero() && r >= T::one()) || !a.is_finite() || !r.is_finite() {
        return domain(format!("helper inequalities need a >= b >= 0 and r >= 1, got a={a}, b={b}, r={r}"));
    }
    let l1 = (a - b).powf(r);
    let r1 = a.powf(r) - b.powf(r);
    let l2 = (a + b).powf(r);
    let r2 = T::lit(2.0).powf(r - T::one()) * (a.powf(r) + b.powf(r));
    Ok(vec![
        CheckReport::inequality("helper_difference", l1, r1, T::lit(1e-12) * a.powf(r)),
        CheckReport::inequality("helper_sum", l2, r2, rel_tol(l2, r2)),
    ])
}

/// Counting-measure specializations of Minkowski's integral inequality for
/// `0 < q ≤ p`:
/// `‖(|f₁|^q + |f₂|^q)^{1/q}‖_p ≤ (‖f₁‖_p^q + ‖f₂‖_p^q)^{1/q}` and the mirror
/// `(‖f₁‖_q^p + ‖f₂‖_q^p)^{1/p} ≤ ‖(|f₁|^p + |f₂|^p)^{1/p}‖_q`.
pub fn minkowski_counting<T: Real>(f1: &Field<T>, f2: &Field<T>, p: T, q: T) -> Result<Vec<CheckReport<T>>> {
    if !(q > T::zero() && q <= p) {
        return domain(format!("Minkowski counting form needs 0 < q <= p, got p={p}, q={q}"));
    }
    if f1.len() != f2.len() {
        return Err(PcglError::ShapeMismatch("fields of different size".into()));
    }
    let w = f1.grid().cell_volume();
    let mag = |f: &Field<T>| f.values().iter().map(|v| v[0].hypot(v[1])).collect::<Vec<T>>();
    let (m1, m2) = (mag(f1), mag(f2));
    let lnorm = |xs: &mut dyn Iterator<Item = T>, e: T| (w * compensated_sum(xs.map(|x| x.powf(e)))).powf(T::one() / e);
    let combine = |e: T| m1.iter().zip(&m2).map(move |(&a, &b)| (a.powf(e) + b.powf(e)).powf(T::one() / e));

    let lhs1 = lnorm(&mut combine(q), p);
    let rhs1 =
        (lnorm(&mut m1.iter().copied(), p).powf(q) + lnorm(&mut m2.iter().copied(), p).powf(q)).powf(T::one() / q);
    let lhs2 =
        (lnorm(&mut m1.iter().copied(), q).powf(p) + lnorm(&mut m2.iter().copied(), q).powf(p)).powf(T::one() / p);
    let rhs2 = lnorm(&mut combine(p), q);
    Ok(vec![
        CheckReport::inequality("minkowski_counting", lhs1, rhs1, rel_tol(lhs1, rhs1)),
        CheckReport::inequality("minkowski_counting_mirror", lhs2, rhs2, rel_tol(lhs2, rhs2)),
    ])
}

/// Midpoint inequality in `X_p`: for `p ≥ 2`
/// `|(u+v)/2|_X^p + |(u−v)/2|_X^p ≤ ½(|u|_X^p + |v|_X^p)`, and for `p < 2`
/// `|(u+v)/2|_X^{p′} + |(u−v)/2|_X^{p′} ≤ (½|u|_X^p + ½|v|_X^p)^{1/(p−1)}`.
pub fn uniform_convexity_suite<T: Real>(u: &Field<T>, v: &Field<T>, p: T) -> Result<CheckReport<T>> {
    if u.len() != v.len() {
        return Err(PcglError::ShapeMismatch("fields of different size".into()));
    }
    let half = T::lit(0.5);
    let s = (u + v).scale(half);
    let d = (u - v).scale(half);
    let x = |f: &Field<T>| xp_norm(f, p).map(|n| n.value);
    let (xs, xd, xu, xv) = (x(&s)?, x(&d)?, x(u)?, x(v)?);
    let (lhs, rhs) = if p >= T::lit(2.0) {
        (xs.powf(p) + xd.powf(p), half * (xu.powf(p) + xv.powf(p)))
    } else {
        let pc = conjugate(p);
        (xs.powf(pc) + xd.powf(pc), (half * xu.powf(p) + half * xv.powf(p)).powf(T::one() / (p - T::one())))
    };
    Ok(CheckReport::inequality("uniform_convexity", lhs, rhs, rel_tol(lhs, rhs)))
}

/// Aggregate of one inequality over many samples.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub check: String,
    pub p: f64,
    /// Second exponent where one applies, NaN otherwise.
    pub q: f64,
    pub samples: usize,
    pub failures: usize,
    /// Smallest `margin / max(|lhs|, |rhs|)` seen.
    pub min_margin: f64,
    /// False for readings that are reported but not asserted.
    pub hard: bool,
}

impl SweepResult {
    fn new(check: &str, p: f64, q: f64, hard: bool) -> Self {
        Self { check: check.into(), p, q, samples: 0, failures: 0, min_margin: f64::INFINITY, hard }
    }

    fn record(&mut self, r: &CheckReport<f64>) {
        self.samples += 1;
        if !r.passed {
            self.failures += 1;
        }
        let scale = r.lhs.abs().max(r.rhs.abs());
        let m = if scale > 0.0 { r.margin / scale } else { r.margin };
        self.min_margin = self.min_margin.min(m);
    }

    fn merge(mut self, other: Self) -> Self {
        self.samples += other.samples;
        self.failures += other.failures;
        self.min_margin = self.min_margin.min(other.min_margin);
        self
    }

    pub fn csv_header() -> &'static str {
        "check,p,q,samples,failures,min_margin"
    }
}

/// Uniform convexity modulus seen on unit-norm pairs at distance ≥ 0.5:
/// `min (1 − |(u+v)/2|_X)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvexityModulus {
    pub p: f64,
    pub pairs: usize,
    pub min_delta: f64,
}

fn random_field(grid: &Grid<f64>, rng: &mut ChaCha8Rng) -> Field<f64> {
    // log-uniform amplitude exercises readings that are not scale invariant
    let amp = 10f64.powf(rng.gen_range(-3.0..3.0));
    Field::random(grid, rng, amp)
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let amp = 10f64.powf(rng.gen_range(-3.0..3.0));
    (0..dim).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

fn parallel_sweep<F>(template: SweepResult, samples: usize, seed: u64, f: F) -> Result<SweepResult>
where
    F: Fn(&mut ChaCha8Rng) -> Result<CheckReport<f64>> + Sync,
{
    const CHUNK: usize = 1000;
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((c as u64 + 1) << 20));
            let mut acc = SweepResult { samples: 0, ..template.clone() };
            let n = CHUNK.min(samples - c * CHUNK);
            for _ in 0..n {
                acc.record(&f(&mut rng)?);
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()
        .map(|parts| parts.into_iter().fold(SweepResult { samples: 0, ..template }, SweepResult::merge))
}

/// Randomized sweeps of every auxiliary inequality, `samples` draws per check
/// and exponent.
pub fn random_sweeps(samples: usize, seed: u64) -> Result<Vec<SweepResult>> {
    let g1 = Grid::new_1d(1.0, 6)?;
    let g2 = Grid::new_2d([1.0, 1.0], [3, 3])?;
    let mut out = Vec::new();
    for &p in &[2.0, 3.0, 4.0] {
        let grids = [&g1, &g2];
        for (name, hard) in
            [("clarkson_first_mean", true), ("clarkson_first_conjugate", true), ("clarkson_first_reciprocal", false)]
        {
            out.push(parallel_sweep(SweepResult::new(name, p, f64::NAN, hard), samples, seed ^ 0x11, |rng| {
                let g = grids[rng.gen_range(0..2)];
                let (f, h) = (random_field(g, rng), random_field(g, rng));
                let (gf, gh) = (grad(&f), grad(&h));
                let use_grad = rng.gen_bool(0.5);
                let (a, b) = if use_grad {
                    (Samples::from_grad(&gf), Samples::from_grad(&gh))
                } else {
                    (Samples::from_field(&f), Samples::from_field(&h))
                };
                let c = clarkson_first(&a, &b, p)?;
                Ok(match name {
                    "clarkson_first_mean" => c.mean,
                    "clarkson_first_conjugate" => c.conjugate,
                    _ => c.reciprocal,
                })
            })?);
        }
    }
    for &p in &[1.2, 1.5, 1.8] {
        out.push(parallel_sweep(
            SweepResult::new("clarkson_second", p, f64::NAN, true),
            samples,
            seed ^ 0x22,
            |rng| {
                let (f, h) = (random_field(&g1, rng), random_field(&g1, rng));
                clarkson_second(&Samples::from_field(&f), &Samples::from_field(&h), p)
            },
        )?);
    }
    for &p in &[2.0, 2.5, 4.0] {
        out.push(parallel_sweep(SweepResult::new("local_clarkson", p, f64::NAN, true), samples, seed ^ 0x33, |rng| {
            let dim = rng.gen_range(2..=8);
            local_clarkson(&random_vec(rng, dim), &random_vec(rng, dim), p)
        })?);
    }
    for (name, idx) in [("helper_difference", 0), ("helper_sum", 1)] {
        out.push(parallel_sweep(SweepResult::new(name, f64::NAN, f64::NAN, true), samples, seed ^ 0x44, |rng| {
            let x: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
            let y: f64 = x * rng.gen_range(0.0..=1.0);
            let r: f64 = rng.gen_range(1.0..8.0);
            Ok(helper_inequalities(x, y, r)?.swap_remove(idx))
        })?);
    }
    for &(p, q) in &[(3.0, 2.0), (4.0, 2.0), (2.0, 1.0)] {
        for (name, idx) in [("minkowski_counting", 0), ("minkowski_counting_mirror", 1)] {
            out.push(parallel_sweep(SweepResult::new(name, p, q, true), samples, seed ^ 0x55, |rng| {
                let g = if rng.gen_bool(0.5) { &g1 } else { &g2 };
                Ok(minkowski_counting(&random_field(g, rng), &random_field(g, rng), p, q)?.swap_remove(idx))
            })?);
        }
    }
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        out.push(parallel_sweep(
            SweepResult::new("uniform_convexity", p, f64::NAN, true),
            samples,
            seed ^ 0x66,
            |rng| {
                let g = if rng.gen_bool(0.5) { &g1 } else { &g2 };
                uniform_convexity_suite(&random_field(g, rng), &random_field(g, rng), p)
            },
        )?);
    }
    Ok(out)
}

/// Every vector in `{−2, …, 2}^dim`.
fn integer_vectors(dim: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|v| (-2..=2).map(move |k| [v.clone(), vec![k as f64]].concat())).collect();
    }
    out
}

/// Exhaustive sweeps over small-integer data: two-node 1D fields (and their
/// gradients) with entries in `{−2, …, 2}`, vector pairs in `{−2, …, 2}^2`
/// and `{−2, …, 2}^4`, and helper triples with `a, b ∈ {0, 1, 2}`.
pub fn exhaustive_sweeps() -> Result<Vec<SweepResult>> {
    let g = Grid::new_1d(3.0, 2)?;
    let fields: Vec<Field<f64>> = integer_vectors(4)
        .into_iter()
        .map(|v| Field::from_values(&g, vec![[v[0], v[1]], [v[2], v[3]]]))
        .collect::<Result<_>>()?;
    let grads: Vec<GradField<f64>> = fields.iter().map(grad).collect();

    let pairs =
        |f: &(dyn Fn(usize, usize) -> Result<CheckReport<f64>> + Sync), template: SweepResult| -> Result<SweepResult> {
            (0..fields.len())
                .into_par_iter()
                .map(|i| {
                    let mut acc = SweepResult { samples: 0, ..template.clone() };
                    for j in 0..fields.len() {
                        acc.record(&f(i, j)?);
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()
                .map(|v| v.into_iter().fold(SweepResult { samples: 0, ..template.clone() }, SweepResult::merge))
        };

    let mut out = Vec::new();
    for &p in &[2.0, 3.0, 4.0] {
        out.push(pairs(
            &|i, j| Ok(clarkson_first(&Samples::from_field(&fields[i]), &Samples::from_field(&fields[j]), p)?.conjugate),
            SweepResult::new("exhaustive_clarkson_first_conjugate", p, f64::NAN, true),
        )?);
        out.push(pairs(
            &|i, j| Ok(clarkson_first(&Samples::from_grad(&grads[i]), &Samples::from_grad(&grads[j]), p)?.mean),
            SweepResult::new("exhaustive_clarkson_first_mean_grad", p, f64::NAN, true),
        )?);
    }
    for &p in &[1.2, 1.5, 1.8] {
        out.push(pairs(
            &|i, j| clarkson_second(&Samples::from_field(&fields[i]), &Samples::from_field(&fields[j]), p),
            SweepResult::new("exhaustive_clarkson_second", p, f64::NAN, true),
        )?);
    }
    for &(p, q) in &[(3.0, 2.0), (4.0, 2.0), (2.0, 1.0)] {
        out.push(pairs(
            &|i, j| Ok(minkowski_counting(&fields[i], &fields[j], p, q)?.swap_remove(0)),
            SweepResult::new("exhaustive_minkowski_counting", p, q, true),
        )?);
        out.push(pairs(
            &|i, j| Ok(minkowski_counting(&fields[i], &fields[j], p, q)?.swap_remove(1)),
            SweepResult::new("exhaustive_minkowski_counting_mirror", p, q, true),
        )?);
    }
    for &p in &[1.5, 2.0, 3.0] {
        out.push(pairs(
            &|i, j| uniform_convexity_suite(&fields[i], &fields[j], p),
            SweepResult::new("exhaustive_uniform_convexity", p, f64::NAN, true),
        )?);
    }
    for dim in [2usize, 4] {
        let vs = integer_vectors(dim);
        for &p in &[2.0, 2.5, 4.0] {
            let mut acc = SweepResult::new(&format!("exhaustive_local_clarkson_dim{dim}"), p, f64::NAN, true);
            for a in &vs {
                for b in &vs {
                    acc.record(&local_clarkson(a, b, p)?);
                }
            }
            out.push(acc);
        }
    }
    let mut acc = SweepResult::new("exhaustive_helper", f64::NAN, f64::NAN, true);
    for a in 0..=2 {
        for b in 0..=a {
            for r in 1..=4 {
                for rep in helper_inequalities(a as f64, b as f64, r as f64)? {
                    acc.record(&rep);
                }
            }
        }
    }
    out.push(acc);
    Ok(out)
}

/// Samples unit-norm pairs in `X_p` at distance at least 0.5 and records the
/// smallest observed `1 − |(u+v)/2|_X`.
pub fn convexity_modulus(p: f64, pairs: usize, seed: u64) -> Result<ConvexityModulus> {
    let g = Grid::new_1d(1.0, 5)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_delta = f64::INFINITY;
    let mut seen = 0;
    let mut tries = 0;
    while seen < pairs && tries < pairs * 100 {
        tries += 1;
        let u = Field::random(&g, &mut rng, 1.0);
        let v = Field::random(&g, &mut rng, 1.0);
        let (nu, nv) = (xp_norm(&u, p)?.value, xp_norm(&v, p)?.value);
        if nu == 0.0 || nv == 0.0 {
            continue;
        }
        let (u, v) = (u.scale(1.0 / nu), v.scale(1.0 / nv));
        if xp_norm(&(&u - &v), p)?.value < 0.5 {
            continue;
        }
        let mid = xp_norm(&(&u + &v).scale(0.5), p)?.value;
        min_delta = min_delta.min(1.0 - mid);
        seen += 1;
    }
    Ok(ConvexityModulus { p, pairs: seen, min_delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xp_norm_examples() {
        let g = Grid::<f64>::new_1d(2.0, 1).unwrap();
        let u = Field::from_values(&g, vec![[1.0, 0.0]]).unwrap();
        let n = xp_norm(&u, 2.0).unwrap();
        assert!((n.value - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(n.branch, AmalgamBranch::PGeq2);
        assert_eq!(xp_norm(&Field::zeros(&g), 3.0).unwrap().value, 0.0);
        assert_eq!(xp_norm(&u, 1.5).unwrap().branch, AmalgamBranch::PLeq2);
        let g2 = Grid::<f64>::new_2d([1.0, 1.0], [3, 3]).unwrap();
        assert!(xp_norm(&Field::<f64>::zeros(&g2), 1.0).is_err());
        let g1 = Grid::<f64>::new_1d(1.0, 3).unwrap();
        assert!(xp_norm(&Field::<f64>::zeros(&g1), 1.0).is_err());
    }

    #[test]
    fn branches_agree_at_two_and_scale() {
        let g = Grid::<f64>::new_2d([1.0, 1.0], [4, 4]).unwrap();
        let u = Field::noise(&g, 3, 1.0);
        let a = xp_norm(&u, 2.0).unwrap().value;
        let b = xp_norm(&u, 2.0 - 1e-15).unwrap().value;
        assert!((a - b).abs() <= 1e-14 * a);
        for p in [1.5, 3.0] {
            let n = xp_norm(&u, p).unwrap().value;
            let m = xp_norm(&u.scale(-2.5), p).unwrap().value;
            assert!((m - 2.5 * n).abs() < 1e-12 * m);
        }
    }

    #[test]
    fn clarkson_first_special_pairs() {
        let g = Grid::<f64>::new_1d(1.0, 4).unwrap();
        let f = Field::noise(&g, 1, 1.0);
        let minus = f.scale(-1.0);
        for other in [&f, &minus] {
            let c = clarkson_first(&Samples::from_field(&f), &Samples::from_field(other), 3.0).unwrap();
            assert!(c.mean.passed && c.conjugate.passed);
        }
        assert!(clarkson_first(&Samples::from_field(&f), &Samples::from_field(&f), 1.5).is_err());
    }

    #[test]
    fn reciprocal_exponent_fails_at_large_scale() {
        let g = Grid::<f64>::new_1d(1.0, 4).unwrap();
        let f = Field::noise(&g, 1, 100.0);
        let c = clarkson_first(&Samples::from_field(&f), &Samples::from_field(&f), 3.0).unwrap();
        assert!(!c.reciprocal.passed);
        assert!(c.conjugate.passed);
    }

    #[test]
    fn clarkson_second_disjoint_support() {
        let g = Grid::<f64>::new_1d(3.0, 2).unwrap();
        let f = Field::from_values(&g, vec![[1.0, 2.0], [0.0, 0.0]]).unwrap();
        let h = Field::from_values(&g, vec![[0.0, 0.0], [-3.0, 0.5]]).unwrap();
        assert!(clarkson_second(&Samples::from_field(&f), &Samples::from_field(&h), 1.5).unwrap().passed);
        assert!(clarkson_second(&Samples::from_field(&f), &Samples::from_field(&f), 1.5).unwrap().passed);
    }

    #[test]
    fn local_clarkson_equality_at_zero() {
        let r = local_clarkson::<f64>(&[3.0, -1.0], &[0.0, 0.0], 3.0).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-14 && r.passed);
        let r = local_clarkson::<f64>(&[1.0, 0.0], &[0.0, 1.0], 2.0).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-15 && (r.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn helper_examples() {
        for r in helper_inequalities::<f64>(3.0, 0.0, 2.5).unwrap() {
            assert!((r.lhs - r.rhs).abs() < 1e-12 * r.rhs.max(1.0) || r.name == "helper_sum");
        }
        let reps = helper_inequalities::<f64>(2.0, 2.0, 3.0).unwrap();
        assert_eq!(reps[0].lhs, 0.0);
        assert!((reps[1].lhs - reps[1].rhs).abs() < 1e-12);
        assert!(helper_inequalities::<f64>(1.0, 2.0, 2.0).is_err());
        assert!(helper_inequalities::<f64>(2.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn minkowski_examples() {
        let g = Grid::<f64>::new_1d(1.0, 5).unwrap();
        let f = Field::noise(&g, 2, 1.0);
        let z = Field::zeros(&g);
        for r in minkowski_counting(&f, &z, 3.0, 2.0).unwrap() {
            assert!((r.lhs - r.rhs).abs() < 1e-14 && r.passed);
        }
        assert!(minkowski_counting(&f, &z, 2.0, 3.0).is_err());
    }

    #[test]
    fn uniform_convexity_special_pairs() {
        let g = Grid::<f64>::new_1d(1.0, 5).unwrap();
        let u = Field::noise(&g, 8, 1.0);
        for p in [1.5, 3.0] {
            assert!(uniform_convexity_suite(&u, &u, p).unwrap().passed);
            assert!(uniform_convexity_suite(&u, &u.scale(-1.0), p).unwrap().passed);
        }
        let m = convexity_modulus(3.0, 200, 1).unwrap();
        assert!(m.pairs == 200 && m.min_delta > 0.0);
    }

    #[test]
    fn small_random_sweep_has_no_hard_failures() {
        for s in random_sweeps(200, 5).unwrap() {
            if s.hard {
                assert_eq!(s.failures, 0, "{s:?}");
            }
        }
    }
}
