//! Preconditioned nonlinear conjugate gradients for
//! `min_V a φ(V) + b ψ(V) + ½|V − U|²`.

use crate::field::{div_into, dot2, grad_into, norm2, Field};
use crate::functionals::{phi_weights_into, smoothing_radius, ProxConfig, ResolventReport};
use crate::scalar::Real;

/// Coefficients of the strongly convex objective `a φ_p + b ψ_q + ½|· − U|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxProblem<T> {
    pub a: T,
    pub p: T,
    pub b: T,
    pub q: T,
}

const RESTART: usize = 50;

/// Objective gradient and Jacobi diagonal at one point, with the buffers
/// needed to recompute them in place.
struct Eval<T> {
    /// `a ∂φ(V) + b ∂ψ(V) + V − U`
    gradient: Field<T>,
    /// Jacobi diagonal of the Hessian.
    diag: Vec<T>,
    /// `∇V` cell data and the matching weights `|∇V|^{p−2}`.
    cells: Vec<T>,
    weights: Vec<T>,
    flux_div: Vec<[T; 2]>,
}

impl<T: Real> Eval<T> {
    fn new(u: &Field<T>) -> Self {
        Self {
            gradient: Field::zeros(u.grid()),
            diag: vec![T::one(); u.len()],
            cells: Vec::new(),
            weights: Vec::new(),
            flux_div: Vec::new(),
        }
    }

    fn compute(&mut self, v: &Field<T>, u: &Field<T>, pb: &ProxProblem<T>, sigma: T) {
        let grid = v.grid();
        let with_phi = pb.a != T::zero();
        if with_phi {
            grad_into(grid, v.values(), &mut self.cells);
            phi_weights_into(&self.cells, 2 * grid.dim(), pb.p, sigma, &mut self.weights);
            div_into(grid, &self.cells, Some(&self.weights), &mut self.flux_div);
        }
        let w = &self.weights;
        let [_, cy] = grid.cells_per_axis();
        let ih0 = T::one() / (grid.h(0) * grid.h(0));
        let ih1 = if grid.dim() == 2 { T::one() / (grid.h(1) * grid.h(1)) } else { T::zero() };
        let (nx, ny) = (grid.nodes(0), grid.nodes(1));
        let e = pb.q - T::lit(2.0);
        let gradient = self.gradient.values_mut();
        let (vs, us) = (v.values(), u.values());
        for ix in 0..nx {
            for iy in 0..ny {
                let k = ix * ny + iy;
                let (vv, uu) = (vs[k], us[k]);
                let mut gk = [vv[0] - uu[0], vv[1] - uu[1]];
                let mut dk = T::one();
                if with_phi {
                    let f = self.flux_div[k];
                    gk[0] -= pb.a * f[0];
                    gk[1] -= pb.a * f[1];
                    let s = if grid.dim() == 1 {
                        (w[ix + 1] + w[ix]) * ih0
                    } else {
                        let own = w[(ix + 1) * cy + iy + 1];
                        (own + w[ix * cy + iy + 1]) * ih0 + (own + w[(ix + 1) * cy + iy]) * ih1
                    };
                    dk += pb.a * s;
                }
                if pb.b != T::zero() {
                    let m = if e == T::zero() { T::one() } else { norm2(vv).pow_nonneg(e) };
                    gk[0] += pb.b * m * vv[0];
                    gk[1] += pb.b * m * vv[1];
                    dk += pb.b * (pb.q - T::one()) * m;
                }
                gradient[k] = gk;
                self.diag[k] = dk;
            }
        }
    }

    /// Second derivative of the objective at the evaluated point `v` along `d`.
    fn curvature(&self, v: &Field<T>, d: &Field<T>, pb: &ProxProblem<T>, sigma: T, scratch: &mut Vec<T>) -> T {
        let mut nodes = T::zero();
        let eq = pb.q - T::lit(2.0);
        for (vv, dv) in v.values().iter().zip(d.values()) {
            let dd = dot2(*dv, *dv);
            nodes += dd;
            if pb.b != T::zero() {
                let m2 = dot2(*vv, *vv);
                if m2 > T::zero() {
                    let m = m2.pow_nonneg(eq / T::lit(2.0));
                    let vd = dot2(*vv, *dv);
                    nodes += pb.b * m * (dd + eq * vd * vd / m2);
                } else if eq == T::zero() {
                    nodes += pb.b * dd;
                }
            }
        }
        let mut cells = T::zero();
        if pb.a != T::zero() {
            grad_into(v.grid(), d.values(), scratch);
            let ep = pb.p - T::lit(2.0);
            let width = 2 * v.grid().dim();
            let pairs = self.cells.chunks_exact(width).zip(scratch.chunks_exact(width));
            for ((cg, cd), &wc) in pairs.zip(&self.weights) {
                let (mut hh, mut gh, mut m2) = (T::zero(), T::zero(), sigma * sigma);
                for (&a, &b) in cg.iter().zip(cd) {
                    hh += b * b;
                    gh += a * b;
                    m2 += a * a;
                }
                cells += wc * hh;
                if m2 > T::zero() {
                    cells += ep * wc * gh * gh / m2;
                }
            }
        }
        (nodes + pb.a * cells) * v.grid().cell_volume()
    }
}

/// Plain L² product, for search quantities that need no compensation.
fn dot<T: Real>(a: &Field<T>, b: &Field<T>) -> T {
    let (mut s0, mut s1) = (T::zero(), T::zero());
    for (x, y) in a.values().iter().zip(b.values()) {
        s0 += x[0] * y[0];
        s1 += x[1] * y[1];
    }
    (s0 + s1) * a.grid().cell_volume()
}

fn precondition_into<T: Real>(r: &Field<T>, diag: &[T], z: &mut Field<T>) {
    for ((zv, rv), &d) in z.values_mut().iter_mut().zip(r.values()).zip(diag) {
        *zv = [rv[0] / d, rv[1] / d];
    }
}

/// Trial points along a search direction, evaluated into a reusable buffer.
struct LineSearch<'a, T> {
    v: &'a Field<T>,
    d: &'a Field<T>,
    u: &'a Field<T>,
    pb: &'a ProxProblem<T>,
    sigma: T,
    point: Field<T>,
    eval: Eval<T>,
    /// Step at which `eval` was last computed.
    evaluated: T,
}

impl<T: Real> LineSearch<'_, T> {
    fn at(&mut self, s: T) -> T {
        for ((p, a), b) in self.point.values_mut().iter_mut().zip(self.v.values()).zip(self.d.values()) {
            *p = [a[0] + s * b[0], a[1] + s * b[1]];
        }
        self.eval.compute(&self.point, self.u, self.pb, self.sigma);
        self.evaluated = s;
        dot(&self.eval.gradient, self.d)
    }

    /// Root of `s ↦ (∇E(V + s d), d)` by bracketing and Illinois steps,
    /// starting from the Newton step `−slope0 / curv`. Leaves `eval` at the
    /// returned step.
    fn run(&mut self, slope0: T, curv: T) -> T {
        let target = T::lit(1e-2) * slope0.abs();
        let (mut lo, mut glo) = (T::zero(), slope0);
        let mut hi = if curv > T::zero() && curv.is_finite() { -slope0 / curv } else { T::one() };
        let mut ghi = self.at(hi);
        if ghi.abs() <= target {
            return hi;
        }
        let mut doublings = 0;
        while ghi < T::zero() && doublings < 60 {
            lo = hi;
            glo = ghi;
            hi *= T::lit(2.0);
            ghi = self.at(hi);
            doublings += 1;
        }
        if ghi <= T::zero() {
            return hi;
        }
        let mut best = (hi, ghi.abs());
        let mut side = 0i8;
        for _ in 0..40 {
            let s = lo - glo * (hi - lo) / (ghi - glo);
            if !(s > lo && s < hi) {
                break;
            }
            let g = self.at(s);
            if g.abs() < best.1 {
                best = (s, g.abs());
            }
            if g.abs() <= target {
                break;
            }
            if g < T::zero() {
                lo = s;
                glo = g;
                if side == -1 {
                    ghi /= T::lit(2.0);
                }
                side = -1;
            } else {
                hi = s;
                ghi = g;
                if side == 1 {
                    glo /= T::lit(2.0);
                }
                side = 1;
            }
        }
        if self.evaluated != best.0 {
            self.at(best.0);
        }
        best.0
    }
}

/// Minimizes the objective of `pb` starting from `guess` (or `U`).
///
/// The reported residual is the L² norm of the objective gradient at the
/// returned iterate, which is the best one seen.
pub fn proximal<T: Real>(
    u: &Field<T>,
    pb: &ProxProblem<T>,
    cfg: &ProxConfig<T>,
    guess: Option<&Field<T>>,
) -> ResolventReport<T> {
    let unorm = u.l2_norm();
    let tol = cfg.tol.max(T::lit(1e-12) * unorm).max(T::lit(100.0) * T::epsilon() * unorm);
    let sigma = if pb.p < T::lit(2.0) { smoothing_radius(u, cfg.sigma_reg) } else { T::zero() };
    let mut v = guess.cloned().unwrap_or_else(|| u.clone());
    let mut ev = Eval::new(u);
    ev.compute(&v, u, pb, sigma);
    let mut res = dot(&ev.gradient, &ev.gradient).sqrt();
    let mut best = (v.clone(), res);
    let report = |best: (Field<T>, T), iterations: usize, converged: bool| ResolventReport {
        output: best.0,
        iterations,
        residual: best.1,
        mu_or_nu: pb.a,
        converged,
    };
    if res <= tol {
        return report(best, 0, true);
    }
    let mut z = Field::zeros(u.grid());
    precondition_into(&ev.gradient, &ev.diag, &mut z);
    let mut d = -&z;
    let mut zr = dot(&z, &ev.gradient);
    let mut trial = Some((Field::zeros(u.grid()), Eval::new(u)));
    let mut scratch = Vec::new();
    for it in 1..=cfg.max_iter {
        let slope = dot(&ev.gradient, &d);
        let curv = ev.curvature(&v, &d, pb, sigma, &mut scratch);
        let (point, eval) = trial.take().expect("trial buffers returned every iteration");
        let mut ls = LineSearch { v: &v, d: &d, u, pb, sigma, point, eval, evaluated: T::nan() };
        let s = ls.run(slope, curv);
        let LineSearch { point, eval, .. } = ls;
        v.axpy(s, &d);
        let old = std::mem::replace(&mut ev, eval);
        res = dot(&ev.gradient, &ev.gradient).sqrt();
        if res < best.1 {
            best.0.values_mut().copy_from_slice(v.values());
            best.1 = res;
        }
        if res <= tol {
            return report(best, it, true);
        }
        if !res.is_finite() {
            break;
        }
        precondition_into(&ev.gradient, &ev.diag, &mut z);
        let zr_new = dot(&z, &ev.gradient);
        let beta = if it % RESTART == 0 { T::zero() } else { (zr_new - dot(&z, &old.gradient)).max(T::zero()) / zr };
        for (dv, zv) in d.values_mut().iter_mut().zip(z.values()) {
            *dv = [beta * dv[0] - zv[0], beta * dv[1] - zv[1]];
        }
        if dot(&ev.gradient, &d) >= T::zero() {
            d = -&z;
        }
        zr = zr_new;
        trial = Some((point, old));
    }
    report(best, cfg.max_iter, false)
}
