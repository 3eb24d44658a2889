//! R²-valued nodal fields, staggered gradients and the rotation `I`.
//!
//! A complex value `u1 + i u2` is stored as the pair `[u1, u2]`. Multiplying
//! by the imaginary unit becomes the rotation `I (u1, u2) = (-u2, u1)`.
//!
//! Gradients use forward differences anchored at nodes `-1..n-1` per axis,
//! so a grid with `n` interior nodes per axis has `n + 1` cells per axis and
//! every edge difference (including the ones touching the Dirichlet wall)
//! appears exactly once. The divergence is defined as the exact negative
//! adjoint of the gradient, which makes summation by parts exact.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{PcglError, Result};
use crate::grid::Grid;
use crate::scalar::{compensated_sum, Real};

#[inline]
pub fn rotate<T: Real>(v: [T; 2]) -> [T; 2] {
    [-v[1], v[0]]
}

#[inline]
pub fn dot2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2<T: Real>(a: [T; 2]) -> T {
    (a[0] * a[0] + a[1] * a[1]).sqrt()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: Grid<T>,
    values: Vec<[T; 2]>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self { grid: grid.clone(), values: vec![[T::zero(); 2]; grid.len()] }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<[T; 2]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PcglError::ShapeMismatch(format!(
                "{} values for a grid with {} interior nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(PcglError::Domain("field values must be finite".into()));
        }
        Ok(Self { grid: grid.clone(), values })
    }

    /// Samples `f` at every interior node position.
    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut([T; 2]) -> [T; 2]) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.position(i))).collect();
        Self { grid: grid.clone(), values }
    }

    /// Nodewise independent uniform noise in `[-amplitude, amplitude]²`.
    pub fn noise(grid: &Grid<T>, seed: u64, amplitude: T) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random(grid, &mut rng, amplitude)
    }

    /// Piecewise constant noise on a `cells^N` lattice covering the grid's
    /// box. Grids of the same box sample the same function.
    pub fn step_noise(grid: &Grid<T>, seed: u64, amplitude: T, cells: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lattice = cells.pow(grid.dim() as u32);
        let table: Vec<[T; 2]> = (0..lattice)
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..=1.0);
                let b: f64 = rng.gen_range(-1.0..=1.0);
                [T::lit(a) * amplitude, T::lit(b) * amplitude]
            })
            .collect();
        let cell_of = |x: T, axis: usize| {
            let rel = (x - grid.origin(axis)) / grid.extent(axis);
            let c = (rel * T::from_usize_lossy(cells)).floor().to_usize().unwrap_or(0);
            c.min(cells - 1)
        };
        Self::from_fn(grid, |x| {
            let mut k = cell_of(x[0], 0);
            if grid.dim() == 2 {
                k = k * cells + cell_of(x[1], 1);
            }
            table[k]
        })
    }

    pub fn random<R: Rng + ?Sized>(grid: &Grid<T>, rng: &mut R, amplitude: T) -> Self {
        let values = (0..grid.len())
            .map(|_| {
                let a: f64 = rng.gen_range(-1.0..=1.0);
                let b: f64 = rng.gen_range(-1.0..=1.0);
                [T::lit(a) * amplitude, T::lit(b) * amplitude]
            })
            .collect();
        Self { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[[T; 2]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[T; 2]] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<[T; 2]> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v[0].is_finite() && v[1].is_finite())
    }

    pub fn map(&self, mut f: impl FnMut([T; 2]) -> [T; 2]) -> Self {
        Self { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, mut f: impl FnMut([T; 2], [T; 2]) -> [T; 2]) -> Self {
        debug_assert_eq!(self.len(), other.len());
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Self { grid: self.grid.clone(), values }
    }

    /// Nodewise application of `I`.
    pub fn rotate_i(&self) -> Self {
        self.map(rotate)
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|v| [v[0] * s, v[1] * s])
    }

    /// `self += a * x`
    pub fn axpy(&mut self, a: T, x: &Self) {
        debug_assert_eq!(self.len(), x.len());
        for (v, w) in self.values.iter_mut().zip(&x.values) {
            v[0] += a * w[0];
            v[1] += a * w[1];
        }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.grid.node_counts() != other.grid.node_counts() {
            return Err(PcglError::ShapeMismatch(format!(
                "fields on grids with node counts {:?} and {:?}",
                self.grid.node_counts(),
                other.grid.node_counts()
            )));
        }
        Ok(())
    }

    /// L² inner product `(U, V) = h^N Σ (u1 v1 + u2 v2)`.
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.len(), other.len());
        let s = compensated_sum(self.values.iter().zip(&other.values).map(|(&a, &b)| dot2(a, b)));
        s * self.grid.cell_volume()
    }

    pub fn try_dot(&self, other: &Self) -> Result<T> {
        self.check_shape(other)?;
        Ok(self.dot(other))
    }

    pub fn l2_norm_sq(&self) -> T {
        self.dot(self)
    }

    pub fn l2_norm(&self) -> T {
        self.l2_norm_sq().sqrt()
    }

    /// `|U|_{L^e}` with `|U|^e = |u1|^e + |u2|^e` integrated.
    pub fn lp_norm(&self, exponent: T) -> Result<T> {
        if !(exponent >= T::one()) {
            return Err(PcglError::Domain(format!("norm exponent must be >= 1, got {exponent}")));
        }
        let s = compensated_sum(self.values.iter().map(|v| v[0].abs().powf(exponent) + v[1].abs().powf(exponent)));
        Ok((s * self.grid.cell_volume()).powf(T::one() / exponent))
    }

    /// `(∫ |U(x)|_{R²}^e dx)^{1/e}` with the Euclidean pointwise magnitude.
    pub fn magnitude_lp_norm(&self, exponent: T) -> T {
        let s = compensated_sum(self.values.iter().map(|&v| norm2(v).powf(exponent)));
        (s * self.grid.cell_volume()).powf(T::one() / exponent)
    }

    pub fn max_magnitude(&self) -> T {
        self.values.iter().map(|&v| norm2(v)).fold(T::zero(), T::max)
    }

    /// Places this child field at the coinciding nodes of `parent`, zero elsewhere.
    pub fn zero_extend(&self, parent: &Grid<T>) -> Result<Self> {
        let shift = self.grid.nesting_shift(parent)?;
        let mut out = Field::zeros(parent);
        for (i, &v) in self.values.iter().enumerate() {
            let (ix, iy) = self.grid.coords(i);
            out.values[parent.index(ix + shift[0], iy + shift[1])] = v;
        }
        Ok(out)
    }

    /// Reads this parent field at the nodes of `child`.
    pub fn restrict(&self, child: &Grid<T>) -> Result<Self> {
        let shift = child.nesting_shift(&self.grid)?;
        let values = (0..child.len())
            .map(|i| {
                let (ix, iy) = child.coords(i);
                self.values[self.grid.index(ix + shift[0], iy + shift[1])]
            })
            .collect();
        Ok(Field { grid: child.clone(), values })
    }

    /// True when every node outside `child` holds zero.
    pub fn supported_in(&self, child: &Grid<T>) -> Result<bool> {
        let shift = child.nesting_shift(&self.grid)?;
        let inside = |ix: usize, iy: usize| {
            ix >= shift[0] && ix < shift[0] + child.nodes(0) && iy >= shift[1] && iy < shift[1] + child.nodes(1)
        };
        Ok(self.values.iter().enumerate().all(|(i, v)| {
            let (ix, iy) = self.grid.coords(i);
            inside(ix, iy) || (v[0] == T::zero() && v[1] == T::zero())
        }))
    }
}

impl<T: Real> Add for &Field<T> {
    type Output = Field<T>;
    fn add(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| [a[0] + b[0], a[1] + b[1]])
    }
}

impl<T: Real> Sub for &Field<T> {
    type Output = Field<T>;
    fn sub(self, rhs: Self) -> Field<T> {
        self.zip_map(rhs, |a, b| [a[0] - b[0], a[1] - b[1]])
    }
}

impl<T: Real> Neg for &Field<T> {
    type Output = Field<T>;
    fn neg(self) -> Field<T> {
        self.map(|a| [-a[0], -a[1]])
    }
}

impl<T: Real> Mul<T> for &Field<T> {
    type Output = Field<T>;
    fn mul(self, s: T) -> Field<T> {
        self.scale(s)
    }
}

impl<'a, T: Real> AddAssign<&'a Field<T>> for Field<T> {
    fn add_assign(&mut self, rhs: &'a Field<T>) {
        self.axpy(T::one(), rhs);
    }
}

impl<'a, T: Real> SubAssign<&'a Field<T>> for Field<T> {
    fn sub_assign(&mut self, rhs: &'a Field<T>) {
        self.axpy(-T::one(), rhs);
    }
}

/// Cellwise gradient `∇U = (∇u1, ∇u2)`.
///
/// Each cell stores `2N` entries laid out as `[∂1 u1, .., ∂N u1, ∂1 u2, .., ∂N u2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GradField<T> {
    grid: Grid<T>,
    data: Vec<T>,
}

impl<T: Real> GradField<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self { grid: grid.clone(), data: vec![T::zero(); grid.cell_count() * 2 * grid.dim()] }
    }

    pub fn from_data(grid: &Grid<T>, data: Vec<T>) -> Result<Self> {
        let expected = grid.cell_count() * 2 * grid.dim();
        if data.len() != expected {
            return Err(PcglError::ShapeMismatch(format!(
                "gradient data of length {} (expected {expected})",
                data.len()
            )));
        }
        Ok(Self { grid: grid.clone(), data })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Entries per cell (`2N`).
    pub fn width(&self) -> usize {
        2 * self.grid.dim()
    }

    pub fn cell_count(&self) -> usize {
        self.grid.cell_count()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn cell(&self, c: usize) -> &[T] {
        let w = self.width();
        &self.data[c * w..(c + 1) * w]
    }

    /// Pointwise magnitude `|∇U| = (|∇u1|² + |∇u2|²)^{1/2}` per cell.
    pub fn magnitudes(&self) -> Vec<T> {
        self.data.chunks_exact(self.width()).map(|c| c.iter().map(|&x| x * x).sum::<T>().sqrt()).collect()
    }

    /// `(∫ |∇U|^p)^{1/p}` with the Euclidean 2N magnitude.
    pub fn lp_norm(&self, p: T) -> T {
        let s = compensated_sum(self.magnitudes().into_iter().map(|m| m.powf(p)));
        (s * self.grid.cell_volume()).powf(T::one() / p)
    }

    /// Cellwise `I`: `(∇u1, ∇u2) -> (-∇u2, ∇u1)`.
    pub fn rotate_i(&self) -> Self {
        let n = self.grid.dim();
        let mut out = self.clone();
        for (src, dst) in self.data.chunks_exact(2 * n).zip(out.data.chunks_exact_mut(2 * n)) {
            for a in 0..n {
                dst[a] = -src[n + a];
                dst[n + a] = src[a];
            }
        }
        out
    }

    pub fn dot(&self, other: &Self) -> T {
        let s = compensated_sum(self.data.iter().zip(&other.data).map(|(&a, &b)| a * b));
        s * self.grid.cell_volume()
    }
}

/// Forward-difference gradient with zero Dirichlet ghost values.
pub fn grad<T: Real>(u: &Field<T>) -> GradField<T> {
    let mut data = Vec::new();
    grad_into(&u.grid, &u.values, &mut data);
    GradField { grid: u.grid.clone(), data }
}

/// [`grad`] of the node values `u` on `grid`, written into `data`.
pub(crate) fn grad_into<T: Real>(grid: &Grid<T>, u: &[[T; 2]], data: &mut Vec<T>) {
    let n = grid.dim();
    let [cx, cy] = grid.cells_per_axis();
    data.clear();
    data.reserve(cx * cy * 2 * n);
    let ih0 = T::one() / grid.h(0);
    let zero = [T::zero(); 2];
    if n == 1 {
        // cell k spans nodes k - 1 and k
        for k in 0..cx {
            let base = if k == 0 { zero } else { u[k - 1] };
            let end = if k < u.len() { u[k] } else { zero };
            data.push((end[0] - base[0]) * ih0);
            data.push((end[1] - base[1]) * ih0);
        }
    } else {
        let ih1 = T::one() / grid.h(1);
        let (nx, ny) = (grid.nodes(0), grid.nodes(1));
        // shifted coordinates: (i, j) is node (i - 1, j - 1)
        let at = |i: usize, j: usize| {
            if i >= 1 && i <= nx && j >= 1 && j <= ny {
                u[(i - 1) * ny + j - 1]
            } else {
                zero
            }
        };
        for i in 0..cx {
            for j in 0..cy {
                let base = at(i, j);
                let ex = at(i + 1, j);
                let ey = at(i, j + 1);
                data.extend_from_slice(&[
                    (ex[0] - base[0]) * ih0,
                    (ey[0] - base[0]) * ih1,
                    (ex[1] - base[1]) * ih0,
                    (ey[1] - base[1]) * ih1,
                ]);
            }
        }
    }
}

/// Negative adjoint of [`grad`] applied to `w · G`.
///
/// Satisfies `(div_weighted(G, w), V) = -(w G, grad V)` for every field `V`.
pub fn div_weighted<T: Real>(g: &GradField<T>, w: &[T]) -> Result<Field<T>> {
    if w.len() != g.cell_count() {
        return Err(PcglError::ShapeMismatch(format!("{} weights for {} cells", w.len(), g.cell_count())));
    }
    Ok(div_impl(g, Some(w)))
}

/// Unweighted divergence, the negative adjoint of [`grad`].
pub fn div<T: Real>(g: &GradField<T>) -> Field<T> {
    div_impl(g, None)
}

fn div_impl<T: Real>(g: &GradField<T>, w: Option<&[T]>) -> Field<T> {
    let mut values = Vec::new();
    div_into(&g.grid, &g.data, w, &mut values);
    Field { grid: g.grid.clone(), values }
}

/// Divergence of the cell data `flux` (optionally weighted per cell), written into `values`.
pub(crate) fn div_into<T: Real>(grid: &Grid<T>, flux: &[T], w: Option<&[T]>, values: &mut Vec<[T; 2]>) {
    let n = grid.dim();
    let width = 2 * n;
    let [_, cy] = grid.cells_per_axis();
    let (nx, ny) = (grid.nodes(0), grid.nodes(1));
    let wt = |c: usize| w.map_or(T::one(), |w| w[c]);
    let ih0 = T::one() / grid.h(0);
    values.clear();
    values.reserve(grid.len());
    if n == 1 {
        for i in 0..nx {
            let (wp, wo) = (wt(i), wt(i + 1));
            let (prev, own) = (&flux[2 * i..2 * i + 2], &flux[2 * i + 2..2 * i + 4]);
            values.push([(wo * own[0] - wp * prev[0]) * ih0, (wo * own[1] - wp * prev[1]) * ih0]);
        }
    } else {
        let ih1 = T::one() / grid.h(1);
        for ix in 0..nx {
            for iy in 0..ny {
                // the cell anchored at this node, and its neighbours below in x and y
                let (co, cx, cyy) = ((ix + 1) * cy + iy + 1, ix * cy + iy + 1, (ix + 1) * cy + iy);
                let (wo, wx, wy) = (wt(co), wt(cx), wt(cyy));
                let own = &flux[co * width..][..width];
                let px = &flux[cx * width..][..width];
                let py = &flux[cyy * width..][..width];
                values.push([
                    (wo * own[0] - wx * px[0]) * ih0 + (wo * own[1] - wy * py[1]) * ih1,
                    (wo * own[2] - wx * px[2]) * ih0 + (wo * own[3] - wy * py[3]) * ih1,
                ]);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(rotate([1.0, 0.0]), [0.0, 1.0]);
        assert_eq!(rotate([0.0, 1.0]), [-1.0, 0.0]);
        let g = Grid::<f64>::new_2d([1.0, 1.0], [5, 4]).unwrap();
        let u = Field::random(&g, &mut rng(), 1.0);
        assert_eq!(u.rotate_i().rotate_i(), -&u);
        assert!(u.rotate_i().dot(&u).abs() < 1e-15);
        assert_eq!(u.rotate_i().l2_norm(), u.l2_norm());
    }

    #[test]
    fn single_node_gradient_by_hand() {
        let g = Grid::new_1d(2.0, 1).unwrap();
        assert_eq!(g.h(0), 1.0);
        let u = Field::from_values(&g, vec![[1.0, 0.0]]).unwrap();
        let du = grad(&u);
        assert_eq!(du.data(), &[1.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn zero_field_has_zero_gradient_and_norms() {
        let g = Grid::new_2d([1.0, 1.0], [3, 3]).unwrap();
        let z = Field::zeros(&g);
        assert!(grad(&z).data().iter().all(|&x| x == 0.0));
        for e in [1.0, 2.0, 3.5] {
            assert_eq!(z.lp_norm(e).unwrap(), 0.0);
        }
        assert_eq!(grad(&z).lp_norm(3.0), 0.0);
    }

    #[test]
    fn single_node_norm() {
        let g = Grid::new_1d(2.0, 1).unwrap();
        let u = Field::from_values(&g, vec![[3.0, 4.0]]).unwrap();
        assert_eq!(u.l2_norm_sq(), 25.0);
        assert_eq!(u.l2_norm(), 5.0);
        assert_eq!(u.magnitude_lp_norm(2.0), 5.0);
        assert!(u.lp_norm(0.5).is_err());
    }

    #[test]
    fn summation_by_parts_is_exact() {
        for g in [Grid::new_1d(1.0, 9).unwrap(), Grid::new_2d([1.0, 2.0], [6, 5]).unwrap()] {
            let mut r = rng();
            let v = Field::random(&g, &mut r, 1.0);
            let u = Field::random(&g, &mut r, 1.0);
            let gu = grad(&u);
            let w: Vec<f64> = (0..g.cell_count()).map(|_| r.gen_range(0.0..2.0)).collect();
            let lhs = div_weighted(&gu, &w).unwrap().dot(&v);
            let mut wg = gu.clone();
            for (c, chunk) in wg.data_mut().chunks_exact_mut(2 * g.dim()).enumerate() {
                chunk.iter_mut().for_each(|x| *x *= w[c]);
            }
            let rhs = -wg.dot(&grad(&v));
            assert!((lhs - rhs).abs() < 1e-12 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn gradient_commutes_with_rotation() {
        let g = Grid::new_2d([1.0, 1.0], [7, 6]).unwrap();
        let u = Field::random(&g, &mut rng(), 2.0);
        assert_eq!(grad(&u.rotate_i()), grad(&u).rotate_i());
    }

    #[test]
    fn div_rejects_wrong_weight_count() {
        let g = Grid::new_1d(1.0, 4).unwrap();
        let gu = grad(&Field::zeros(&g));
        assert!(matches!(div_weighted(&gu, &[1.0; 3]), Err(PcglError::ShapeMismatch(_))));
    }

    #[test]
    fn unit_weight_divergence_is_three_point_laplacian() {
        let g = Grid::<f64>::new_1d(1.0, 5).unwrap();
        let u = Field::random(&g, &mut rng(), 1.0);
        let lap = div(&grad(&u));
        let h2 = g.h(0) * g.h(0);
        let at = |i: usize| if (1..=5).contains(&i) { u.values()[i - 1][0] } else { 0.0 };
        for i in 0..5 {
            let expect = (at(i) - 2.0 * at(i + 1) + at(i + 2)) / h2;
            assert!((lap.values()[i][0] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_extension_round_trip() {
        let parent = Grid::<f64>::from_spacing(&[0.25, 0.25], &[11, 9], &[0.0, 0.0]).unwrap();
        let child = Grid::from_spacing(&[0.25, 0.25], &[4, 3], &[0.5, 0.75]).unwrap();
        let u = Field::random(&child, &mut rng(), 1.0);
        let ext = u.zero_extend(&parent).unwrap();
        assert_eq!(ext.restrict(&child).unwrap(), u);
        assert!((ext.l2_norm() - u.l2_norm()).abs() < 1e-14);
        assert!(ext.supported_in(&child).unwrap());
        let z = Field::zeros(&child).zero_extend(&parent).unwrap();
        assert_eq!(z, Field::zeros(&parent));
        let other = Grid::from_spacing(&[0.25, 0.25], &[4, 3], &[0.6, 0.75]).unwrap();
        assert!(Field::zeros(&other).zero_extend(&parent).is_err());
    }
}
