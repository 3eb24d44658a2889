//! Axis-aligned Dirichlet boxes in one or two dimensions.
//!
//! A grid stores only interior nodes. Boundary nodes sit at index `-1` and
//! `nodes` along each axis and always carry the value zero. Node `i` along an
//! axis is located at `origin + (i + 1) * h`.

use crate::error::{PcglError, Result};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    nodes: [usize; 2],
    h: [T; 2],
    origin: [T; 2],
}

impl<T: Real> Grid<T> {
    /// Unit-origin 1D grid on `[0, extent]` with `nodes` interior nodes.
    pub fn new_1d(extent: T, nodes: usize) -> Result<Self> {
        Self::new(&[extent], &[nodes])
    }

    pub fn new_2d(extent: [T; 2], nodes: [usize; 2]) -> Result<Self> {
        Self::new(&extent, &nodes)
    }

    /// Builds a grid from per-axis extents and interior node counts, with the
    /// lower boundary at the origin.
    pub fn new(extent: &[T], nodes: &[usize]) -> Result<Self> {
        let dim = extent.len();
        if !(dim == 1 || dim == 2) || nodes.len() != dim {
            return Err(PcglError::Domain(format!(
                "grid dimension must be 1 or 2 with matching node counts (got {} extents, {} counts)",
                extent.len(),
                nodes.len()
            )));
        }
        let mut h = [T::one(); 2];
        let mut n = [1usize; 2];
        for axis in 0..dim {
            if nodes[axis] == 0 {
                return Err(PcglError::Domain("grid needs at least one interior node per axis".into()));
            }
            if !(extent[axis] > T::zero()) || !extent[axis].is_finite() {
                return Err(PcglError::Domain(format!("extent must be positive and finite, got {}", extent[axis])));
            }
            n[axis] = nodes[axis];
            h[axis] = extent[axis] / T::from_usize_lossy(nodes[axis] + 1);
        }
        Ok(Self { dim, nodes: n, h, origin: [T::zero(); 2] })
    }

    /// Builds a grid from a spacing instead of an extent.
    pub fn from_spacing(h: &[T], nodes: &[usize], origin: &[T]) -> Result<Self> {
        if h.len() != nodes.len() || origin.len() != nodes.len() {
            return Err(PcglError::Domain("spacing, node count and origin must have the same length".into()));
        }
        let extent: Vec<T> = h.iter().zip(nodes).map(|(&h, &n)| h * T::from_usize_lossy(n + 1)).collect();
        let mut g = Self::new(&extent, nodes)?;
        let d = g.dim;
        g.h[..d].copy_from_slice(&h[..d]);
        g.origin[..d].copy_from_slice(&origin[..d]);
        Ok(g)
    }

    /// Shifts the lower boundary to `origin`.
    pub fn with_origin(mut self, origin: &[T]) -> Self {
        for (axis, &o) in origin.iter().enumerate().take(self.dim) {
            self.origin[axis] = o;
        }
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nodes(&self, axis: usize) -> usize {
        self.nodes[axis]
    }

    pub fn node_counts(&self) -> &[usize] {
        &self.nodes[..self.dim]
    }

    pub fn h(&self, axis: usize) -> T {
        self.h[axis]
    }

    pub fn spacings(&self) -> &[T] {
        &self.h[..self.dim]
    }

    pub fn origin(&self, axis: usize) -> T {
        self.origin[axis]
    }

    pub fn extent(&self, axis: usize) -> T {
        self.h[axis] * T::from_usize_lossy(self.nodes[axis] + 1)
    }

    /// Smallest spacing over all axes.
    pub fn h_min(&self) -> T {
        self.spacings().iter().copied().fold(T::infinity(), T::min)
    }

    /// Number of interior nodes.
    pub fn len(&self) -> usize {
        self.nodes[0] * self.nodes[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of forward-difference cells, `(nodes + 1)` per axis.
    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|a| self.nodes[a] + 1).product()
    }

    /// Cells per axis (1 along the unused axis in 1D).
    pub(crate) fn cells_per_axis(&self) -> [usize; 2] {
        let mut c = [1, 1];
        for (axis, c) in c.iter_mut().enumerate().take(self.dim) {
            *c = self.nodes[axis] + 1;
        }
        c
    }

    /// Quadrature weight `h^N`.
    pub fn cell_volume(&self) -> T {
        self.spacings().iter().copied().fold(T::one(), |a, b| a * b)
    }

    /// Row-major linear index: the last axis varies fastest.
    #[inline]
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        ix * self.nodes[1] + iy
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.nodes[1], idx % self.nodes[1])
    }

    /// Physical position of node `idx` (second entry is zero in 1D).
    pub fn position(&self, idx: usize) -> [T; 2] {
        let (ix, iy) = self.coords(idx);
        let mut p = [T::zero(); 2];
        p[0] = self.origin[0] + self.h[0] * T::from_usize_lossy(ix + 1);
        if self.dim == 2 {
            p[1] = self.origin[1] + self.h[1] * T::from_usize_lossy(iy + 1);
        }
        p
    }

    /// Per-axis node shift mapping this grid into `parent`, i.e. child node
    /// `i` coincides with parent node `i + shift`.
    pub fn nesting_shift(&self, parent: &Grid<T>) -> Result<[usize; 2]> {
        if self.dim != parent.dim {
            return Err(PcglError::NotNested(format!("dimension {} inside dimension {}", self.dim, parent.dim)));
        }
        let mut shift = [0usize; 2];
        for (axis, slot) in shift.iter_mut().enumerate().take(self.dim) {
            let (hc, hp) = (self.h[axis], parent.h[axis]);
            if (hc - hp).abs() > T::lit(1e-12) * hp {
                return Err(PcglError::NotNested(format!(
                    "axis {axis}: spacing {hc} differs from parent spacing {hp}"
                )));
            }
            let s = (self.origin[axis] - parent.origin[axis]) / hp;
            let r = s.round();
            if (s - r).abs() > T::lit(1e-9) || r < T::zero() {
                return Err(PcglError::NotNested(format!(
                    "axis {axis}: origin offset {s} parent spacings is not a nonnegative integer"
                )));
            }
            let r = r.to_usize().unwrap_or(usize::MAX);
            if r + self.nodes[axis] > parent.nodes[axis] {
                return Err(PcglError::NotNested(format!(
                    "axis {axis}: child nodes {}..{} exceed parent node count {}",
                    r,
                    r + self.nodes[axis],
                    parent.nodes[axis]
                )));
            }
            *slot = r;
        }
        Ok(shift)
    }

    pub fn is_nested_in(&self, parent: &Grid<T>) -> bool {
        self.nesting_shift(parent).is_ok()
    }

    /// Concentric box of physical width `width` per axis with the same spacing,
    /// centred at the centre of `self`.
    pub fn concentric_child(&self, width: &[T]) -> Result<Self> {
        let mut nodes = [1usize; 2];
        let mut origin = [T::zero(); 2];
        for axis in 0..self.dim {
            let h = self.h[axis];
            let cells = (width[axis] / h).round();
            let n = cells.to_usize().unwrap_or(0);
            if n < 2 {
                return Err(PcglError::Domain(format!("box width {} too small for spacing {h}", width[axis])));
            }
            nodes[axis] = n - 1;
            let centre = self.origin[axis] + self.extent(axis) / T::lit(2.0);
            origin[axis] = centre - h * T::from_usize_lossy(n) / T::lit(2.0);
        }
        let g = Self::from_spacing(&self.h[..self.dim], &nodes[..self.dim], &origin[..self.dim])?;
        g.nesting_shift(self)?;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_is_extent_over_cells() {
        let g = Grid::new_1d(1.0, 63).unwrap();
        assert_eq!(g.h(0), 1.0 / 64.0);
        assert_eq!(g.len(), 63);
        assert_eq!(g.cell_count(), 64);
        let g2 = Grid::new_2d([1.0, 2.0], [3, 7]).unwrap();
        assert_eq!(g2.h(1), 0.25);
        assert_eq!(g2.cell_count(), 4 * 8);
        assert_eq!(g2.cell_volume(), 0.25 * 0.25);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new_1d(1.0, 0).is_err());
        assert!(Grid::new_1d(-1.0, 3).is_err());
        assert!(Grid::<f64>::new(&[1.0, 1.0, 1.0], &[2, 2, 2]).is_err());
    }

    #[test]
    fn concentric_children_nest() {
        let parent = Grid::from_spacing(&[0.125], &[127], &[-8.0]).unwrap();
        let child = parent.concentric_child(&[4.0]).unwrap();
        assert_eq!(child.nodes(0), 31);
        assert_eq!(child.nesting_shift(&parent).unwrap()[0], 48);
        let mid = parent.concentric_child(&[8.0]).unwrap();
        assert!(child.is_nested_in(&mid));
        assert!(!mid.is_nested_in(&child));
    }

    #[test]
    fn misaligned_origin_is_not_nested() {
        let parent = Grid::from_spacing(&[0.1], &[20], &[0.0]).unwrap();
        let child = Grid::from_spacing(&[0.1], &[5], &[0.05]).unwrap();
        assert!(matches!(child.nesting_shift(&parent), Err(PcglError::NotNested(_))));
    }
}
