use serde::{Deserialize, Serialize};

/// Coordinate layout of a product space `M x (R^k)^levels`.
///
/// `base_dim` counts ambient base coordinates (d for R^d, d+1 for the sphere
/// and hyperboloid models, 3 for the Heisenberg group).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub levels: usize,
}

impl Layout {
    pub fn new(base_dim: usize, fiber_dim: usize, levels: usize) -> Self {
        Self {
            base_dim,
            fiber_dim,
            levels,
        }
    }

    pub fn total(&self) -> usize {
        self.base_dim + self.fiber_dim * self.levels
    }

    /// Flat index of fiber coordinate `j` on level `level` (1-based level).
    pub fn fiber_index(&self, level: usize, j: usize) -> usize {
        debug_assert!(level >= 1 && level <= self.levels && j < self.fiber_dim);
        self.base_dim + (level - 1) * self.fiber_dim + j
    }

    pub fn fiber_range(&self, level: usize) -> std::ops::Range<usize> {
        let start = self.base_dim + (level - 1) * self.fiber_dim;
        start..start + self.fiber_dim
    }

    /// All fiber coordinates, every level.
    pub fn fibers_range(&self) -> std::ops::Range<usize> {
        self.base_dim..self.total()
    }
}

/// A point `(p, xi^(1), ..., xi^(n))` stored as one flat coordinate vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductPoint {
    pub layout: Layout,
    pub coords: Vec<f64>,
}

impl ProductPoint {
    pub fn new(layout: Layout, coords: Vec<f64>) -> Self {
        assert_eq!(
            coords.len(),
            layout.total(),
            "coordinate count does not match layout"
        );
        Self { layout, coords }
    }

    pub fn from_parts(base: &[f64], fibers: &[&[f64]]) -> Self {
        let fiber_dim = fibers.first().map_or(0, |f| f.len());
        let layout = Layout::new(base.len(), fiber_dim, fibers.len());
        let mut coords = base.to_vec();
        for f in fibers {
            assert_eq!(f.len(), fiber_dim);
            coords.extend_from_slice(f);
        }
        Self { layout, coords }
    }

    pub fn base(&self) -> &[f64] {
        &self.coords[..self.layout.base_dim]
    }

    pub fn base_mut(&mut self) -> &mut [f64] {
        &mut self.coords[..self.layout.base_dim]
    }

    pub fn fiber(&self, level: usize) -> &[f64] {
        &self.coords[self.layout.fiber_range(level)]
    }

    pub fn fiber_mut(&mut self, level: usize) -> &mut [f64] {
        let r = self.layout.fiber_range(level);
        &mut self.coords[r]
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
