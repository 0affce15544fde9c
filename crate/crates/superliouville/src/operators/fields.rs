//! Node-indexed field containers over a uniform grid.
//!
//! Values are stored row-major: index = j·nx + i for node (i, j), so x₁
//! varies fastest. Every field carries a copy of its grid (grids are small
//! `Copy` values), which keeps dimension checks local and cheap.

use crate::clifford2d::Spinor;
use crate::geometry::Grid;
use num_complex::Complex64;

/// Real scalar field (one f64 per node); houses u.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
}

/// Complex field (one ℂ value per node); houses T(z) and derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

/// Spinor field (one 2-component complex spinor per node); houses ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField {
    pub grid: Grid,
    pub values: Vec<Spinor>,
}

macro_rules! field_common {
    ($name:ident, $elem:ty, $zero:expr) => {
        impl $name {
            /// Zero-filled field over `grid`.
            pub fn zeros(grid: Grid) -> Self {
                Self {
                    grid,
                    values: vec![$zero; grid.len()],
                }
            }

            /// Field built by evaluating `f` at every node.
            pub fn from_fn(grid: Grid, mut f: impl FnMut(crate::clifford2d::Vector2) -> $elem) -> Self {
                let mut values = Vec::with_capacity(grid.len());
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        values.push(f(grid.node(i, j)));
                    }
                }
                Self { grid, values }
            }

            #[inline(always)]
            pub fn at(&self, i: usize, j: usize) -> $elem {
                self.values[self.grid.idx(i, j)]
            }

            #[inline(always)]
            pub fn at_mut(&mut self, i: usize, j: usize) -> &mut $elem {
                let idx = self.grid.idx(i, j);
                &mut self.values[idx]
            }
        }
    };
}

field_common!(ScalarField, f64, 0.0);
field_common!(ComplexField, Complex64, Complex64::new(0.0, 0.0));
field_common!(SpinorField, Spinor, Spinor::ZERO);

impl ScalarField {
    /// Max of |values| over interior nodes (boundary ring excluded).
    pub fn interior_inf_norm(&self) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                m = m.max(self.values[g.idx(i, j)].abs());
            }
        }
        m
    }

    /// Max of |values| over nodes at least `ring` nodes away from the boundary.
    pub fn inf_norm_inset(&self, ring: usize) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for j in ring..g.ny - ring {
            for i in ring..g.nx - ring {
                m = m.max(self.values[g.idx(i, j)].abs());
            }
        }
        m
    }
}

impl SpinorField {
    /// Max of |ψ| over interior nodes (boundary ring excluded).
    pub fn interior_inf_norm(&self) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                m = m.max(self.values[g.idx(i, j)].norm());
            }
        }
        m
    }

    /// Max of |ψ| over all nodes.
    pub fn inf_norm(&self) -> f64 {
        self.values.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }
}

impl ComplexField {
    /// Max of |values| over nodes at least `ring` nodes away from the boundary.
    pub fn inf_norm_inset(&self, ring: usize) -> f64 {
        let g = self.grid;
        let mut m = 0.0f64;
        for j in ring..g.ny - ring {
            for i in ring..g.nx - ring {
                m = m.max(self.values[g.idx(i, j)].norm());
            }
        }
        m
    }
}
