//! Soft-core two-electron Hamiltonian terms.

use std::sync::Arc;

use crate::grid::Grid2D;

/// Soft-core attraction of one electron to the doubly charged core.
#[inline]
pub fn ion_potential(x: f64) -> f64 {
    -2.0 / (1.0 + x * x).sqrt()
}

/// Soft-core electron-electron repulsion.
#[inline]
pub fn repulsion(x1: f64, x2: f64) -> f64 {
    let d = x1 - x2;
    1.0 / (1.0 + d * d).sqrt()
}

/// Static potential `V(x1, x2)` in atomic units.
#[inline]
pub fn static_potential(x1: f64, x2: f64) -> f64 {
    ion_potential(x1) + ion_potential(x2) + repulsion(x1, x2)
}

/// Tabulated static potential; the dipole term `-(x1 + x2) E(t)` is applied
/// by the propagator from the axis coordinates.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub grid: Arc<Grid2D>,
    pub values: Vec<f64>,
}

impl PotentialField {
    /// Dipole coupling coefficient `d(x1, x2) = -(x1 + x2)` multiplying E(t).
    #[inline]
    pub fn dipole(x1: f64, x2: f64) -> f64 {
        -(x1 + x2)
    }

    #[inline]
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[self.grid.index(i1, i2)]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_potential(grid: Arc<Grid2D>) -> PotentialField {
    let x = grid.axis().x();
    let values = x
        .iter()
        .flat_map(|&a| x.iter().map(move |&b| static_potential(a, b)))
        .collect();
    PotentialField { grid, values }
}
