//! Boundary absorber with ionization-channel bookkeeping of removed probability.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::grid::{Axis, Grid2D};
use crate::wavefunction::WaveFunction2D;

/// Probability removed (or present) per ionization channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ChannelProbabilities {
    pub di: f64,
    pub si: f64,
    pub bound: f64,
}

impl ChannelProbabilities {
    pub fn total(&self) -> f64 {
        self.di + self.si + self.bound
    }
}

impl std::ops::AddAssign for ChannelProbabilities {
    fn add_assign(&mut self, rhs: Self) {
        self.di += rhs.di;
        self.si += rhs.si;
        self.bound += rhs.bound;
    }
}

/// Channel of a grid cell given the ionization threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Double,
    Single,
    Bound,
}

#[inline]
pub fn region(x1: f64, x2: f64, threshold: f64) -> Region {
    match (x1.abs() > threshold, x2.abs() > threshold) {
        (true, true) => Region::Double,
        (true, false) | (false, true) => Region::Single,
        (false, false) => Region::Bound,
    }
}

/// One-dimensional mask profile: 1 inside `r_abs`, `cos^(1/8)` ramp to 0 at the edge.
pub fn mask_profile(axis: &Axis, r_abs: f64) -> Vec<f64> {
    let l = axis.half_width();
    axis.x()
        .iter()
        .map(|&x| {
            let a = x.abs();
            if a <= r_abs {
                1.0
            } else {
                let s = (a - r_abs) / (l - r_abs);
                if s >= 1.0 {
                    return 0.0;
                }
                (0.5 * std::f64::consts::PI * s).cos().max(0.0).powf(0.125)
            }
        })
        .collect()
}

/// Separable mask `m(x1) m(x2)` with removed-probability accumulators.
#[derive(Debug, Clone)]
pub struct AbsorberMask {
    profile: Vec<f64>,
    r_abs: f64,
    threshold: f64,
    absorbing: Vec<usize>,
    pub removed: ChannelProbabilities,
}

impl AbsorberMask {
    /// Ramp over the outer `fraction` of each half axis.
    pub fn new(grid: &Grid2D, fraction: f64, threshold: f64) -> Self {
        let r_abs = grid.half_width() * (1.0 - fraction);
        Self::with_profile(grid, mask_profile(grid.axis(), r_abs), r_abs, threshold)
    }

    pub fn with_profile(grid: &Grid2D, profile: Vec<f64>, r_abs: f64, threshold: f64) -> Self {
        assert_eq!(profile.len(), grid.n());
        let absorbing = profile
            .iter()
            .enumerate()
            .filter(|(_, &m)| m < 1.0)
            .map(|(i, _)| i)
            .collect();
        Self {
            profile,
            r_abs,
            threshold,
            absorbing,
            removed: ChannelProbabilities::default(),
        }
    }

    /// Mask ≡ 1.
    pub fn identity(grid: &Grid2D, threshold: f64) -> Self {
        Self::with_profile(grid, vec![1.0; grid.n()], grid.half_width(), threshold)
    }

    pub fn profile(&self) -> &[f64] {
        &self.profile
    }

    pub fn r_abs(&self) -> f64 {
        self.r_abs
    }

    pub fn value(&self, i1: usize, i2: usize) -> f64 {
        self.profile[i1] * self.profile[i2]
    }

    /// Multiplies Ψ by the mask; returns the probability removed in this call
    /// (also added to the running accumulators).
    pub fn apply(&mut self, psi: &mut WaveFunction2D) -> ChannelProbabilities {
        let n = psi.n();
        let x = psi.grid.axis().x().to_vec();
        let area = psi.grid.cell_area();
        let mut removed = ChannelProbabilities::default();
        let mut visit = |i: usize, j: usize, m: f64, v: &mut Complex64| {
            let lost = (1.0 - m * m) * v.norm_sqr() * area;
            match region(x[i], x[j], self.threshold) {
                Region::Double => removed.di += lost,
                Region::Single => removed.si += lost,
                Region::Bound => removed.bound += lost,
            }
            *v *= m;
        };
        for i in 0..n {
            let mi = self.profile[i];
            let row = &mut psi.values[i * n..(i + 1) * n];
            if mi < 1.0 {
                for (j, v) in row.iter_mut().enumerate() {
                    visit(i, j, mi * self.profile[j], v);
                }
            } else {
                for &j in &self.absorbing {
                    visit(i, j, self.profile[j], &mut row[j]);
                }
            }
        }
        self.removed += removed;
        removed
    }
}
