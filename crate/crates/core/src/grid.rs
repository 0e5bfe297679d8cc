//! Uniform periodic grids in atomic units.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// One axis of the simulation box: `n` points spanning `[-L, L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    half_width: f64,
    n: usize,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
}

impl Axis {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        let dx = 2.0 * half_width / n as f64;
        let x = (0..n).map(|i| -half_width + i as f64 * dx).collect();
        let dk = PI / half_width;
        // standard FFT ordering: 0, 1, ..., n/2-1, -n/2, ..., -1
        let k = (0..n)
            .map(|i| {
                let m = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                m as f64 * dk
            })
            .collect();
        Ok(Self {
            half_width,
            n,
            dx,
            x,
            k,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dk(&self) -> f64 {
        PI / self.half_width
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    /// Index of the grid point at `x = 0`.
    pub fn origin_index(&self) -> usize {
        self.n / 2
    }

    /// Fractional grid coordinate of a position.
    pub fn fractional_index(&self, x: f64) -> f64 {
        (x + self.half_width) / self.dx
    }

    /// True when `x` lies in `[x_0, x_{n-1}]`.
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x >= self.x[0] && x <= self.x[self.n - 1]
    }
}

/// Square two-electron grid; both coordinates share one [`Axis`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    axis: Axis,
}

impl Grid2D {
    pub fn new(half_width: f64, points_per_axis: usize) -> Result<Self> {
        Ok(Self {
            axis: Axis::new(half_width, points_per_axis)?,
        })
    }

    pub fn from_axis(axis: Axis) -> Self {
        Self { axis }
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
    }

    pub fn n(&self) -> usize {
        self.axis.n
    }

    pub fn half_width(&self) -> f64 {
        self.axis.half_width
    }

    pub fn dx(&self) -> f64 {
        self.axis.dx
    }

    /// Area element `dx1 dx2`.
    pub fn cell_area(&self) -> f64 {
        self.axis.dx * self.axis.dx
    }

    pub fn len(&self) -> usize {
        self.axis.n * self.axis.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Row-major (x1-major) flat index.
    #[inline]
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis.n + i2
    }

    /// A smaller grid with the same spacing centred on the origin, or `None`
    /// when it would not be strictly smaller.
    pub fn compact_with_half_width(&self, min_half_width: f64) -> Option<Grid2D> {
        let mut n = 16usize;
        while (n as f64) * self.axis.dx / 2.0 < min_half_width {
            n *= 2;
        }
        if n >= self.axis.n {
            return None;
        }
        let half = n as f64 * self.axis.dx / 2.0;
        Grid2D::new(half, n).ok()
    }
}
