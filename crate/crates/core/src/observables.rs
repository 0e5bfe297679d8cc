//! Ionization yields, one-body reduced density matrices, von Neumann entropy
//! and inverse purity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::absorber::{region, ChannelProbabilities, Region};
use crate::error::{Error, Result};
use crate::wavefunction::WaveFunction2D;

pub const DEFAULT_THRESHOLD: f64 = 5.0;

/// Probability on the grid split into double/single/bound regions.
pub fn region_probabilities(psi: &WaveFunction2D, threshold: f64) -> ChannelProbabilities {
    let n = psi.n();
    let x = psi.grid.axis().x();
    let mut out = ChannelProbabilities::default();
    for i in 0..n {
        let row = &psi.values[i * n..(i + 1) * n];
        let mut acc = ChannelProbabilities::default();
        for (j, v) in row.iter().enumerate() {
            let p = v.norm_sqr();
            match region(x[i], x[j], threshold) {
                Region::Double => acc.di += p,
                Region::Single => acc.si += p,
                Region::Bound => acc.bound += p,
            }
        }
        out += acc;
    }
    let a = psi.grid.cell_area();
    ChannelProbabilities {
        di: out.di * a,
        si: out.si * a,
        bound: out.bound * a,
    }
}

/// Double-ionization yield: `|x1|, |x2| > threshold` plus absorbed DI probability.
pub fn di_yield(psi: &WaveFunction2D, absorbed_di: f64, threshold: f64) -> f64 {
    region_probabilities(psi, threshold).di + absorbed_di
}

/// Single-ionization yield: exactly one coordinate beyond threshold plus absorbed SI.
pub fn si_yield(psi: &WaveFunction2D, absorbed_si: f64, threshold: f64) -> f64 {
    region_probabilities(psi, threshold).si + absorbed_si
}

/// Trace-normalized one-body density matrix on a 1D grid, stored with the
/// quadrature weight folded in so its eigenvalues are occupation numbers.
#[derive(Debug, Clone)]
pub struct ReducedDensityMatrix {
    pub matrix: DMatrix<Complex64>,
    /// Spacing of the points the matrix is sampled on.
    pub spacing: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Electron {
    First,
    Second,
}

impl ReducedDensityMatrix {
    /// Wraps an unnormalized Hermitian matrix and trace-normalizes it.
    pub fn from_unnormalized(mut matrix: DMatrix<Complex64>, spacing: f64) -> Result<Self> {
        let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
        if !(trace > 0.0 && trace.is_finite()) {
            return Err(Error::Domain("density matrix has zero trace".into()));
        }
        matrix /= Complex64::new(trace, 0.0);
        Ok(Self { matrix, spacing })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).sum()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        let m = &self.matrix;
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in descending order (raw, not clamped).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.matrix.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    /// `Tr ρ²`, computed from matrix elements.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// `ρ(x, x') = Σ_j Ψ(x, x2_j) Ψ*(x', x2_j) dx`, trace-normalized.
///
/// `stride > 1` samples `x, x'` on every `stride`-th grid point (the partner
/// coordinate is always summed over the full grid).
pub fn reduced_density_matrix_strided(
    psi: &WaveFunction2D,
    electron: Electron,
    stride: usize,
) -> Result<ReducedDensityMatrix> {
    let n = psi.n();
    let stride = stride.max(1);
    if psi.norm_sqr() <= 0.0 {
        return Err(Error::Domain("zero-norm wavefunction".into()));
    }
    let rows: Vec<usize> = (0..n).step_by(stride).collect();
    // amplitude matrix: rows = kept coordinate, cols = traced coordinate
    let a = DMatrix::from_fn(rows.len(), n, |r, c| match electron {
        Electron::First => psi.at(rows[r], c),
        Electron::Second => psi.at(c, rows[r]),
    });
    let rho = &a * a.adjoint();
    ReducedDensityMatrix::from_unnormalized(rho, psi.grid.dx() * stride as f64)
}

pub fn reduced_density_matrix(psi: &WaveFunction2D) -> Result<ReducedDensityMatrix> {
    reduced_density_matrix_strided(psi, Electron::First, 1)
}

/// Stride keeping at most `max_dim` sample points per axis.
pub fn coarsening_stride(n: usize, max_dim: usize) -> usize {
    let mut s = 1;
    while n / s > max_dim {
        s *= 2;
    }
    s
}

/// Clamps a spectrum: values in `[-1e-10, 0)` become 0, values above 1 become 1.
fn clamp_spectrum(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    eigenvalues
        .iter()
        .map(|&l| {
            if l < -1e-10 {
                Err(Error::NumericalHermiticity(l))
            } else {
                Ok(l.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// `-Σ λ ln λ` in nats with `0 ln 0 = 0`.
pub fn entropy_from_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    Ok(clamp_spectrum(eigenvalues)?
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum())
}

pub fn inverse_purity_from_spectrum(eigenvalues: &[f64]) -> Result<f64> {
    let p: f64 = clamp_spectrum(eigenvalues)?.iter().map(|l| l * l).sum();
    Ok(1.0 / p)
}

pub fn von_neumann_entropy(rho: &ReducedDensityMatrix) -> Result<f64> {
    entropy_from_spectrum(&rho.eigenvalues())
}

pub fn inverse_purity(rho: &ReducedDensityMatrix) -> Result<f64> {
    inverse_purity_from_spectrum(&rho.eigenvalues())
}

/// Entanglement measures of the exact state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entanglement {
    pub entropy_nats: f64,
    pub inverse_purity: f64,
    pub stride: usize,
}

pub fn entanglement(psi: &WaveFunction2D, max_dim: usize) -> Result<Entanglement> {
    let stride = coarsening_stride(psi.n(), max_dim);
    let rho = reduced_density_matrix_strided(psi, Electron::First, stride)?;
    let ev = rho.eigenvalues();
    Ok(Entanglement {
        entropy_nats: entropy_from_spectrum(&ev)?,
        inverse_purity: inverse_purity_from_spectrum(&ev)?,
        stride,
    })
}
