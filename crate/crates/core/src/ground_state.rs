//! Imaginary-time relaxation to the two-electron ground state.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::Grid2D;
use crate::potential::build_potential;
use crate::propagator::{energy_with, SplitOperator, TimeMode};
use crate::wavefunction::WaveFunction2D;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxParams {
    pub dt_imag: f64,
    pub tol: f64,
    pub seed_sigma: f64,
    pub max_iterations: usize,
    /// Relax first on a centred sub-box of this half width (same spacing),
    /// then embed into the full grid and continue there.
    pub compact_half_width: Option<f64>,
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            dt_imag: 0.01,
            tol: 1e-10,
            seed_sigma: 1.0,
            max_iterations: 200_000,
            compact_half_width: Some(25.0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub psi: WaveFunction2D,
    pub energy: f64,
    pub iterations: usize,
    /// Energy after every iteration, across both stages.
    pub energies: Vec<f64>,
}

fn relax_from(
    mut psi: WaveFunction2D,
    params: &RelaxParams,
    energies: &mut Vec<f64>,
) -> Result<(WaveFunction2D, f64, usize)> {
    let pot = build_potential(psi.grid.clone());
    let fft = Fft2::new(psi.n());
    let mut op = SplitOperator::new(&pot, params.dt_imag, TimeMode::Imaginary)?;
    psi.normalize();
    let mut prev = energy_with(&psi, &pot, &fft)?;
    let mut last_delta = f64::INFINITY;
    for it in 1..=params.max_iterations {
        op.step(&mut psi, 0.0)?;
        let e = energy_with(&psi, &pot, &fft)?;
        energies.push(e);
        last_delta = (e - prev).abs();
        prev = e;
        if last_delta < params.tol {
            return Ok((psi, e, it));
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: params.max_iterations,
        last_delta,
    })
}

/// Relaxes a symmetric Gaussian seed until successive energies differ by
/// less than `params.tol`, then symmetrizes under `x1 <-> x2`.
pub fn relax_ground_state(grid: Arc<Grid2D>, params: &RelaxParams) -> Result<Relaxation> {
    if !(params.tol > 0.0) {
        return Err(Error::Domain("relaxation tolerance must be positive".into()));
    }
    let mut energies = Vec::new();
    let mut iterations = 0;
    let start = match params
        .compact_half_width
        .and_then(|w| grid.compact_with_half_width(w))
    {
        Some(small) => {
            let seed = WaveFunction2D::gaussian_seed(Arc::new(small), params.seed_sigma);
            let (psi, _, it) = relax_from(seed, params, &mut energies)?;
            iterations += it;
            psi.embed_into(grid.clone())?
        }
        None => WaveFunction2D::gaussian_seed(grid.clone(), params.seed_sigma),
    };
    let (mut psi, _, it) = relax_from(start, params, &mut energies)?;
    iterations += it;
    psi.symmetrize();
    psi.normalize();
    psi.time = 0.0;
    let pot = build_potential(grid);
    let energy = energy_with(&psi, &pot, &Fft2::new(psi.n()))?;
    Ok(Relaxation {
        psi,
        energy,
        iterations,
        energies,
    })
}
