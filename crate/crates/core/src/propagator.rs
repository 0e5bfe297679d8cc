//! Second-order split-operator propagation of the two-electron state.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::par;
use crate::potential::PotentialField;
use crate::wavefunction::WaveFunction2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    Real,
    Imaginary,
}

/// Precomputed factors for `exp(-iV dt/2) exp(-iT dt) exp(-iV dt/2)`
/// (imaginary mode: `dt -> -i dt`).
#[derive(Debug, Clone)]
pub struct SplitOperator {
    mode: TimeMode,
    dt: f64,
    fft: Fft2,
    half_potential: Vec<Complex64>,
    kinetic_1d: Vec<Complex64>,
    x: Vec<f64>,
    field_1d: Vec<Complex64>,
}

impl SplitOperator {
    pub fn new(pot: &PotentialField, dt: f64, mode: TimeMode) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Domain(format!("time step must be positive, got {dt}")));
        }
        let grid = &pot.grid;
        let n = grid.n();
        let half_potential = pot
            .values
            .iter()
            .map(|&v| match mode {
                TimeMode::Real => Complex64::from_polar(1.0, -v * dt / 2.0),
                TimeMode::Imaginary => Complex64::new((-v * dt / 2.0).exp(), 0.0),
            })
            .collect();
        // the 1/n per axis folds the inverse-FFT normalization in
        let scale = 1.0 / n as f64;
        let kinetic_1d = grid
            .axis()
            .k()
            .iter()
            .map(|&k| {
                let a = k * k * dt / 2.0;
                match mode {
                    TimeMode::Real => Complex64::from_polar(scale, -a),
                    TimeMode::Imaginary => Complex64::new(scale * (-a).exp(), 0.0),
                }
            })
            .collect();
        Ok(Self {
            mode,
            dt,
            fft: Fft2::new(n),
            half_potential,
            kinetic_1d,
            x: grid.axis().x().to_vec(),
            field_1d: vec![Complex64::new(1.0, 0.0); n],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn mode(&self) -> TimeMode {
        self.mode
    }

    fn apply_half_potential(&self, psi: &mut [Complex64], with_field: bool) {
        let n = self.x.len();
        let hp = &self.half_potential;
        let f = &self.field_1d;
        par::for_each_chunk_mut(psi, n, |i, row| {
            let pot = &hp[i * n..(i + 1) * n];
            if with_field {
                let fi = f[i];
                for ((v, p), fj) in row.iter_mut().zip(pot).zip(f) {
                    *v *= p * fi * fj;
                }
            } else {
                for (v, p) in row.iter_mut().zip(pot) {
                    *v *= p;
                }
            }
        });
    }

    fn apply_kinetic(&self, psi: &mut [Complex64]) {
        let n = self.x.len();
        self.fft.forward_transposed(psi);
        let kin = &self.kinetic_1d;
        // transposed layout: row index is k2, column index is k1
        par::for_each_chunk_mut(psi, n, |r, row| {
            let kr = kin[r];
            for (v, kc) in row.iter_mut().zip(kin) {
                *v *= kr * kc;
            }
        });
        self.fft.inverse_from_transposed(psi);
    }

    /// One step. `field` is E at the step midpoint (ignored in imaginary mode).
    pub fn step(&mut self, psi: &mut WaveFunction2D, field: f64) -> Result<()> {
        let with_field = self.mode == TimeMode::Real && field != 0.0;
        if with_field {
            // dipole term −(x1+x2)E: exp(i x E dt/2) per axis
            let s = field * self.dt / 2.0;
            for (f, &x) in self.field_1d.iter_mut().zip(&self.x) {
                *f = Complex64::from_polar(1.0, x * s);
            }
        }
        self.apply_half_potential(&mut psi.values, with_field);
        self.apply_kinetic(&mut psi.values);
        self.apply_half_potential(&mut psi.values, with_field);
        match self.mode {
            TimeMode::Real => psi.time += self.dt,
            TimeMode::Imaginary => {
                let norm = psi.normalize();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(Error::PropagationDiverged { time: psi.time });
                }
            }
        }
        if !psi.norm_sqr().is_finite() {
            return Err(Error::PropagationDiverged { time: psi.time });
        }
        Ok(())
    }
}

/// Single step with a freshly built operator.
pub fn propagate_step(
    psi: &mut WaveFunction2D,
    pot: &PotentialField,
    field: f64,
    dt: f64,
    mode: TimeMode,
) -> Result<()> {
    SplitOperator::new(pot, dt, mode)?.step(psi, field)
}

/// `⟨T⟩` evaluated spectrally.
pub fn kinetic_energy(psi: &WaveFunction2D, fft: &Fft2) -> f64 {
    let n = psi.n();
    let mut buf = psi.values.clone();
    fft.forward_transposed(&mut buf);
    let k = psi.grid.axis().k();
    let rows: Vec<f64> = par::map_range(n, |r| {
        let kr2 = k[r] * k[r];
        buf[r * n..(r + 1) * n]
            .iter()
            .zip(k)
            .map(|(v, kc)| v.norm_sqr() * (kr2 + kc * kc))
            .sum::<f64>()
    });
    0.5 * rows.iter().sum::<f64>() * psi.grid.cell_area() / (n * n) as f64
}

/// `⟨V⟩` for the static potential.
pub fn potential_energy(psi: &WaveFunction2D, pot: &PotentialField) -> f64 {
    psi.values
        .iter()
        .zip(&pot.values)
        .map(|(c, v)| c.norm_sqr() * v)
        .sum::<f64>()
        * psi.grid.cell_area()
}

/// Field-free energy `⟨Ψ|H|Ψ⟩` of a normalized state.
pub fn energy(psi: &WaveFunction2D, pot: &PotentialField) -> Result<f64> {
    energy_with(psi, pot, &Fft2::new(psi.n()))
}

pub fn energy_with(psi: &WaveFunction2D, pot: &PotentialField, fft: &Fft2) -> Result<f64> {
    let norm = psi.norm_sqr();
    if !((norm - 1.0).abs() <= 1e-6) {
        return Err(Error::InvalidState { norm });
    }
    Ok(kinetic_energy(psi, fft) + potential_energy(psi, pot))
}
