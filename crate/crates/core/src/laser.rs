//! Laser waveforms in atomic units.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Intensity corresponding to a field amplitude of 1 a.u.
pub const ATOMIC_INTENSITY_W_CM2: f64 = 3.50945e16;
/// `ω[a.u.] = NM_TO_AU_FREQUENCY / λ[nm]`.
pub const NM_TO_AU_FREQUENCY: f64 = 45.5633526;

pub fn intensity_to_field(intensity_w_cm2: f64) -> Result<f64> {
    if !(intensity_w_cm2.is_finite() && intensity_w_cm2 > 0.0) {
        return Err(Error::Domain(format!(
            "intensity must be positive, got {intensity_w_cm2}"
        )));
    }
    Ok((intensity_w_cm2 / ATOMIC_INTENSITY_W_CM2).sqrt())
}

pub fn wavelength_to_omega(wavelength_nm: f64) -> f64 {
    NM_TO_AU_FREQUENCY / wavelength_nm
}

/// Largest admissible linear chirp for a Gaussian of width `T`: `1/(2T²)`.
pub fn chirp_limit(t_width: f64) -> f64 {
    1.0 / (2.0 * t_width * t_width)
}

/// Gaussian width whose intensity FWHM equals three optical cycles.
pub fn default_gaussian_width(omega: f64) -> f64 {
    3.0 * (2.0 * PI / omega) / (2.0 * LN_2).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum PulseShape {
    /// Linear rise over `ramp_cycles`, flat top, linear fall; `n_cycles` total.
    Trapezoid { n_cycles: f64, ramp_cycles: f64 },
    /// `exp(-t²/T²) cos(ω t + γ t²)` centred at `t = 0`, simulated on
    /// `[-span·T, span·T]`.
    Gaussian { width: f64, chirp: f64, span: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    pub wavelength_nm: f64,
    pub peak_intensity_w_cm2: f64,
    /// Peak field amplitude in a.u. (may differ from the intensity value after
    /// fluence normalization).
    pub amplitude: f64,
}

impl PulseSpec {
    pub fn trapezoid(wavelength_nm: f64, intensity: f64, n_cycles: f64) -> Result<Self> {
        if !(n_cycles > 0.0) {
            return Err(Error::Domain("cycle count must be positive".into()));
        }
        Ok(Self {
            shape: PulseShape::Trapezoid {
                n_cycles,
                ramp_cycles: n_cycles / 3.0,
            },
            wavelength_nm,
            peak_intensity_w_cm2: intensity,
            amplitude: intensity_to_field(intensity)?,
        })
    }

    /// Gaussian pulse; `width = None` picks [`default_gaussian_width`],
    /// `chirp_sign` in {-1, 0, 1} selects `γ = sign / (2T²)`.
    pub fn gaussian(
        wavelength_nm: f64,
        intensity: f64,
        width: Option<f64>,
        chirp_sign: i32,
        span: f64,
    ) -> Result<Self> {
        let omega = wavelength_to_omega(wavelength_nm);
        let width = width.unwrap_or_else(|| default_gaussian_width(omega));
        if !(width > 0.0) {
            return Err(Error::Domain("Gaussian width must be positive".into()));
        }
        if !(-1..=1).contains(&chirp_sign) {
            return Err(Error::Domain(format!("chirp sign must be -1, 0 or 1, got {chirp_sign}")));
        }
        Ok(Self {
            shape: PulseShape::Gaussian {
                width,
                chirp: chirp_sign as f64 * chirp_limit(width),
                span,
            },
            wavelength_nm,
            peak_intensity_w_cm2: intensity,
            amplitude: intensity_to_field(intensity)?,
        })
    }

    pub fn omega(&self) -> f64 {
        wavelength_to_omega(self.wavelength_nm)
    }

    /// Optical period `2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega()
    }

    pub fn start_time(&self) -> f64 {
        match self.shape {
            PulseShape::Trapezoid { .. } => 0.0,
            PulseShape::Gaussian { width, span, .. } => -span * width,
        }
    }

    pub fn end_time(&self) -> f64 {
        match self.shape {
            PulseShape::Trapezoid { n_cycles, .. } => n_cycles * self.period(),
            PulseShape::Gaussian { width, span, .. } => span * width,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Time at which the envelope first reaches its peak.
    pub fn peak_time(&self) -> f64 {
        match self.shape {
            PulseShape::Trapezoid { ramp_cycles, .. } => ramp_cycles * self.period(),
            PulseShape::Gaussian { .. } => 0.0,
        }
    }

    pub fn envelope(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Trapezoid {
                n_cycles,
                ramp_cycles,
            } => {
                let tc = self.period();
                let rise = ramp_cycles * tc;
                let total = n_cycles * tc;
                let shape = if t <= 0.0 || t >= total {
                    0.0
                } else if t < rise {
                    t / rise
                } else if t <= total - rise {
                    1.0
                } else {
                    (total - t) / rise
                };
                self.amplitude * shape
            }
            PulseShape::Gaussian { width, .. } => {
                self.amplitude * (-(t * t) / (width * width)).exp()
            }
        }
    }

    pub fn carrier_phase(&self, t: f64) -> f64 {
        match self.shape {
            PulseShape::Trapezoid { .. } => self.omega() * t,
            PulseShape::Gaussian { chirp, .. } => self.omega() * t + chirp * t * t,
        }
    }

    pub fn field_at(&self, t: f64) -> f64 {
        self.envelope(t) * self.carrier_phase(t).cos()
    }

    /// `∫E² dt` by composite Simpson quadrature over the simulated window
    /// (Gaussian: `±6T` regardless of span).
    pub fn fluence(&self) -> f64 {
        let (a, b) = match self.shape {
            PulseShape::Trapezoid { .. } => (self.start_time(), self.end_time()),
            PulseShape::Gaussian { width, .. } => (-6.0 * width, 6.0 * width),
        };
        let steps_per_cycle = 400.0;
        let mut m = ((b - a) / self.period() * steps_per_cycle).ceil() as usize;
        if m % 2 == 1 {
            m += 1;
        }
        let h = (b - a) / m as f64;
        let e2 = |t: f64| {
            let e = self.field_at(t);
            e * e
        };
        let mut acc = e2(a) + e2(b);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * e2(a + i as f64 * h);
        }
        acc * h / 3.0
    }
}

/// Rescales the amplitude of a chirped Gaussian so its fluence equals that of
/// the transform-limited `reference`.
pub fn normalize_energy(pulse: &PulseSpec, reference: &PulseSpec) -> Result<PulseSpec> {
    match (pulse.shape, reference.shape) {
        (PulseShape::Gaussian { width: w1, .. }, PulseShape::Gaussian { width: w2, chirp, .. }) => {
            if (w1 - w2).abs() > 1e-12 * w2 || (pulse.omega() - reference.omega()).abs() > 1e-12 {
                return Err(Error::Domain(
                    "fluence normalization needs equal width and carrier".into(),
                ));
            }
            if chirp != 0.0 {
                return Err(Error::Domain("reference pulse must be unchirped".into()));
            }
        }
        _ => return Err(Error::Domain("fluence normalization applies to Gaussian pulses".into())),
    }
    let target = reference.fluence();
    if !(target > 0.0) {
        return Err(Error::Domain("reference fluence is zero".into()));
    }
    let current = pulse.fluence();
    if !(current > 0.0) {
        return Err(Error::Domain("pulse fluence is zero".into()));
    }
    let mut out = *pulse;
    out.amplitude *= (target / current).sqrt();
    Ok(out)
}
