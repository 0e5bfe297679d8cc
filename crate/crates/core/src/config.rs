//! Run configuration: a sectioned TOML file with typed keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laser::{self, PulseSpec};
use crate::phase::{PhaseParams, Pooling};

pub const MIN_INTENSITY_W_CM2: f64 = 1e13;
pub const MAX_INTENSITY_W_CM2: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Fast,
    Full,
}

impl Profile {
    /// Box half width and points per axis.
    pub fn grid(self) -> (f64, usize) {
        match self {
            Profile::Fast => (100.0, 1024),
            Profile::Full => (200.0, 2048),
        }
    }

    /// Largest reduced-density-matrix dimension handed to the eigensolver.
    pub fn max_rdm_dim(self) -> usize {
        match self {
            Profile::Fast => 1024,
            Profile::Full => 512,
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Profile::Fast),
            "full" => Ok(Profile::Full),
            other => Err(Error::Config(format!("unknown profile `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "Nx")]
    pub points: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeName {
    Trapezoid,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub shape: ShapeName,
    pub wavelength_nm: f64,
    pub intensity_w_cm2: f64,
    pub n_cycles: f64,
    #[serde(rename = "gaussian_T_au", default, skip_serializing_if = "Option::is_none")]
    pub gaussian_width: Option<f64>,
    #[serde(default)]
    pub chirp_sign: i32,
    /// Gaussian propagation window `[-span·T, span·T]`.
    #[serde(default = "default_span")]
    pub gaussian_span: f64,
}

fn default_span() -> f64 {
    3.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryConfig {
    #[serde(rename = "N")]
    pub count: usize,
    pub seed: u64,
    /// Storage stride outside the phase window.
    pub store_decimation: usize,
    /// Walkers written to the trajectory CSV (NSDI walkers first).
    #[serde(default = "default_csv_walkers")]
    pub csv_walkers: usize,
    /// Sample stride of the trajectory CSV.
    #[serde(default = "default_csv_stride")]
    pub csv_stride: usize,
}

fn default_csv_walkers() -> usize {
    200
}

fn default_csv_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseConfig {
    pub bins: usize,
    pub sigma_h: f64,
    pub window_cycles: f64,
    pub pooling_mode: Pooling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdqmcConfig {
    pub enabled: bool,
    #[serde(rename = "N")]
    pub count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub intensities: Vec<f64>,
    #[serde(default)]
    pub chirp_signs: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub profile: Profile,
    pub output: PathBuf,
    /// Defaults to the profile grid when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    pub pulse: PulseConfig,
    pub trajectories: TrajectoryConfig,
    pub phase: PhaseConfig,
    pub tdqmc: TdqmcConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Replaces the grid by the profile's box.
    pub fn set_profile(&mut self, profile: Profile) {
        self.profile = profile;
        let dt = self.grid().dt;
        let (half_width, points) = profile.grid();
        self.grid = Some(GridConfig {
            half_width,
            points,
            dt,
        });
    }

    pub fn grid(&self) -> GridConfig {
        self.grid.clone().unwrap_or_else(|| {
            let (half_width, points) = self.profile.grid();
            GridConfig {
                half_width,
                points,
                dt: 0.03,
            }
        })
    }

    pub fn phase_params(&self) -> PhaseParams {
        PhaseParams {
            bins: self.phase.bins,
            sigma_h: self.phase.sigma_h,
            pooling: self.phase.pooling_mode,
            ..PhaseParams::default()
        }
    }

    /// Copy of this config pinned to one scan point.
    pub fn at_point(&self, intensity: f64, chirp_sign: i32) -> Self {
        let mut cfg = self.clone();
        cfg.pulse.intensity_w_cm2 = intensity;
        cfg.pulse.chirp_sign = chirp_sign;
        cfg.scan = None;
        cfg
    }

    /// Pulse with the configured intensity; chirped Gaussians are rescaled to
    /// the fluence of the unchirped pulse of the same peak intensity.
    pub fn pulse_spec(&self) -> Result<PulseSpec> {
        let p = &self.pulse;
        match p.shape {
            ShapeName::Trapezoid => PulseSpec::trapezoid(p.wavelength_nm, p.intensity_w_cm2, p.n_cycles),
            ShapeName::Gaussian => {
                let make = |sign| {
                    PulseSpec::gaussian(
                        p.wavelength_nm,
                        p.intensity_w_cm2,
                        p.gaussian_width,
                        sign,
                        p.gaussian_span,
                    )
                };
                let pulse = make(p.chirp_sign)?;
                if p.chirp_sign == 0 {
                    Ok(pulse)
                } else {
                    laser::normalize_energy(&pulse, &make(0)?)
                }
            }
        }
    }

    /// Scan points sorted by (chirp sign, intensity).
    pub fn scan_points(&self) -> Vec<(i32, f64)> {
        let Some(scan) = &self.scan else {
            return vec![(self.pulse.chirp_sign, self.pulse.intensity_w_cm2)];
        };
        let signs = if scan.chirp_signs.is_empty() {
            vec![self.pulse.chirp_sign]
        } else {
            scan.chirp_signs.clone()
        };
        let mut pts: Vec<(i32, f64)> = signs
            .iter()
            .flat_map(|&s| scan.intensities.iter().map(move |&i| (s, i)))
            .collect();
        pts.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup();
        pts
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        let g = self.grid();
        if !(g.half_width > 0.0) || !(g.dt > 0.0) {
            return bad("grid L and dt must be positive".into());
        }
        if g.points < 4 || !g.points.is_power_of_two() {
            return bad(format!("grid Nx must be a power of two >= 4, got {}", g.points));
        }
        let p = &self.pulse;
        if !(p.wavelength_nm > 0.0) || !(p.n_cycles > 0.0) || !(p.gaussian_span > 0.0) {
            return bad("pulse wavelength, cycle count and span must be positive".into());
        }
        if p.gaussian_width.is_some_and(|w| !(w > 0.0)) {
            return bad("gaussian_T_au must be positive".into());
        }
        if !(-1..=1).contains(&p.chirp_sign) {
            return bad(format!("chirp_sign must be -1, 0 or 1, got {}", p.chirp_sign));
        }
        check_intensity(p.intensity_w_cm2)?;
        let t = &self.trajectories;
        if t.count == 0 || t.store_decimation == 0 || t.csv_stride == 0 {
            return bad("trajectory N, store_decimation and csv_stride must be positive".into());
        }
        let ph = &self.phase;
        if ph.bins == 0 || !(ph.sigma_h > 0.0) || !(ph.window_cycles > 0.0) {
            return bad("phase bins, sigma_h and window_cycles must be positive".into());
        }
        if p.shape == ShapeName::Trapezoid {
            // flat top plus rise
            let limit = 2.0 * p.n_cycles / 3.0;
            if ph.window_cycles > limit + 1e-12 {
                return bad(format!(
                    "window_cycles {} exceeds rise plus flat top ({limit} cycles)",
                    ph.window_cycles
                ));
            }
        }
        if self.tdqmc.enabled && self.tdqmc.count == 0 {
            return bad("tdqmc N must be positive".into());
        }
        if self.tdqmc.smoothing.is_some_and(|s| !(s > 0.0)) {
            return bad("tdqmc smoothing must be positive".into());
        }
        if let Some(scan) = &self.scan {
            if scan.intensities.is_empty() {
                return bad("scan needs at least one intensity".into());
            }
            for &i in &scan.intensities {
                check_intensity(i)?;
            }
            if let Some(s) = scan.chirp_signs.iter().find(|s| !(-1..=1).contains(*s)) {
                return bad(format!("chirp_signs entries must be -1, 0 or 1, got {s}"));
            }
        }
        Ok(())
    }
}

fn check_intensity(i: f64) -> Result<()> {
    if (MIN_INTENSITY_W_CM2..=MAX_INTENSITY_W_CM2).contains(&i) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "intensity {i:e} W/cm² outside [{MIN_INTENSITY_W_CM2:e}, {MAX_INTENSITY_W_CM2:e}]"
        )))
    }
}
