//! Time-dependent quantum Monte Carlo: walker pairs, each guided by its own
//! pair of one-body waves, with region-restricted one-body density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::absorber::mask_profile;
use crate::bohmian::{sample_positions, NodeRegularization};
use crate::error::{Error, Result};
use crate::fft::Fft1;
use crate::grid::Axis;
use crate::observables::{
    coarsening_stride, entropy_from_spectrum, ReducedDensityMatrix,
};
use crate::par;
use crate::potential::{ion_potential, repulsion};
use crate::wavefunction::WaveFunction2D;

pub const MIN_SELECTION: usize = 10;
pub const MAX_DEAD_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TdqmcParams {
    /// Include the partner-walker repulsion in each guide's Hamiltonian.
    pub interaction: bool,
    /// Gaussian smearing of the partner position in the repulsion (a.u.).
    pub smoothing: Option<f64>,
    pub regularization: NodeRegularization,
    /// Absorber ramp as a fraction of the half axis.
    pub absorber_fraction: f64,
    pub threshold: f64,
}

impl Default for TdqmcParams {
    fn default() -> Self {
        Self {
            interaction: true,
            smoothing: None,
            regularization: NodeRegularization::default(),
            absorber_fraction: 0.1,
            threshold: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TdqmcConfiguration {
    pub walkers: [f64; 2],
    pub guides: [Vec<Complex64>; 2],
    pub alive: bool,
}

#[derive(Debug, Clone)]
pub struct TdqmcEnsemble {
    pub axis: Axis,
    pub configs: Vec<TdqmcConfiguration>,
    pub seed: u64,
    pub params: TdqmcParams,
    pub time: f64,
    /// Walker positions frozen at pulse end by [`TdqmcEnsemble::assign_tags`].
    pub tagged_positions: Option<Vec<[f64; 2]>>,
    /// Largest `|‖φ‖² − 1|` before the absorber during the last step.
    pub last_norm_defect: f64,
    fft: Fft1,
    mask: Vec<f64>,
    absorbing: Vec<usize>,
    repulsion_table: Option<RepulsionTable>,
}

/// Oversampling of the repulsion phase table relative to the grid spacing.
const TABLE_OVERSAMPLING: f64 = 64.0;

/// `exp(-i V_ee(d) dt/2)` tabulated on `d = m · dx / 64`, nearest-neighbour lookup.
#[derive(Debug, Clone)]
struct RepulsionTable {
    dt: f64,
    step: f64,
    offset: usize,
    values: Vec<Complex64>,
}

impl RepulsionTable {
    fn new(axis: &Axis, dt: f64) -> Self {
        let step = axis.dx() / TABLE_OVERSAMPLING;
        let span = 2.0 * axis.half_width() + axis.dx();
        let offset = (span / step).ceil() as usize + 1;
        let values = (0..2 * offset + 1)
            .map(|m| {
                let d = (m as f64 - offset as f64) * step;
                Complex64::from_polar(1.0, -repulsion(d, 0.0) * dt / 2.0)
            })
            .collect();
        Self {
            dt,
            step,
            offset,
            values,
        }
    }

    /// Table index of `d = x_0 - partner`; grid point `i` then sits at
    /// `base + i * TABLE_OVERSAMPLING`.
    #[inline]
    fn base_index(&self, d: f64) -> usize {
        let f = d / self.step + self.offset as f64 + 0.5;
        f.max(0.0) as usize
    }
}

fn norm_1d(v: &[Complex64], dx: f64) -> f64 {
    (v.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx).sqrt()
}

fn normalize_1d(v: &mut [Complex64], dx: f64) -> f64 {
    let n = norm_1d(v, dx);
    if n > 0.0 {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n
}

/// Linear interpolation of a slice of Ψ along the partner coordinate.
fn conditional_slice(psi: &WaveFunction2D, electron: usize, partner_pos: f64) -> Vec<Complex64> {
    let axis = psi.grid.axis();
    let n = axis.len();
    let f = axis.fractional_index(partner_pos).clamp(0.0, (n - 1) as f64);
    let j = (f.floor() as usize).min(n - 2);
    let t = f - j as f64;
    (0..n)
        .map(|i| {
            let (a, b) = if electron == 0 {
                (psi.at(i, j), psi.at(i, j + 1))
            } else {
                (psi.at(j, i), psi.at(j + 1, i))
            };
            a * (1.0 - t) + b * t
        })
        .collect()
}

/// Samples walker pairs from `|ψ0|²` and attaches the conditional slices
/// `ψ0(·, x2^k)` and `ψ0(x1^k, ·)` as guide waves.
pub fn tdqmc_init(
    psi0: &WaveFunction2D,
    n: usize,
    seed: u64,
    params: TdqmcParams,
) -> Result<TdqmcEnsemble> {
    let positions = sample_positions(psi0, n, seed)?;
    let axis = psi0.grid.axis().clone();
    let dx = axis.dx();
    let configs = par::map(&positions, |&p| {
        let mut g1 = conditional_slice(psi0, 0, p[1]);
        let mut g2 = conditional_slice(psi0, 1, p[0]);
        let ok = normalize_1d(&mut g1, dx) > 0.0 && normalize_1d(&mut g2, dx) > 0.0;
        TdqmcConfiguration {
            walkers: p,
            guides: [g1, g2],
            alive: ok,
        }
    });
    let r_abs = axis.half_width() * (1.0 - params.absorber_fraction);
    let mask = mask_profile(&axis, r_abs);
    Ok(TdqmcEnsemble {
        fft: Fft1::new(axis.len()),
        axis,
        configs,
        seed,
        params,
        time: psi0.time,
        tagged_positions: None,
        last_norm_defect: 0.0,
        absorbing: (0..mask.len()).filter(|&i| mask[i] < 1.0).collect(),
        mask,
        repulsion_table: None,
    })
}

/// One-body guide propagation and walker motion in 1D.
struct Stepper<'a> {
    axis: &'a Axis,
    fft: &'a Fft1,
    mask: &'a [f64],
    absorbing: &'a [usize],
    params: &'a TdqmcParams,
    dt: f64,
    kinetic: Vec<Complex64>,
    /// `exp(-i(V_ion(x) - x E) dt/2)`.
    external: Vec<Complex64>,
    table: Option<&'a RepulsionTable>,
}

impl<'a> Stepper<'a> {
    fn new(ens: &'a TdqmcEnsemble, field: f64, dt: f64) -> Self {
        let n = ens.axis.len() as f64;
        let kinetic = ens
            .axis
            .k()
            .iter()
            .map(|&k| Complex64::from_polar(1.0 / n, -k * k * dt / 2.0))
            .collect();
        let external = ens
            .axis
            .x()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, -(ion_potential(x) - x * field) * dt / 2.0))
            .collect();
        Self {
            axis: &ens.axis,
            fft: &ens.fft,
            mask: &ens.mask,
            absorbing: &ens.absorbing,
            params: &ens.params,
            dt,
            kinetic,
            external,
            table: ens.repulsion_table.as_ref(),
        }
    }

    fn repulsion_at(&self, x: f64, partner: f64) -> f64 {
        match self.params.smoothing {
            None => repulsion(x, partner),
            Some(s) if s > 0.0 => {
                // 9-point Gaussian average over the partner position
                let pts: [f64; 9] = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
                let (mut acc, mut wsum) = (0.0, 0.0);
                for q in pts {
                    let w = (-0.5 * q * q).exp();
                    acc += w * repulsion(x, partner + q * s);
                    wsum += w;
                }
                acc / wsum
            }
            Some(_) => repulsion(x, partner),
        }
    }

    fn propagate_guide(&self, guide: &mut [Complex64], partner: f64, scratch: &mut [Complex64]) {
        let x = self.axis.x();
        let stride = TABLE_OVERSAMPLING as usize;
        let smoothed: Vec<Complex64> = match (self.params.interaction, self.params.smoothing, self.table) {
            (true, None, Some(_)) | (false, _, _) => Vec::new(),
            _ => x
                .iter()
                .zip(&self.external)
                .map(|(&xi, e)| {
                    e * Complex64::from_polar(1.0, -self.repulsion_at(xi, partner) * self.dt / 2.0)
                })
                .collect(),
        };
        let apply_half = |guide: &mut [Complex64]| match (self.params.interaction, self.table) {
            (false, _) => guide.iter_mut().zip(&self.external).for_each(|(g, e)| *g *= e),
            (true, Some(table)) if smoothed.is_empty() => {
                let base = table.base_index(x[0] - partner);
                let last = table.values.len() - 1;
                for (i, (g, e)) in guide.iter_mut().zip(&self.external).enumerate() {
                    *g *= e * table.values[(base + i * stride).min(last)];
                }
            }
            (true, _) => guide.iter_mut().zip(&smoothed).for_each(|(g, h)| *g *= h),
        };
        apply_half(guide);
        self.fft.forward(guide, scratch);
        guide.iter_mut().zip(&self.kinetic).for_each(|(g, k)| *g *= k);
        self.fft.inverse(guide, scratch);
        apply_half(guide);
    }

    /// Advances one configuration; returns the largest deviation of a guide
    /// norm from 1 before the absorber.
    fn step(&self, cfg: &mut TdqmcConfiguration) -> f64 {
        if !cfg.alive {
            return 0.0;
        }
        let dx = self.axis.dx();
        let n = self.axis.len();
        let reg = self.params.regularization;
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.fft.scratch_len()];
        // start-of-step velocity and the old guide values the midpoint
        // stencil will need, captured before the guides are overwritten
        let mut half_pos = [0.0; 2];
        let mut old_local = [[Complex64::new(0.0, 0.0); STENCIL_SPAN]; 2];
        let mut max_rho = [0.0; 2];
        for i in 0..2 {
            let g = &cfg.guides[i];
            max_rho[i] = g.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max);
            let v0 = velocity_1d_floor(self.axis, g, None, cfg.walkers[i], reg, max_rho[i]);
            half_pos[i] = clamp_axis(self.axis, cfg.walkers[i] + 0.5 * self.dt * v0);
            let base = stencil_base(self.axis, half_pos[i]);
            for (s, slot) in old_local[i].iter_mut().enumerate() {
                *slot = g[wrap_index(base, s, n)];
            }
        }
        let partners = [cfg.walkers[1], cfg.walkers[0]];
        let mut defect: f64 = 0.0;
        for (i, guide) in cfg.guides.iter_mut().enumerate() {
            self.propagate_guide(guide, partners[i], &mut scratch);
            defect = defect.max((norm_1d(guide, dx) - 1.0).abs());
        }
        for i in 0..2 {
            let base = stencil_base(self.axis, half_pos[i]);
            let mut mid = [Complex64::new(0.0, 0.0); STENCIL_SPAN];
            for (s, slot) in mid.iter_mut().enumerate() {
                *slot = (old_local[i][s] + cfg.guides[i][wrap_index(base, s, n)]) * 0.5;
            }
            let vm = local_velocity(self.axis, &mid, base, half_pos[i], reg, max_rho[i]);
            let xn = cfg.walkers[i] + self.dt * vm;
            if !xn.is_finite() {
                cfg.alive = false;
                return defect;
            }
            cfg.walkers[i] = clamp_axis(self.axis, xn);
        }
        for guide in cfg.guides.iter_mut() {
            for &i in self.absorbing {
                guide[i] *= self.mask[i];
            }
            let nrm = normalize_1d(guide, dx);
            if !(nrm.is_finite() && nrm > 0.0) {
                cfg.alive = false;
                return defect;
            }
        }
        defect
    }
}

/// Nodes `base-2 ..= base+3` cover the stencils of the two nodes bracketing a point.
const STENCIL_SPAN: usize = 6;

fn stencil_base(axis: &Axis, x: f64) -> usize {
    let n = axis.len();
    let f = axis.fractional_index(x).clamp(0.0, (n - 1) as f64);
    (f.floor() as usize).min(n - 2)
}

#[inline]
fn wrap_index(base: usize, s: usize, n: usize) -> usize {
    (base as isize + s as isize - 2).rem_euclid(n as isize) as usize
}

/// Velocity from the six local values around `base` (slot 2 is node `base`).
fn local_velocity(
    axis: &Axis,
    local: &[Complex64; STENCIL_SPAN],
    base: usize,
    x: f64,
    reg: NodeRegularization,
    max_rho: f64,
) -> f64 {
    let h = 12.0 * axis.dx();
    let floor = reg.epsilon * max_rho;
    let node_v = |c: usize| {
        let p = local[c];
        let d = (-local[c + 2] + local[c + 1] * 8.0 - local[c - 1] * 8.0 + local[c - 2]) / h;
        regularized(p, d, floor, reg)
    };
    let n = axis.len();
    let t = axis.fractional_index(x).clamp(0.0, (n - 1) as f64) - base as f64;
    (1.0 - t) * node_v(2) + t * node_v(3)
}

#[inline]
fn regularized(p: Complex64, d: Complex64, floor: f64, reg: NodeRegularization) -> f64 {
    let rho = p.norm_sqr();
    if rho <= 0.0 {
        return 0.0;
    }
    let v = (d * p.conj()).im / rho;
    if !v.is_finite() {
        0.0
    } else if rho < floor || v.abs() > reg.v_cap {
        v.clamp(-reg.v_cap, reg.v_cap)
    } else {
        v
    }
}

fn clamp_axis(axis: &Axis, x: f64) -> f64 {
    x.clamp(axis.x()[0], axis.x()[axis.len() - 1])
}

/// 1D Bohmian velocity `Im(φ'/φ)` of `a` (or of `(a + b)/2`), 4th-order
/// stencil at the two neighbouring nodes, linearly interpolated.
pub fn velocity_1d(
    axis: &Axis,
    a: &[Complex64],
    b: Option<&[Complex64]>,
    x: f64,
    reg: NodeRegularization,
) -> f64 {
    let max_rho = match b {
        None => a.iter().map(|c| c.norm_sqr()).fold(0.0, f64::max),
        Some(b) => a.iter().zip(b).map(|(p, q)| ((p + q) * 0.5).norm_sqr()).fold(0.0, f64::max),
    };
    velocity_1d_floor(axis, a, b, x, reg, max_rho)
}

fn velocity_1d_floor(
    axis: &Axis,
    a: &[Complex64],
    b: Option<&[Complex64]>,
    x: f64,
    reg: NodeRegularization,
    max_rho: f64,
) -> f64 {
    let n = axis.len();
    let val = |i: usize| match b {
        None => a[i],
        Some(b) => (a[i] + b[i]) * 0.5,
    };
    let floor = reg.epsilon * max_rho;
    let h = 12.0 * axis.dx();
    let wrap = |i: usize, d: isize| ((i as isize + d).rem_euclid(n as isize)) as usize;
    let node_v = |i: usize| {
        let d = (-val(wrap(i, 2)) + val(wrap(i, 1)) * 8.0 - val(wrap(i, -1)) * 8.0
            + val(wrap(i, -2)))
            / h;
        regularized(val(i), d, floor, reg)
    };
    let f = axis.fractional_index(x).clamp(0.0, (n - 1) as f64);
    let i = (f.floor() as usize).min(n - 2);
    let t = f - i as f64;
    let mut v = 0.0;
    if t < 1.0 {
        v += (1.0 - t) * node_v(i);
    }
    if t > 0.0 {
        v += t * node_v(i + 1);
    }
    v
}

/// Region selectors for the restricted density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    All,
    Nsdi,
    /// Complement of `Nsdi`.
    Other,
    Q13,
    Q24,
}

impl Selector {
    pub fn matches(&self, p: [f64; 2], threshold: f64) -> bool {
        match self {
            Selector::All => true,
            Selector::Nsdi => p[0].abs() > threshold && p[1].abs() > threshold,
            Selector::Other => !(p[0].abs() > threshold && p[1].abs() > threshold),
            Selector::Q13 => p[0] * p[1] > 0.0,
            Selector::Q24 => p[0] * p[1] < 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Selector::All => "all",
            Selector::Nsdi => "nsdi",
            Selector::Other => "other",
            Selector::Q13 => "q13",
            Selector::Q24 => "q24",
        }
    }
}

impl TdqmcEnsemble {
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn dead_count(&self) -> usize {
        self.configs.iter().filter(|c| !c.alive).count()
    }

    /// Freezes the current walker positions as channel tags.
    pub fn assign_tags(&mut self) {
        self.tagged_positions = Some(self.configs.iter().map(|c| c.walkers).collect());
    }

    fn positions(&self) -> Vec<[f64; 2]> {
        self.tagged_positions
            .clone()
            .unwrap_or_else(|| self.configs.iter().map(|c| c.walkers).collect())
    }

    /// Indices of live configurations matching `selector`.
    pub fn select(&self, selector: Selector) -> Vec<usize> {
        let pos = self.positions();
        (0..self.len())
            .filter(|&k| self.configs[k].alive && selector.matches(pos[k], self.params.threshold))
            .collect()
    }
}

/// Advances every configuration by one step. Fails when more than 5% of the
/// configurations are dead afterwards.
pub fn tdqmc_step(ens: &mut TdqmcEnsemble, field: f64, dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Domain("time step must be positive".into()));
    }
    if ens.repulsion_table.as_ref().map(|t| t.dt) != Some(dt) {
        ens.repulsion_table = Some(RepulsionTable::new(&ens.axis, dt));
    }
    let mut configs = std::mem::take(&mut ens.configs);
    let defects = {
        let stepper = Stepper::new(ens, field, dt);
        par::map_mut(&mut configs, |c| stepper.step(c))
    };
    ens.last_norm_defect = defects.into_iter().fold(0.0, f64::max);
    ens.configs = configs;
    ens.time += dt;
    let dead = ens.dead_count();
    if dead as f64 > MAX_DEAD_FRACTION * ens.len() as f64 {
        return Err(Error::TooManyDead {
            what: "TDQMC configurations",
            dead,
            total: ens.len(),
        });
    }
    Ok(())
}

/// `Σ_{k∈sel} φ_i^k(x) φ_i^k*(x')` on every `stride`-th point (no normalization).
pub fn unnormalized_density_matrix(
    ens: &TdqmcEnsemble,
    members: &[usize],
    electron: usize,
    stride: usize,
) -> DMatrix<Complex64> {
    let idx: Vec<usize> = (0..ens.axis.len()).step_by(stride.max(1)).collect();
    let a = DMatrix::from_fn(idx.len(), members.len(), |r, c| {
        ens.configs[members[c]].guides[electron][idx[r]]
    });
    let w = ens.axis.dx() * stride.max(1) as f64;
    (&a * a.adjoint()) * Complex64::new(w, 0.0)
}

fn check_selection(members: &[usize], selector: Selector) -> Result<()> {
    if members.len() < MIN_SELECTION {
        return Err(Error::InsufficientSelection {
            channel: selector.name().into(),
            count: members.len(),
            required: MIN_SELECTION,
        });
    }
    Ok(())
}

/// `ρ_i = (1/N_sel) Σ_{k∈sel} φ_i^k φ_i^k†`, trace-normalized.
pub fn restricted_density_matrix(
    ens: &TdqmcEnsemble,
    selector: Selector,
    electron: usize,
) -> Result<ReducedDensityMatrix> {
    let members = ens.select(selector);
    check_selection(&members, selector)?;
    let m = unnormalized_density_matrix(ens, &members, electron, 1);
    ReducedDensityMatrix::from_unnormalized(m, ens.axis.dx())
}

/// Spectrum of the restricted density matrix, through whichever of the
/// grid matrix (coarsened to at most `max_dim` points) or the member Gram
/// matrix is smaller.
pub fn restricted_spectrum(
    ens: &TdqmcEnsemble,
    selector: Selector,
    electron: usize,
    max_dim: usize,
) -> Result<Vec<f64>> {
    let members = ens.select(selector);
    check_selection(&members, selector)?;
    let stride = coarsening_stride(ens.axis.len(), max_dim);
    let grid_dim = ens.axis.len() / stride;
    let matrix = if members.len() <= grid_dim {
        let dx = ens.axis.dx();
        let g = members.len();
        let mut gram = DMatrix::from_element(g, g, Complex64::new(0.0, 0.0));
        for a in 0..g {
            let fa = &ens.configs[members[a]].guides[electron];
            for b in a..g {
                let fb = &ens.configs[members[b]].guides[electron];
                let s: Complex64 = fa.iter().zip(fb).map(|(p, q)| p.conj() * q).sum::<Complex64>() * dx;
                gram[(a, b)] = s;
                gram[(b, a)] = s.conj();
            }
        }
        gram
    } else {
        unnormalized_density_matrix(ens, &members, electron, stride)
    };
    let rho = ReducedDensityMatrix::from_unnormalized(matrix, ens.axis.dx())?;
    Ok(rho.eigenvalues())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntropy {
    pub entropy_nats: Option<f64>,
    pub selected: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelEntropies {
    pub all: ChannelEntropy,
    pub nsdi: ChannelEntropy,
    pub q13: ChannelEntropy,
    pub q24: ChannelEntropy,
}

/// Entropy of electron `electron`'s restricted density matrix for every
/// channel; channels with fewer than [`MIN_SELECTION`] members report `None`.
pub fn entropy_by_channel(
    ens: &TdqmcEnsemble,
    electron: usize,
    max_dim: usize,
) -> Result<ChannelEntropies> {
    let one = |sel: Selector| -> Result<ChannelEntropy> {
        let selected = ens.select(sel).len();
        let entropy_nats = match restricted_spectrum(ens, sel, electron, max_dim) {
            Ok(ev) => Some(entropy_from_spectrum(&ev)?),
            Err(Error::InsufficientSelection { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(ChannelEntropy {
            entropy_nats,
            selected,
        })
    };
    Ok(ChannelEntropies {
        all: one(Selector::All)?,
        nsdi: one(Selector::Nsdi)?,
        q13: one(Selector::Q13)?,
        q24: one(Selector::Q24)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use std::sync::Arc;

    fn product_state(grid: Arc<Grid2D>) -> WaveFunction2D {
        let mut psi = WaveFunction2D::from_fn(grid, |a, b| {
            Complex64::new((-(a * a + b * b) / 2.0).exp(), 0.0)
        });
        psi.normalize();
        psi
    }

    #[test]
    fn separable_init_gives_identical_guides() {
        let g = Arc::new(Grid2D::new(12.0, 64).unwrap());
        let ens = tdqmc_init(&product_state(g.clone()), 50, 5, TdqmcParams::default()).unwrap();
        let reference = &ens.configs[0].guides[0];
        for c in &ens.configs {
            for guide in &c.guides {
                for (a, b) in guide.iter().zip(reference) {
                    assert!((a - b).norm() < 1e-12);
                }
                assert!((norm_1d(guide, g.dx()) - 1.0).abs() < 1e-12);
            }
        }
        assert!(tdqmc_init(&product_state(g), 0, 5, TdqmcParams::default()).is_err());
    }

    #[test]
    fn coherent_ensemble_is_pure() {
        let g = Arc::new(Grid2D::new(12.0, 64).unwrap());
        let ens = tdqmc_init(&product_state(g), 40, 1, TdqmcParams::default()).unwrap();
        let ev = restricted_spectrum(&ens, Selector::All, 0, 512).unwrap();
        assert!(entropy_from_spectrum(&ev).unwrap().abs() < 1e-8);
        let rho = restricted_density_matrix(&ens, Selector::All, 0).unwrap();
        assert!((rho.eigenvalues()[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_component_mixture_has_ln2() {
        let g = Arc::new(Grid2D::new(12.0, 64).unwrap());
        let mut ens = tdqmc_init(&product_state(g.clone()), 40, 1, TdqmcParams::default()).unwrap();
        let x = g.axis().x().to_vec();
        let dx = g.dx();
        for (k, c) in ens.configs.iter_mut().enumerate() {
            let mut f: Vec<Complex64> = x
                .iter()
                .map(|&xi| {
                    let e = (-xi * xi / 2.0).exp();
                    Complex64::new(if k % 2 == 0 { e } else { xi * e }, 0.0)
                })
                .collect();
            normalize_1d(&mut f, dx);
            c.guides[0] = f;
        }
        let ev = restricted_spectrum(&ens, Selector::All, 0, 512).unwrap();
        let s = entropy_from_spectrum(&ev).unwrap();
        assert!((s - std::f64::consts::LN_2).abs() < 1e-10);
        // grid route agrees with the Gram route
        let rho = restricted_density_matrix(&ens, Selector::All, 0).unwrap();
        assert!((crate::observables::von_neumann_entropy(&rho).unwrap() - s).abs() < 1e-10);
    }

    #[test]
    fn selection_too_small() {
        let g = Arc::new(Grid2D::new(12.0, 64).unwrap());
        let ens = tdqmc_init(&product_state(g), 40, 1, TdqmcParams::default()).unwrap();
        assert!(matches!(
            restricted_density_matrix(&ens, Selector::Nsdi, 0),
            Err(Error::InsufficientSelection { count: 0, .. })
        ));
        let e = entropy_by_channel(&ens, 0, 512).unwrap();
        assert!(e.nsdi.entropy_nats.is_none());
        assert!(e.all.entropy_nats.unwrap().abs() < 1e-8);
    }

    #[test]
    fn selectors() {
        assert!(Selector::Nsdi.matches([6.0, -7.0], 5.0));
        assert!(!Selector::Nsdi.matches([6.0, 1.0], 5.0));
        assert!(Selector::Other.matches([6.0, 1.0], 5.0));
        assert!(Selector::Q13.matches([-1.0, -2.0], 5.0));
        assert!(Selector::Q24.matches([1.0, -2.0], 5.0));
    }

    #[test]
    fn plane_wave_velocity_1d() {
        let axis = Axis::new(20.0, 512).unwrap();
        let f: Vec<Complex64> = axis.x().iter().map(|&x| Complex64::from_polar(1.0, 0.7 * x)).collect();
        let v = velocity_1d(&axis, &f, None, 1.3, NodeRegularization::default());
        assert!((v - 0.7).abs() < 1e-6);
    }
}
