//! de Broglie–Bohm trajectory ensembles guided by the grid wavefunction.

use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, Grid2D};
use crate::par;
use crate::wavefunction::WaveFunction2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeRegularization {
    /// Relative density below which a point counts as a node.
    pub epsilon: f64,
    /// Velocity magnitude cap (a.u.).
    pub v_cap: f64,
}

impl Default for NodeRegularization {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            v_cap: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walker {
    pub pos: [f64; 2],
    pub alive: bool,
}

/// Which steps get written to the stored history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoragePolicy {
    /// Time interval sampled densely (every `dense_every` steps).
    pub dense_window: (f64, f64),
    pub dense_every: usize,
    pub sparse_every: usize,
}

impl StoragePolicy {
    pub fn every_step() -> Self {
        Self {
            dense_window: (f64::NEG_INFINITY, f64::INFINITY),
            dense_every: 1,
            sparse_every: 1,
        }
    }

    pub fn keeps(&self, step: usize, t: f64) -> bool {
        let (a, b) = self.dense_window;
        // small slack so that window edges hit by accumulated time are kept
        let slack = 1e-9 * (1.0 + t.abs());
        if t >= a - slack && t <= b + slack {
            step.is_multiple_of(self.dense_every.max(1))
        } else {
            step.is_multiple_of(self.sparse_every.max(1))
        }
    }
}

/// Walker pairs with their recorded position history.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub walkers: Vec<Walker>,
    pub seed: u64,
    /// Recorded sample times.
    pub times: Vec<f64>,
    /// `history[m][k]` = position of walker `k` at `times[m]`.
    pub history: Vec<Vec<[f64; 2]>>,
    pub clamped_evaluations: u64,
}

impl TrajectoryEnsemble {
    pub fn len(&self) -> usize {
        self.walkers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.walkers.is_empty()
    }

    pub fn dead_count(&self) -> usize {
        self.walkers.iter().filter(|w| !w.alive).count()
    }

    pub fn record(&mut self, t: f64) {
        self.times.push(t);
        self.history.push(self.walkers.iter().map(|w| w.pos).collect());
    }

    /// Index of a recorded sample time.
    pub fn sample_index(&self, when: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + when.abs());
        self.times.iter().position(|&t| (t - when).abs() <= tol)
    }

    /// Time series of coordinate `electron` (0 or 1) of walker `k` over
    /// samples `range`.
    pub fn series(&self, k: usize, electron: usize, range: std::ops::Range<usize>) -> Vec<f64> {
        self.history[range].iter().map(|s| s[k][electron]).collect()
    }
}

/// Draws `n` walker pairs from `|ψ|²` by inverse CDF over cells plus uniform
/// jitter within the cell.
pub fn sample_initial(psi: &WaveFunction2D, n: usize, seed: u64) -> Result<TrajectoryEnsemble> {
    let positions = sample_positions(psi, n, seed)?;
    let mut ens = TrajectoryEnsemble {
        walkers: positions
            .into_iter()
            .map(|pos| Walker { pos, alive: true })
            .collect(),
        seed,
        times: Vec::new(),
        history: Vec::new(),
        clamped_evaluations: 0,
    };
    ens.record(psi.time);
    Ok(ens)
}

pub fn sample_positions(psi: &WaveFunction2D, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if n == 0 {
        return Err(Error::Domain("walker count must be positive".into()));
    }
    let mut cdf = Vec::with_capacity(psi.values.len());
    let mut acc = 0.0;
    for v in &psi.values {
        acc += v.norm_sqr();
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::Domain("cannot sample from a zero wavefunction".into()));
    }
    let grid = &psi.grid;
    let axis = grid.axis();
    let dx = grid.dx();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let cell = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let (i1, i2) = (cell / grid.n(), cell % grid.n());
        let j1: f64 = rng.random::<f64>() - 0.5;
        let j2: f64 = rng.random::<f64>() - 0.5;
        out.push([
            clamp_to(axis, axis.x()[i1] + j1 * dx),
            clamp_to(axis, axis.x()[i2] + j2 * dx),
        ]);
    }
    Ok(out)
}

fn clamp_to(axis: &Axis, x: f64) -> f64 {
    let x0 = axis.x()[0];
    let x1 = axis.x()[axis.len() - 1];
    x.clamp(x0, x1)
}

/// Read-only view of Ψ at one time, or of the average of two snapshots.
#[derive(Clone, Copy)]
pub struct GuideField<'a> {
    a: &'a [Complex64],
    b: Option<&'a [Complex64]>,
    grid: &'a Grid2D,
    node_floor: f64,
    reg: NodeRegularization,
}

impl<'a> GuideField<'a> {
    pub fn new(psi: &'a WaveFunction2D, reg: NodeRegularization) -> Self {
        Self {
            a: &psi.values,
            b: None,
            grid: &psi.grid,
            node_floor: reg.epsilon * psi.max_density(),
            reg,
        }
    }

    /// Time-midpoint field `(ψ_a + ψ_b) / 2`.
    pub fn midpoint(
        a: &'a WaveFunction2D,
        b: &'a WaveFunction2D,
        reg: NodeRegularization,
    ) -> Self {
        Self {
            a: &a.values,
            b: Some(&b.values),
            grid: &a.grid,
            node_floor: reg.epsilon * a.max_density().max(b.max_density()),
            reg,
        }
    }

    #[inline]
    fn value(&self, i1: usize, i2: usize) -> Complex64 {
        let idx = i1 * self.grid.n() + i2;
        match self.b {
            None => self.a[idx],
            Some(b) => (self.a[idx] + b[idx]) * 0.5,
        }
    }

    /// Velocity at grid node `(i1, i2)` from a 4th-order central stencil
    /// (periodic wrap); second flag reports whether the cap was applied.
    fn node_velocity(&self, i1: usize, i2: usize) -> ([f64; 2], bool) {
        let n = self.grid.n();
        let h = 12.0 * self.grid.dx();
        let w = |i: usize, d: isize| ((i as isize + d).rem_euclid(n as isize)) as usize;
        let psi = self.value(i1, i2);
        let d1 = (-self.value(w(i1, 2), i2) + self.value(w(i1, 1), i2) * 8.0
            - self.value(w(i1, -1), i2) * 8.0
            + self.value(w(i1, -2), i2))
            / h;
        let d2 = (-self.value(i1, w(i2, 2)) + self.value(i1, w(i2, 1)) * 8.0
            - self.value(i1, w(i2, -1)) * 8.0
            + self.value(i1, w(i2, -2)))
            / h;
        let rho = psi.norm_sqr();
        let cap = self.reg.v_cap;
        if rho <= 0.0 {
            return ([0.0, 0.0], true);
        }
        let v = [(d1 * psi.conj()).im / rho, (d2 * psi.conj()).im / rho];
        let near_node = rho < self.node_floor;
        let over = v.iter().any(|c| c.abs() > cap || !c.is_finite());
        if near_node || over {
            let c = |x: f64| if x.is_finite() { x.clamp(-cap, cap) } else { 0.0 };
            ([c(v[0]), c(v[1])], true)
        } else {
            (v, false)
        }
    }

    /// Bilinear interpolation of node velocities.
    pub fn velocity(&self, x1: f64, x2: f64) -> Result<([f64; 2], bool)> {
        let axis = self.grid.axis();
        if !axis.contains(x1) || !axis.contains(x2) {
            return Err(Error::OutOfDomain { x1, x2 });
        }
        let n = self.grid.n();
        let f1 = axis.fractional_index(x1);
        let f2 = axis.fractional_index(x2);
        let i = (f1.floor() as usize).min(n - 2);
        let j = (f2.floor() as usize).min(n - 2);
        let (t, u) = (f1 - i as f64, f2 - j as f64);
        let mut out = [0.0; 2];
        let mut clamped = false;
        for (di, dj, w) in [
            (0, 0, (1.0 - t) * (1.0 - u)),
            (1, 0, t * (1.0 - u)),
            (0, 1, (1.0 - t) * u),
            (1, 1, t * u),
        ] {
            if w == 0.0 {
                continue;
            }
            let (v, c) = self.node_velocity(i + di, j + dj);
            clamped |= c;
            out[0] += w * v[0];
            out[1] += w * v[1];
        }
        Ok((out, clamped))
    }
}

/// `v_i = Im[(∂ψ/∂x_i)/ψ]` at a point.
pub fn velocity_at(
    psi: &WaveFunction2D,
    point: (f64, f64),
    reg: NodeRegularization,
) -> Result<(f64, f64)> {
    let (v, _) = GuideField::new(psi, reg).velocity(point.0, point.1)?;
    Ok((v[0], v[1]))
}

/// Explicit-midpoint step of every live walker between two snapshots.
/// Returns the number of walkers that died during this step.
pub fn advance_walkers(
    ens: &mut TrajectoryEnsemble,
    psi_t: &WaveFunction2D,
    psi_next: &WaveFunction2D,
    dt: f64,
    reg: NodeRegularization,
) -> usize {
    let start = GuideField::new(psi_t, reg);
    let mid = GuideField::midpoint(psi_t, psi_next, reg);
    advance_with(ens, &start, &mid, dt)
}

pub fn advance_with(
    ens: &mut TrajectoryEnsemble,
    start: &GuideField<'_>,
    mid: &GuideField<'_>,
    dt: f64,
) -> usize {
    let axis = start.grid.axis();
    let outcome: Vec<(Walker, bool, bool)> = par::map(&ens.walkers, |w| {
        if !w.alive {
            return (*w, false, false);
        }
        let [x1, x2] = w.pos;
        let step = || -> Result<([f64; 2], bool)> {
            let (v0, c0) = start.velocity(x1, x2)?;
            let h1 = clamp_to(axis, x1 + 0.5 * dt * v0[0]);
            let h2 = clamp_to(axis, x2 + 0.5 * dt * v0[1]);
            let (vm, c1) = mid.velocity(h1, h2)?;
            Ok(([x1 + dt * vm[0], x2 + dt * vm[1]], c0 || c1))
        };
        match step() {
            Ok((p, clamped)) if p[0].is_finite() && p[1].is_finite() => (
                Walker {
                    pos: [clamp_to(axis, p[0]), clamp_to(axis, p[1])],
                    alive: true,
                },
                clamped,
                false,
            ),
            _ => (
                Walker {
                    pos: w.pos,
                    alive: false,
                },
                false,
                true,
            ),
        }
    });
    let mut died = 0;
    for (w, (nw, clamped, dead)) in ens.walkers.iter_mut().zip(outcome) {
        *w = nw;
        ens.clamped_evaluations += clamped as u64;
        died += dead as usize;
    }
    died
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "NSDI")]
    Nsdi,
    #[serde(rename = "SI")]
    Si,
    #[serde(rename = "bound")]
    Bound,
}

impl Channel {
    pub fn as_str(&self) -> &'static str {
        match self {
            Channel::Nsdi => "NSDI",
            Channel::Si => "SI",
            Channel::Bound => "bound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    Q13,
    Q24,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub channel: Channel,
    pub quadrant: Quadrant,
}

pub fn classify_point(x1: f64, x2: f64, threshold: f64) -> Classification {
    let channel = match (x1.abs() > threshold, x2.abs() > threshold) {
        (true, true) => Channel::Nsdi,
        (true, false) | (false, true) => Channel::Si,
        _ => Channel::Bound,
    };
    let quadrant = if channel != Channel::Nsdi {
        Quadrant::None
    } else if x1 * x2 > 0.0 {
        Quadrant::Q13
    } else {
        Quadrant::Q24
    };
    Classification { channel, quadrant }
}

/// Channel of every walker at recorded time `when`; dead walkers are `None`.
pub fn classify(
    ens: &TrajectoryEnsemble,
    threshold: f64,
    when: f64,
) -> Result<Vec<Option<Classification>>> {
    let m = ens
        .sample_index(when)
        .ok_or_else(|| Error::Domain(format!("time {when} was not sampled")))?;
    Ok(ens.history[m]
        .iter()
        .zip(&ens.walkers)
        .map(|(p, w)| w.alive.then(|| classify_point(p[0], p[1], threshold)))
        .collect())
}

/// Kolmogorov–Smirnov distance between samples and the marginal of `|ψ|²`
/// along `electron` (0 or 1), with the grid CDF linear within each cell.
pub fn ks_marginal(psi: &WaveFunction2D, electron: usize, samples: &[f64]) -> f64 {
    ks_against_density(psi.grid.axis(), &marginal_density(psi, electron), samples)
}

/// Marginal `∫|ψ|² dx_other` on the grid nodes.
pub fn marginal_density(psi: &WaveFunction2D, electron: usize) -> Vec<f64> {
    let n = psi.n();
    let dx = psi.grid.dx();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if electron == 0 {
                        psi.at(i, j).norm_sqr()
                    } else {
                        psi.at(j, i).norm_sqr()
                    }
                })
                .sum::<f64>()
                * dx
        })
        .collect()
}

/// KS distance between `samples` and a nodal density whose mass is spread
/// uniformly over `[x_i - dx/2, x_i + dx/2]`.
pub fn ks_against_density(axis: &Axis, density: &[f64], samples: &[f64]) -> f64 {
    let dx = axis.dx();
    let total: f64 = density.iter().sum::<f64>() * dx;
    let mut edges = Vec::with_capacity(density.len() + 1);
    let mut acc = 0.0;
    edges.push(0.0);
    for d in density {
        acc += d * dx / total;
        edges.push(acc);
    }
    let cdf = |x: f64| {
        let f = (x - axis.x()[0]) / dx + 0.5;
        if f <= 0.0 {
            return 0.0;
        }
        let i = f.floor() as usize;
        if i >= density.len() {
            return 1.0;
        }
        edges[i] + (f - i as f64) * (edges[i + 1] - edges[i])
    };
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Writes `t,walker_id,x1,x2,channel` rows for the selected walkers, every
/// `stride`-th recorded sample.
pub fn write_trajectory_csv<W: Write>(
    mut w: W,
    ens: &TrajectoryEnsemble,
    channels: &[Option<Classification>],
    walkers: &[usize],
    stride: usize,
) -> Result<()> {
    writeln!(w, "t,walker_id,x1,x2,channel")?;
    for m in (0..ens.times.len()).step_by(stride.max(1)) {
        let t = ens.times[m];
        for &k in walkers {
            let p = ens.history[m][k];
            let ch = channels[k].map_or("dead", |c| c.channel.as_str());
            writeln!(w, "{t:.6},{k},{:.8},{:.8},{ch}", p[0], p[1])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    fn grid(l: f64, n: usize) -> Arc<Grid2D> {
        Arc::new(Grid2D::new(l, n).unwrap())
    }

    #[test]
    fn classification_rules() {
        assert_eq!(
            classify_point(6.0, -7.0, 5.0),
            Classification {
                channel: Channel::Nsdi,
                quadrant: Quadrant::Q24
            }
        );
        assert_eq!(
            classify_point(6.0, 1.0, 5.0),
            Classification {
                channel: Channel::Si,
                quadrant: Quadrant::None
            }
        );
        assert_eq!(classify_point(-6.0, -9.0, 5.0).quadrant, Quadrant::Q13);
        assert_eq!(classify_point(1.0, 2.0, 5.0).channel, Channel::Bound);
    }

    #[test]
    fn delta_like_sampling_stays_in_cell() {
        let g = grid(10.0, 64);
        let (ci, cj) = (40, 21);
        let psi = WaveFunction2D::from_fn(g.clone(), |_, _| Complex64::new(0.0, 0.0));
        let mut psi = psi;
        psi.values[g.index(ci, cj)] = Complex64::new(1.0, 0.0);
        let ens = sample_initial(&psi, 500, 3).unwrap();
        let x = g.axis().x();
        for w in &ens.walkers {
            assert!((w.pos[0] - x[ci]).abs() <= 0.5 * g.dx() + 1e-12);
            assert!((w.pos[1] - x[cj]).abs() <= 0.5 * g.dx() + 1e-12);
        }
        assert!(sample_initial(&psi, 0, 3).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let psi = WaveFunction2D::gaussian_seed(grid(10.0, 64), 1.3);
        let a = sample_positions(&psi, 100, 42).unwrap();
        let b = sample_positions(&psi, 100, 42).unwrap();
        let c = sample_positions(&psi, 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn real_state_has_zero_velocity() {
        let psi = WaveFunction2D::gaussian_seed(grid(10.0, 64), 1.0);
        let (v1, v2) = velocity_at(&psi, (0.37, -1.2), NodeRegularization::default()).unwrap();
        assert!(v1.abs() < 1e-10 && v2.abs() < 1e-10);
    }

    #[test]
    fn plane_wave_velocity() {
        let (k1, k2) = (0.5, -0.3);
        let psi = WaveFunction2D::from_fn(grid(20.0, 512), |a, b| {
            Complex64::from_polar(1.0, k1 * a + k2 * b)
        });
        let (v1, v2) = velocity_at(&psi, (1.234, -2.71), NodeRegularization::default()).unwrap();
        assert!((v1 - k1).abs() < 1e-6, "{v1}");
        assert!((v2 - k2).abs() < 1e-6, "{v2}");
    }

    #[test]
    fn outside_point_is_rejected() {
        let psi = WaveFunction2D::gaussian_seed(grid(10.0, 64), 1.0);
        assert!(matches!(
            velocity_at(&psi, (11.0, 0.0), NodeRegularization::default()),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn node_velocity_is_capped() {
        // a node line at x1 = 0 with a phase gradient along x2
        let psi = WaveFunction2D::from_fn(grid(10.0, 64), |a, b| {
            Complex64::from_polar(a * (-(a * a + b * b) / 2.0).exp(), 30.0 * b)
        });
        let reg = NodeRegularization::default();
        let (v1, v2) = velocity_at(&psi, (0.0, 0.5), reg).unwrap();
        assert!(v1.abs() <= reg.v_cap && v2.abs() <= reg.v_cap);
    }

    #[test]
    fn frozen_plane_wave_drifts_at_k() {
        let k = 0.4;
        let psi = WaveFunction2D::from_fn(grid(20.0, 512), |a, b| {
            Complex64::from_polar((-(b * b) / 8.0).exp(), k * a)
        });
        let mut ens = TrajectoryEnsemble {
            walkers: vec![Walker {
                pos: [-3.0, 0.7],
                alive: true,
            }],
            seed: 0,
            times: vec![],
            history: vec![],
            clamped_evaluations: 0,
        };
        let dt = 0.03;
        for _ in 0..100 {
            advance_walkers(&mut ens, &psi, &psi, dt, NodeRegularization::default());
        }
        let w = ens.walkers[0];
        assert!((w.pos[0] - (-3.0 + 100.0 * k * dt)).abs() < 1e-6 * 100.0);
        assert!((w.pos[1] - 0.7).abs() < 1e-9);
    }

    #[test]
    fn classify_requires_sampled_time() {
        let psi = WaveFunction2D::gaussian_seed(grid(10.0, 64), 1.0);
        let ens = sample_initial(&psi, 10, 1).unwrap();
        assert!(classify(&ens, 5.0, 0.0).is_ok());
        assert!(classify(&ens, 5.0, 1.0).is_err());
    }

    #[test]
    fn storage_policy() {
        let p = StoragePolicy {
            dense_window: (0.0, 10.0),
            dense_every: 1,
            sparse_every: 10,
        };
        assert!(p.keeps(3, 5.0));
        assert!(!p.keeps(3, 11.0));
        assert!(p.keeps(20, 11.0));
    }
}
