//! Analytic-signal phase extraction and circular phase-mismatch statistics.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft1;

pub const MIN_TRACE_LEN: usize = 16;

/// Uniformly sampled real signal.
#[derive(Debug, Clone, PartialEq)]
pub struct RealTrace {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub start: f64,
}

impl RealTrace {
    pub fn new(samples: Vec<f64>, dt: f64, start: f64) -> Result<Self> {
        if samples.len() < MIN_TRACE_LEN {
            return Err(Error::DegenerateTrace(format!(
                "trace has {} samples (need {MIN_TRACE_LEN})",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::DegenerateTrace("non-finite sample".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::DegenerateTrace("sampling interval must be positive".into()));
        }
        Ok(Self { samples, dt, start })
    }

    pub fn time(&self, m: usize) -> f64 {
        self.start + m as f64 * self.dt
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticTrace {
    pub z: Vec<Complex64>,
    pub dt: f64,
    pub start: f64,
    /// Mean removed before the transform.
    pub mean: f64,
}

impl AnalyticTrace {
    pub fn envelope(&self) -> Vec<f64> {
        self.z.iter().map(|c| c.norm()).collect()
    }

    /// Wrapped phase `atan2(Im z, Re z)`.
    pub fn phase(&self) -> Vec<f64> {
        self.z.iter().map(|c| c.im.atan2(c.re)).collect()
    }
}

/// Analytic signal of the de-meaned trace: the spectrum is doubled at positive
/// frequencies, kept at DC and Nyquist, and zeroed at negative frequencies.
pub fn analytic_signal(trace: &RealTrace) -> Result<AnalyticTrace> {
    let n = trace.samples.len();
    let mean = trace.samples.iter().sum::<f64>() / n as f64;
    let mut z: Vec<Complex64> = trace
        .samples
        .iter()
        .map(|&s| Complex64::new(s - mean, 0.0))
        .collect();
    if z.iter().all(|c| c.re == 0.0) {
        return Err(Error::DegenerateTrace("trace is constant".into()));
    }
    let fft = Fft1::new(n);
    fft.forward_alloc(&mut z);
    let half = n / 2;
    for (f, c) in z.iter_mut().enumerate() {
        let gain = if f == 0 || (n.is_multiple_of(2) && f == half) {
            1.0
        } else if f <= half {
            2.0
        } else {
            0.0
        };
        *c *= gain / n as f64;
    }
    fft.inverse_alloc(&mut z);
    Ok(AnalyticTrace {
        z,
        dt: trace.dt,
        start: trace.start,
        mean,
    })
}

/// Unit-modulus samples with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseOnlyTrace {
    pub values: Vec<Complex64>,
    pub valid: Vec<bool>,
    pub dt: f64,
    pub start: f64,
}

impl PhaseOnlyTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Marks `fraction` of the samples at each end invalid.
    pub fn guard_edges(mut self, fraction: f64) -> Self {
        let n = self.values.len();
        let g = ((n as f64) * fraction).round() as usize;
        let g = g.min(n / 2);
        self.valid[..g].iter_mut().for_each(|v| *v = false);
        self.valid[n - g..].iter_mut().for_each(|v| *v = false);
        self
    }

    pub fn time(&self, m: usize) -> f64 {
        self.start + m as f64 * self.dt
    }
}

/// `z / |z|` where the envelope exceeds `floor_rel × max envelope`; samples
/// below the floor are flagged invalid (left at zero, never NaN).
pub fn normalize_by_envelope(z: &AnalyticTrace, floor_rel: f64) -> Result<PhaseOnlyTrace> {
    let env = z.envelope();
    let max = env.iter().copied().fold(0.0, f64::max);
    let floor = floor_rel * max;
    let mut invalid = 0;
    let mut values = Vec::with_capacity(env.len());
    let mut valid = Vec::with_capacity(env.len());
    for (c, &e) in z.z.iter().zip(&env) {
        if e > floor && e > 0.0 {
            values.push(c / e);
            valid.push(true);
        } else {
            values.push(Complex64::new(0.0, 0.0));
            valid.push(false);
            invalid += 1;
        }
    }
    if invalid * 10 > env.len() {
        return Err(Error::TraceRejected {
            invalid,
            total: env.len(),
        });
    }
    Ok(PhaseOnlyTrace {
        values,
        valid,
        dt: z.dt,
        start: z.start,
    })
}

/// Wraps an angle into `[-π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(TAU) - PI;
    if w >= PI {
        w - TAU
    } else {
        w
    }
}

/// `arg(z1 · conj z2)` at samples inside `[t_a, t_b]` valid in both traces.
pub fn pair_phase_difference(
    z1: &PhaseOnlyTrace,
    z2: &PhaseOnlyTrace,
    window: (f64, f64),
) -> Result<Vec<f64>> {
    if z1.len() != z2.len()
        || (z1.dt - z2.dt).abs() > 1e-12 * z1.dt
        || (z1.start - z2.start).abs() > 1e-9 * (1.0 + z1.start.abs())
    {
        return Err(Error::Domain("phase traces are sampled differently".into()));
    }
    let slack = 1e-9 * z1.dt;
    let out: Vec<f64> = (0..z1.len())
        .filter(|&m| {
            let t = z1.time(m);
            t >= window.0 - slack && t <= window.1 + slack && z1.valid[m] && z2.valid[m]
        })
        .map(|m| {
            let p = z1.values[m] * z2.values[m].conj();
            wrap_angle(p.im.atan2(p.re))
        })
        .collect();
    if out.is_empty() {
        return Err(Error::EmptyOverlap);
    }
    Ok(out)
}

/// Circular mean direction `arg Σ e^{iφ}`.
pub fn circular_mean(phases: &[f64]) -> f64 {
    let s: Complex64 = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).sum();
    wrap_angle(s.im.atan2(s.re))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One circular-mean value per pair.
    TimeAverage,
    /// Every (pair, sample) value.
    RawSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub bins: usize,
    pub sigma_h: f64,
    pub pooling: Pooling,
    pub edge_guard: f64,
    pub envelope_floor: f64,
    pub min_entries: usize,
}

impl Default for PhaseParams {
    fn default() -> Self {
        Self {
            bins: 128,
            sigma_h: 0.15,
            pooling: Pooling::TimeAverage,
            edge_guard: 0.05,
            envelope_floor: 1e-3,
            min_entries: 100,
        }
    }
}

/// Smoothed circular density of relative phases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMismatchStats {
    pub bin_centers: Vec<f64>,
    pub density: Vec<f64>,
    pub fwhm: Option<f64>,
    /// Values entering the histogram (pairs, or pair-samples for raw pooling).
    pub sample_count: usize,
    /// Total (pair, time-sample) entries before pooling.
    pub entries: usize,
    pub sigma_h: f64,
}

impl PhaseMismatchStats {
    pub fn bin_width(&self) -> f64 {
        TAU / self.bin_centers.len() as f64
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

/// Wrapped Gaussian density at angular offset `d`.
pub fn wrapped_gaussian(d: f64, sigma: f64) -> f64 {
    let images = (3.0 + 6.0 * sigma / TAU).ceil() as i32;
    let norm = 1.0 / (sigma * TAU.sqrt());
    (-images..=images)
        .map(|m| {
            let x = d + m as f64 * TAU;
            (-(x * x) / (2.0 * sigma * sigma)).exp()
        })
        .sum::<f64>()
        * norm
}

/// Bins `values` on `[-π, π)` and smooths the counts with a wrapped Gaussian.
pub fn smoothed_histogram(values: &[f64], bins: usize, sigma_h: f64) -> (Vec<f64>, Vec<f64>) {
    let w = TAU / bins as f64;
    let centers: Vec<f64> = (0..bins).map(|b| -PI + (b as f64 + 0.5) * w).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let b = (((wrap_angle(v) + PI) / w).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    // kernel depends only on the bin offset
    let kernel: Vec<f64> = (0..bins)
        .map(|d| wrapped_gaussian(d as f64 * w, sigma_h))
        .collect();
    let mut density: Vec<f64> = (0..bins)
        .map(|b| {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(j, &c)| c as f64 * kernel[(b + bins - j) % bins])
                .sum()
        })
        .collect();
    let total: f64 = density.iter().sum::<f64>() * w;
    if total > 0.0 {
        density.iter_mut().for_each(|d| *d /= total);
    }
    (centers, density)
}

/// Pools per-pair phase-difference series into a smoothed histogram.
pub fn phase_histogram(pairs: &[Vec<f64>], params: &PhaseParams) -> Result<PhaseMismatchStats> {
    let entries: usize = pairs.iter().map(Vec::len).sum();
    if entries < params.min_entries {
        return Err(Error::InsufficientStatistics {
            count: entries,
            required: params.min_entries,
        });
    }
    let values: Vec<f64> = match params.pooling {
        Pooling::TimeAverage => pairs
            .iter()
            .filter(|p| !p.is_empty())
            .map(|p| circular_mean(p))
            .collect(),
        Pooling::RawSamples => pairs.iter().flatten().copied().collect(),
    };
    let mut stats = histogram_from_values(&values, params.bins, params.sigma_h);
    stats.entries = entries;
    Ok(stats)
}

pub fn histogram_from_values(values: &[f64], bins: usize, sigma_h: f64) -> PhaseMismatchStats {
    let (bin_centers, density) = smoothed_histogram(values, bins, sigma_h);
    let mut stats = PhaseMismatchStats {
        bin_centers,
        density,
        fwhm: None,
        sample_count: values.len(),
        entries: values.len(),
        sigma_h,
    };
    stats.fwhm = fwhm(&stats).ok();
    stats
}

/// Full width at half maximum around the global mode, measured circularly
/// with linear interpolation between bin centres.
pub fn fwhm(stats: &PhaseMismatchStats) -> Result<f64> {
    let d = &stats.density;
    let c = &stats.bin_centers;
    let n = d.len();
    let w = stats.bin_width();
    let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::UndefinedFwhm { fraction: 1.0 });
    }
    // ties resolved toward the mode nearest zero phase
    let mode = (0..n)
        .filter(|&i| d[i] == max)
        .min_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()))
        .unwrap();
    let half = 0.5 * max;
    let limit = (0.95 * n as f64).floor() as usize;
    let walk = |dir: isize| -> Option<f64> {
        let mut prev = d[mode];
        for s in 1..=n {
            let idx = (mode as isize + dir * s as isize).rem_euclid(n as isize) as usize;
            if d[idx] < half {
                let frac = (prev - half) / (prev - d[idx]);
                return Some((s as f64 - 1.0 + frac) * w);
            }
            prev = d[idx];
        }
        None
    };
    match (walk(1), walk(-1)) {
        (Some(r), Some(l)) if (r + l) / w < limit as f64 => Ok(r + l),
        (Some(r), Some(l)) => Err(Error::UndefinedFwhm {
            fraction: (r + l) / TAU,
        }),
        _ => Err(Error::UndefinedFwhm { fraction: 1.0 }),
    }
}

/// Phase-difference series of one walker pair restricted to `window`.
pub fn pair_series_phase_difference(
    electron1: &RealTrace,
    electron2: &RealTrace,
    window: (f64, f64),
    params: &PhaseParams,
) -> Result<Vec<f64>> {
    let p1 = normalize_by_envelope(&analytic_signal(electron1)?, params.envelope_floor)?
        .guard_edges(params.edge_guard);
    let p2 = normalize_by_envelope(&analytic_signal(electron2)?, params.envelope_floor)?
        .guard_edges(params.edge_guard);
    pair_phase_difference(&p1, &p2, window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn cosine(n: usize, omega: f64, dt: f64, lag: f64) -> RealTrace {
        RealTrace::new(
            (0..n).map(|m| (omega * m as f64 * dt - lag).cos()).collect(),
            dt,
            0.0,
        )
        .unwrap()
    }

    fn interior(n: usize) -> std::ops::Range<usize> {
        let g = n / 20;
        g..n - g
    }

    #[test]
    fn cosine_identity() {
        let n = 1000;
        let dt = 0.05;
        let omega = TAU * 10.0 / (n as f64 * dt);
        let a = analytic_signal(&cosine(n, omega, dt, 0.0)).unwrap();
        let env = a.envelope();
        let ph = a.phase();
        for m in interior(n) {
            assert!((env[m] - 1.0).abs() < 1e-6);
            let expect = wrap_angle(omega * m as f64 * dt);
            assert!(wrap_angle(ph[m] - expect).abs() < 1e-4);
            assert!((a.z[m].re - (omega * m as f64 * dt).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn negative_frequencies_vanish() {
        let n = 256;
        let t = RealTrace::new((0..n).map(|m| ((m * m) as f64 * 0.001).sin()).collect(), 1.0, 0.0)
            .unwrap();
        let mut z = analytic_signal(&t).unwrap().z;
        Fft1::new(n).forward_alloc(&mut z);
        let peak = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
        for c in &z[n / 2 + 1..] {
            assert!(c.norm() <= 1e-10 * peak);
        }
    }

    #[test]
    fn dc_offset_removed() {
        let n = 800;
        let dt = 0.1;
        let omega = TAU * 8.0 / (n as f64 * dt);
        let base = analytic_signal(&cosine(n, omega, dt, 0.0)).unwrap();
        let shifted = RealTrace::new(
            (0..n).map(|m| 3.0 * (omega * m as f64 * dt).cos() + 3.0).collect(),
            dt,
            0.0,
        )
        .unwrap();
        let s = analytic_signal(&shifted).unwrap();
        assert!((s.mean - 3.0).abs() < 1e-12);
        for m in interior(n) {
            assert!((s.z[m].norm() - 3.0 * base.z[m].norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn amplitude_modulation_tracked() {
        let n = 4000;
        let dt = 0.05;
        let omega = 5.0;
        let amp = |t: f64| 1.0 + 0.5 * (TAU * t / (n as f64 * dt)).sin();
        let tr = RealTrace::new(
            (0..n)
                .map(|m| {
                    let t = m as f64 * dt;
                    amp(t) * (omega * t).cos()
                })
                .collect(),
            dt,
            0.0,
        )
        .unwrap();
        let env = analytic_signal(&tr).unwrap().envelope();
        for m in interior(n) {
            let a = amp(m as f64 * dt);
            assert!((env[m] - a).abs() < 0.01 * a);
        }
    }

    #[test]
    fn constant_trace_is_degenerate() {
        let t = RealTrace::new(vec![2.0; 32], 1.0, 0.0).unwrap();
        assert!(matches!(analytic_signal(&t), Err(Error::DegenerateTrace(_))));
        assert!(RealTrace::new(vec![1.0; 8], 1.0, 0.0).is_err());
    }

    #[test]
    fn envelope_normalization_and_guard() {
        let n = 1000;
        let dt = 0.05;
        let omega = TAU * 10.0 / (n as f64 * dt);
        let p = normalize_by_envelope(&analytic_signal(&cosine(n, omega, dt, 0.0)).unwrap(), 1e-3)
            .unwrap();
        for m in interior(n) {
            assert!((p.values[m].norm() - 1.0).abs() < 1e-12);
            assert!((p.values[m].re - (omega * m as f64 * dt).cos()).abs() < 1e-6);
        }
        // a dead segment shorter than 10% is flagged, not NaN
        let mut s: Vec<f64> = (0..n).map(|m| (omega * m as f64 * dt).cos()).collect();
        let z = {
            let mut a = analytic_signal(&RealTrace::new(s.clone(), dt, 0.0).unwrap()).unwrap();
            for c in &mut a.z[100..150] {
                *c = Complex64::new(0.0, 0.0);
            }
            a
        };
        let p = normalize_by_envelope(&z, 1e-3).unwrap();
        assert!(p.values.iter().all(|c| c.re.is_finite()));
        assert_eq!(p.valid.iter().filter(|v| !**v).count(), 50);
        // more than 10% below the floor rejects the trace
        s.iter_mut().take(200).for_each(|v| *v = 0.0);
        let mut z = analytic_signal(&RealTrace::new(s, dt, 0.0).unwrap()).unwrap();
        for c in &mut z.z[..200] {
            *c = Complex64::new(0.0, 0.0);
        }
        assert!(matches!(normalize_by_envelope(&z, 1e-3), Err(Error::TraceRejected { .. })));
    }

    #[test]
    fn chirped_phase_follows() {
        let n = 6000;
        let dt = 0.02;
        let omega = 6.0;
        // chirp close to 0.01 chosen so the window holds a whole number of
        // turns (no wrap-around jump at the window ends)
        let t_end = n as f64 * dt;
        let turns = ((omega * t_end + 0.01 * t_end * t_end) / TAU).round();
        let gamma = (turns * TAU - omega * t_end) / (t_end * t_end);
        let tr = RealTrace::new(
            (0..n)
                .map(|m| {
                    let t = m as f64 * dt;
                    (omega * t + gamma * t * t).cos()
                })
                .collect(),
            dt,
            0.0,
        )
        .unwrap();
        let p = normalize_by_envelope(&analytic_signal(&tr).unwrap(), 1e-3).unwrap();
        for m in interior(n) {
            let t = m as f64 * dt;
            let ph = p.values[m].im.atan2(p.values[m].re);
            assert!(wrap_angle(ph - omega * t - gamma * t * t).abs() < 1e-3);
            assert!((p.values[m].norm() - 1.0).abs() < 1e-12);
        }
    }

    fn phase_only(tr: &RealTrace) -> PhaseOnlyTrace {
        normalize_by_envelope(&analytic_signal(tr).unwrap(), 1e-3)
            .unwrap()
            .guard_edges(0.05)
    }

    #[test]
    fn pair_differences() {
        let n = 1000;
        let dt = 0.05;
        let omega = TAU * 10.0 / (n as f64 * dt);
        let a = phase_only(&cosine(n, omega, dt, 0.0));
        let same = pair_phase_difference(&a, &a, (0.0, 50.0)).unwrap();
        assert!(same.iter().all(|&d| d == 0.0));
        let b = phase_only(&cosine(n, omega, dt, PI / 2.0));
        let lag = pair_phase_difference(&a, &b, (0.0, 50.0)).unwrap();
        assert!(lag.iter().all(|&d| (d - PI / 2.0).abs() < 1e-4));
        assert!(matches!(
            pair_phase_difference(&a, &b, (100.0, 200.0)),
            Err(Error::EmptyOverlap)
        ));
    }

    #[test]
    fn detuning_slope() {
        let n = 4000;
        let dt = 0.05;
        let (omega, delta) = (4.0, 0.02);
        let a = phase_only(&cosine(n, omega, dt, 0.0));
        let b = phase_only(
            &RealTrace::new(
                (0..n).map(|m| ((omega + delta) * m as f64 * dt).cos()).collect(),
                dt,
                0.0,
            )
            .unwrap(),
        );
        let d = pair_phase_difference(&a, &b, (0.0, n as f64 * dt)).unwrap();
        // least-squares slope in time over the unwrapped series
        let t0 = 0.05 * n as f64 * dt;
        let ts: Vec<f64> = (0..d.len()).map(|m| t0 + m as f64 * dt).collect();
        let mut un = d.clone();
        for i in 1..un.len() {
            un[i] = un[i - 1] + wrap_angle(d[i] - d[i - 1]);
        }
        let mt = ts.iter().sum::<f64>() / ts.len() as f64;
        let mp = un.iter().sum::<f64>() / un.len() as f64;
        let num: f64 = ts.iter().zip(&un).map(|(t, p)| (t - mt) * (p - mp)).sum();
        let den: f64 = ts.iter().map(|t| (t - mt) * (t - mt)).sum();
        assert!((num / den + delta).abs() < 1e-3);
    }

    #[test]
    fn kernel_identity_width() {
        let pairs = vec![vec![0.0; 200]];
        let params = PhaseParams::default();
        let st = phase_histogram(&pairs, &params).unwrap();
        let w = st.fwhm.unwrap();
        let expect = 2.0 * (2.0 * 2f64.ln()).sqrt() * params.sigma_h;
        assert!((w - expect).abs() < 0.02 * expect, "{w} vs {expect}");
        assert!((st.integral() - 1.0).abs() < 1e-9);

        let st = histogram_from_values(&[0.0], 128, 0.2);
        assert!((fwhm(&st).unwrap() - 0.471).abs() < 0.02 * 0.471);
    }

    #[test]
    fn sampled_wrapped_gaussian_width() {
        let sigma = 0.5;
        let sigma_h = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, sigma).unwrap();
        let values: Vec<f64> = (0..10_000).map(|_| wrap_angle(normal.sample(&mut rng))).collect();
        let st = histogram_from_values(&values, 128, sigma_h);
        let expect = 2.3548 * (sigma * sigma + sigma_h * sigma_h).sqrt();
        let got = st.fwhm.unwrap();
        assert!((got - expect).abs() < 0.05 * expect, "{got} vs {expect}");
    }

    #[test]
    fn analytic_wrapped_gaussian_width() {
        let sigma = 0.3;
        let w = TAU / 256.0;
        let centers: Vec<f64> = (0..256).map(|b| -PI + (b as f64 + 0.5) * w).collect();
        let density = centers.iter().map(|&c| wrapped_gaussian(c, sigma)).collect();
        let st = PhaseMismatchStats {
            bin_centers: centers,
            density,
            fwhm: None,
            sample_count: 0,
            entries: 0,
            sigma_h: 0.0,
        };
        let got = fwhm(&st).unwrap();
        assert!((got - 2.3548 * sigma).abs() < 0.02 * 2.3548 * sigma);
    }

    #[test]
    fn uniform_density_has_no_width() {
        let st = PhaseMismatchStats {
            bin_centers: (0..64).map(|b| -PI + (b as f64 + 0.5) * TAU / 64.0).collect(),
            density: vec![1.0 / TAU; 64],
            fwhm: None,
            sample_count: 0,
            entries: 0,
            sigma_h: 0.1,
        };
        assert!(matches!(fwhm(&st), Err(Error::UndefinedFwhm { .. })));
    }

    #[test]
    fn bimodal_is_symmetric() {
        let mut values = vec![PI / 2.0; 500];
        values.extend(vec![-PI / 2.0; 500]);
        let st = histogram_from_values(&values, 128, 0.15);
        let n = st.density.len();
        // reflection φ -> -φ maps bin b to n-1-b, up to the half-bin offset of
        // values sitting on bin edges
        let peak = st.density.iter().copied().fold(0.0, f64::max);
        let left = st.density[..n / 2].iter().copied().fold(0.0, f64::max);
        let right = st.density[n / 2..].iter().copied().fold(0.0, f64::max);
        assert!((left - right).abs() < 1e-12 * peak);
    }

    #[test]
    fn too_few_entries() {
        assert!(matches!(
            phase_histogram(&[vec![0.1; 10]], &PhaseParams::default()),
            Err(Error::InsufficientStatistics { count: 10, .. })
        ));
    }
}
