use std::f64::consts::{PI, TAU};

use nsdi::phase::{
    analytic_signal, fwhm, histogram_from_values, normalize_by_envelope, pair_phase_difference,
    pair_series_phase_difference, phase_histogram, wrap_angle, PhaseParams, Pooling, RealTrace,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn trace(samples: Vec<f64>, dt: f64) -> RealTrace {
    RealTrace::new(samples, dt, 0.0).unwrap()
}

/// Quasi-periodic test signal with a DC offset and two incommensurate tones.
fn signal(n: usize, dt: f64, omega: f64, lag: f64, offset: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let t = m as f64 * dt;
            offset + (omega * t - lag).cos() + 0.3 * (1.7 * omega * t + 0.4).sin()
        })
        .collect()
}

fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scaling_scales_envelope_and_keeps_phase(
        n in 64usize..512,
        omega in 0.2f64..2.0,
        lag in -PI..PI,
        offset in -3.0f64..3.0,
        a in 0.01f64..100.0,
    ) {
        let dt = 0.1;
        let s = signal(n, dt, omega, lag, offset);
        let base = analytic_signal(&trace(s.clone(), dt)).unwrap();
        let scaled = analytic_signal(&trace(s.iter().map(|v| a * v).collect(), dt)).unwrap();
        let (e0, e1) = (base.envelope(), scaled.envelope());
        let emax = e0.iter().copied().fold(0.0, f64::max);
        for (x, y) in e0.iter().zip(&e1) {
            prop_assert!((a * x - y).abs() <= 1e-9 * a * emax);
        }
        for ((p, q), e) in base.phase().iter().zip(scaled.phase()).zip(&e0) {
            if *e > 1e-6 * emax {
                prop_assert!(angle_diff(*p, q) < 1e-8);
            }
        }
    }

    #[test]
    fn real_part_reproduces_demeaned_input(
        n in 16usize..400,
        omega in 0.1f64..3.0,
        offset in -5.0f64..5.0,
    ) {
        let dt = 0.07;
        let s = signal(n, dt, omega, 0.3, offset);
        let z = analytic_signal(&trace(s.clone(), dt)).unwrap();
        let scale = s.iter().map(|v| (v - z.mean).abs()).fold(0.0, f64::max);
        for (c, v) in z.z.iter().zip(&s) {
            prop_assert!((c.re - (v - z.mean)).abs() <= 1e-10 * scale.max(1.0));
        }
    }

    #[test]
    fn circular_shift_shifts_phase_series(
        periods in 4usize..20,
        per_period in 16usize..48,
        shift in 1usize..200,
        lag in -PI..PI,
    ) {
        // an integer number of periods keeps the circular shift a pure delay
        let n = periods * per_period;
        let dt = 0.05;
        let omega = TAU / (per_period as f64 * dt);
        let s: Vec<f64> = (0..n)
            .map(|m| (omega * m as f64 * dt - lag).cos() + 0.5 * (2.0 * omega * m as f64 * dt).cos())
            .collect();
        let m = shift % n;
        let mut shifted = s.clone();
        shifted.rotate_right(m);
        let p0 = analytic_signal(&trace(s, dt)).unwrap().phase();
        let p1 = analytic_signal(&trace(shifted, dt)).unwrap().phase();
        let g = n / 20;
        for k in g..n - g {
            prop_assert!(angle_diff(p1[(k + m) % n], p0[k]) < 1e-6);
        }
    }

    #[test]
    fn relabeling_reflects_the_density(
        seed in 0u64..1000,
        sigma in 0.2f64..1.0,
        center in -1.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(center, sigma).unwrap();
        let values: Vec<f64> = (0..2000).map(|_| wrap_angle(normal.sample(&mut rng))).collect();
        let swapped: Vec<f64> = values.iter().map(|v| wrap_angle(-v)).collect();
        let a = histogram_from_values(&values, 128, 0.15);
        let b = histogram_from_values(&swapped, 128, 0.15);
        let n = a.density.len();
        let peak = a.density.iter().copied().fold(0.0, f64::max);
        for k in 0..n {
            // bin centre -c sits in bin n-1-k
            prop_assert!((a.density[k] - b.density[n - 1 - k]).abs() <= 1e-9 * peak);
        }
        match (a.fwhm, b.fwhm) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-9),
            (x, y) => prop_assert_eq!(x.is_none(), y.is_none()),
        }
    }

    #[test]
    fn density_is_a_normalized_circular_density(
        seed in 0u64..1000,
        count in 1usize..3000,
        sigma_h in 0.05f64..0.6,
        bins in 16usize..256,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..count)
            .map(|_| rand::Rng::random_range(&mut rng, -10.0..10.0))
            .collect();
        let stats = histogram_from_values(&values, bins, sigma_h);
        prop_assert!(stats.density.iter().all(|&d| d >= 0.0));
        prop_assert!((stats.integral() - 1.0).abs() < 1e-9);
        prop_assert!(stats.bin_centers.iter().all(|&c| (-PI..PI).contains(&c)));
        if let Some(w) = stats.fwhm {
            prop_assert!(w > 0.0 && w <= TAU);
        }
    }

    #[test]
    fn phase_differences_stay_in_the_wrap_range(
        omega1 in 0.3f64..2.0,
        omega2 in 0.3f64..2.0,
        lag in -10.0f64..10.0,
    ) {
        let dt = 0.05;
        let n = 600;
        let p = |omega: f64, lag: f64| {
            normalize_by_envelope(&analytic_signal(&trace(signal(n, dt, omega, lag, 0.0), dt)).unwrap(), 1e-3)
                .unwrap()
                .guard_edges(0.05)
        };
        let d = pair_phase_difference(&p(omega1, 0.0), &p(omega2, lag), (0.0, n as f64 * dt)).unwrap();
        prop_assert!(d.iter().all(|v| (-PI..PI).contains(v)));
    }

    #[test]
    fn wrap_angle_lands_in_range_and_preserves_the_angle(a in -1e4f64..1e4) {
        let w = wrap_angle(a);
        prop_assert!((-PI..PI).contains(&w));
        let k = ((a - w) / TAU).round();
        prop_assert!((a - w - k * TAU).abs() < 1e-9 * a.abs().max(1.0));
    }
}

#[test]
fn edge_guard_changes_stationary_fwhm_by_under_five_percent() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let lags = Normal::new(0.0, 0.5).unwrap();
    let (dt, n, omega) = (0.1, 900, 0.184);
    let window = (0.0, n as f64 * dt);
    let mut pairs = Vec::new();
    for _ in 0..1000 {
        let lag = lags.sample(&mut rng);
        let e1 = trace(signal(n, dt, omega, 0.0, 0.0), dt);
        let e2 = trace(signal(n, dt, omega, lag, 0.0), dt);
        pairs.push((e1, e2));
    }
    let width = |guard: f64| {
        let params = PhaseParams {
            edge_guard: guard,
            ..PhaseParams::default()
        };
        let series: Vec<Vec<f64>> = pairs
            .iter()
            .map(|(a, b)| pair_series_phase_difference(a, b, window, &params).unwrap())
            .collect();
        fwhm(&phase_histogram(&series, &params).unwrap()).unwrap()
    };
    let (guarded, bare) = (width(0.05), width(0.0));
    assert!((guarded / bare - 1.0).abs() < 0.05, "{guarded} vs {bare}");
}

#[test]
fn raw_and_time_averaged_pooling_agree_for_constant_lags() {
    let (dt, n) = (0.1, 500);
    let lags = [-0.4, -0.1, 0.0, 0.2, 0.35, 0.5];
    let series: Vec<Vec<f64>> = lags
        .iter()
        .map(|&lag| {
            let tone = |lag: f64, offset: f64| (0..n).map(|m| offset + (0.5 * m as f64 * dt - lag).cos()).collect();
            let a = trace(tone(0.0, 1.0), dt);
            let b = trace(tone(lag, -1.0), dt);
            pair_series_phase_difference(&a, &b, (0.0, n as f64 * dt), &PhaseParams::default()).unwrap()
        })
        .collect();
    let avg = phase_histogram(&series, &PhaseParams::default()).unwrap();
    let raw = phase_histogram(
        &series,
        &PhaseParams {
            pooling: Pooling::RawSamples,
            ..PhaseParams::default()
        },
    )
    .unwrap();
    let (a, r) = (avg.fwhm.unwrap(), raw.fwhm.unwrap());
    assert!((a / r - 1.0).abs() < 0.05, "{a} vs {r}");
}
