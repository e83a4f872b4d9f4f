use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regimelab::noisefilter::rms_diff;
use regimelab::*;

fn coeffs() -> impl Strategy<Value = Coefficients> {
    (-5.0..5.0f64, -5.0..5.0f64, 0.05..5.0f64, 0.05..5.0f64, any::<bool>(), any::<bool>()).prop_map(
        |(c1, c2, c3, c4, n3, n4)| {
            Coefficients::new(c1, c2, if n3 { -c3 } else { c3 }, if n4 { -c4 } else { c4 }).unwrap()
        },
    )
}

fn state() -> impl Strategy<Value = StateVec> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| StateVec::new(x, y, z))
}

fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|e| (e - m) * (e - m)).sum::<f64>() / (v.len() - 1) as f64
}

proptest! {
    #[test]
    fn x_and_y_rates_cancel_cubic_terms(s in state(), c in coeffs()) {
        let f = vector_field(s, &c).unwrap();
        let lhs = f.x + c.c3() * f.y;
        let rhs = -s.y + c.c2() * s.z + c.c1();
        let scale = 1.0 + s.x.abs() * (1.0 + s.y * s.y) + rhs.abs();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{} vs {}", lhs, rhs);
    }

    #[test]
    fn vector_field_is_bit_deterministic(s in state(), c in coeffs()) {
        let a = vector_field(s, &c).unwrap();
        let b = vector_field(s, &c).unwrap();
        prop_assert_eq!(a.x.to_bits(), b.x.to_bits());
        prop_assert_eq!(a.y.to_bits(), b.y.to_bits());
        prop_assert_eq!(a.z.to_bits(), b.z.to_bits());
    }

    #[test]
    fn dx_ignores_z_when_c2_is_zero(s in state(), dz in -10.0..10.0f64, c in coeffs()) {
        let c = c.with(CoefficientName::C2, 0.0).unwrap();
        let a = vector_field(s, &c).unwrap();
        let b = vector_field(StateVec::new(s.x, s.y, s.z + dz), &c).unwrap();
        prop_assert_eq!(a.x, b.x);
    }

    #[test]
    fn equilibria_always_pass_residual_check(c in coeffs()) {
        for fp in fixed_points(&c, 1e-9, 60) {
            prop_assert!(fp.residual_norm <= 1e-9);
            prop_assert!(vector_field(fp.state, &c).unwrap().norm() <= 1e-9);
        }
    }

    #[test]
    fn peaks_shift_and_scale(
        raw in prop::collection::vec(-5.0..5.0f64, 3..200),
        shift in -100.0..100.0f64,
        scale_exp in -3i32..4,
        h in 0.0..1.0f64,
    ) {
        // Dyadic values keep shifting and scaling exact in binary floating
        // point, so the comparison below can be exact.
        let series: Vec<f64> = raw.iter().map(|v| (v * 64.0).round() / 64.0).collect();
        let h = (h * 64.0).round() / 64.0;
        let shift = shift.round();
        let scale = 2f64.powi(scale_exp);
        let base = detect_peaks(&series, h);
        let shifted: Vec<f64> = series.iter().map(|v| v + shift).collect();
        let sp = detect_peaks(&shifted, h);
        prop_assert_eq!(sp.len(), base.len());
        for (a, b) in sp.iter().zip(&base) {
            prop_assert_eq!(a.0, b.0);
            prop_assert_eq!(a.1, b.1 + shift);
        }
        let scaled: Vec<f64> = series.iter().map(|v| v * scale).collect();
        let sc = detect_peaks(&scaled, h * scale);
        prop_assert_eq!(sc.len(), base.len());
        for (a, b) in sc.iter().zip(&base) {
            prop_assert_eq!(a.0, b.0);
            prop_assert_eq!(a.1, b.1 * scale);
        }
    }

    #[test]
    fn peaks_are_interior(series in prop::collection::vec(-5.0..5.0f64, 0..100), h in 0.0..2.0f64) {
        for (i, v) in detect_peaks(&series, h) {
            prop_assert!(i > 0 && i + 1 < series.len());
            prop_assert_eq!(v, series[i]);
        }
    }

    #[test]
    fn filters_are_linear(
        pair in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..200),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        window in 1usize..40,
        alpha in 0.001..1.0f64,
    ) {
        let u: Vec<f64> = pair.iter().map(|p| p.0).collect();
        let v: Vec<f64> = pair.iter().map(|p| p.1).collect();
        let mix: Vec<f64> = u.iter().zip(&v).map(|(p, q)| a * p + b * q).collect();
        for filt in [FilterSpec::MovingAverage { window }, FilterSpec::OnePole { alpha }] {
            let fu = filt.apply(&u).unwrap();
            let fv = filt.apply(&v).unwrap();
            let fm = filt.apply(&mix).unwrap();
            prop_assert_eq!(fm.len(), mix.len());
            for k in 0..mix.len() {
                let expect = a * fu[k] + b * fv[k];
                prop_assert!((fm[k] - expect).abs() <= 1e-12, "{} vs {}", fm[k], expect);
            }
        }
    }

    #[test]
    fn filters_have_unit_dc_gain(c in -1e6..1e6f64, n in 1usize..300, window in 1usize..50, alpha in 0.001..1.0f64) {
        let s = vec![c; n];
        prop_assert_eq!(filter_moving_average(&s, window).unwrap(), s.clone());
        prop_assert_eq!(filter_one_pole(&s, alpha).unwrap(), s);
    }

    #[test]
    fn noise_is_reproducible(seed in any::<u64>(), amp in 0.0..2.0f64, uniform in any::<bool>()) {
        let traj = integrate(&SimSpec { t_end: 0.2, ..SimSpec::default() }, &preset(PresetId::AllOnes).0).unwrap();
        let distribution = if uniform { NoiseDistribution::Uniform } else { NoiseDistribution::Gaussian };
        let spec = NoiseSpec { distribution, amplitude: amp, seed };
        let a = add_noise(&traj, &spec).unwrap();
        let b = add_noise(&traj, &spec).unwrap();
        prop_assert_eq!(a.len(), traj.len());
        for c in Component::ALL {
            let (p, q) = (a.get(c), b.get(c));
            prop_assert!(p.iter().zip(q).all(|(u, v)| u.to_bits() == v.to_bits()));
        }
    }
}

#[test]
fn one_pole_step_response_closed_form() {
    // 0 -> 1 step at k = 1 with alpha = 0.1: y[k] = 1 - 0.9^k.
    let mut step = vec![1.0; 400];
    step[0] = 0.0;
    let out = filter_one_pole(&step, 0.1).unwrap();
    assert_eq!(out[0], 0.0);
    for (k, y) in out.iter().enumerate().skip(1) {
        assert!((y - (1.0 - 0.9f64.powi(k as i32))).abs() <= 1e-12, "k = {k}");
    }
    // Starting on the high level the output is exact from the first sample.
    assert!(filter_one_pole(&[1.0; 50], 0.1).unwrap().iter().all(|&y| y == 1.0));
}

#[test]
fn moving_average_divides_white_noise_variance() {
    let n = 100_000;
    let noise = white_noise(n, 11);
    let out = filter_moving_average(&noise, 16).unwrap();
    let ratio = variance(&noise) / variance(&out[16..]);
    assert!((ratio - 16.0).abs() <= 0.15 * 16.0, "ratio {ratio}");
}

#[test]
fn gaussian_noise_has_requested_spread() {
    let traj =
        Trajectory { t0: 0.0, dt: 1e-3, samples: vec![StateVec::new(2.0, -1.0, 0.5); 100_000], diverged_at: None };
    let noisy =
        add_noise(&traj, &NoiseSpec { distribution: NoiseDistribution::Gaussian, amplitude: 0.1, seed: 5 }).unwrap();
    for (c, clean) in [(Component::X, 2.0), (Component::Y, -1.0), (Component::Z, 0.5)] {
        let resid: Vec<f64> = noisy.get(c).iter().map(|v| v - clean).collect();
        let sd = variance(&resid).sqrt();
        assert!((sd - 0.1).abs() <= 0.003, "{c}: {sd}");
    }
}

#[test]
fn uniform_noise_has_requested_spread() {
    let traj = Trajectory { t0: 0.0, dt: 1e-3, samples: vec![StateVec::ORIGIN; 100_000], diverged_at: None };
    let noisy =
        add_noise(&traj, &NoiseSpec { distribution: NoiseDistribution::Uniform, amplitude: 0.3, seed: 9 }).unwrap();
    // Half-width a gives standard deviation a / sqrt(3).
    let sd = variance(&noisy.x).sqrt();
    assert!((sd - 0.3 / 3f64.sqrt()).abs() <= 0.03 * 0.3 / 3f64.sqrt(), "{sd}");
}

fn post_transient_rms(run: &FilteredRun, c: Component) -> (f64, f64) {
    let clean = run.clean.channel(c);
    let half = clean.len() / 2;
    (rms_diff(&run.noisy.get(c)[half..], &clean[half..]), rms_diff(&run.filtered.get(c)[half..], &clean[half..]))
}

#[test]
fn low_pass_beats_raw_noise_on_converged_run() {
    let (c, init, t0) = preset(PresetId::AllOnes);
    let spec = SimSpec::new(t0, 200.0, 1e-3, Method::Rk4, init);
    let noise = NoiseSpec { distribution: NoiseDistribution::Gaussian, amplitude: 0.05, seed: 7 };
    let fine = pipeline(&spec, &c, &noise, &FilterSpec::OnePole { alpha: 0.05 }).unwrap();
    let coarse = pipeline(&spec, &c, &noise, &FilterSpec::OnePole { alpha: 0.5 }).unwrap();
    assert_eq!(fine.noisy, coarse.noisy);
    for comp in Component::ALL {
        let (raw, filtered_fine) = post_transient_rms(&fine, comp);
        let (_, filtered_coarse) = post_transient_rms(&coarse, comp);
        assert!(filtered_fine < raw, "{comp}");
        assert!(filtered_fine < filtered_coarse, "{comp}");
    }
}

#[test]
fn pipeline_preserves_length_and_time_base() {
    let (c, init, t0) = preset(PresetId::Fig13);
    let spec = SimSpec::new(t0, 3.0, 1e-3, Method::Heun, init);
    let noise = NoiseSpec { distribution: NoiseDistribution::Uniform, amplitude: 0.2, seed: 1 };
    let run = pipeline(&spec, &c, &noise, &FilterSpec::MovingAverage { window: 8 }).unwrap();
    assert_eq!(run.noisy.len(), run.clean.len());
    assert_eq!(run.filtered.len(), run.clean.len());
    let again = pipeline(&spec, &c, &noise, &FilterSpec::MovingAverage { window: 8 }).unwrap();
    assert_eq!(run, again);
}

#[test]
fn integrate_is_bit_reproducible() {
    let (c, init, t0) = preset(PresetId::Fig13);
    let spec = SimSpec::new(t0, 50.0, 1e-4, Method::Rk4, init);
    let a = integrate(&spec, &c).unwrap();
    let b = integrate(&spec, &c).unwrap();
    assert_eq!(a.len(), b.len());
    assert!(a.samples.iter().zip(&b.samples).all(|(p, q)| {
        p.x.to_bits() == q.x.to_bits() && p.y.to_bits() == q.y.to_bits() && p.z.to_bits() == q.z.to_bits()
    }));
}

#[test]
fn sweep_independent_of_pool_size() {
    let base = preset(PresetId::AllOnes).0;
    let sweep = SweepSpec { parameter: CoefficientName::C2, lo: 0.0, hi: 2.0, count: 50, component: Component::Y };
    let spec = SimSpec { t_end: 40.0, ..SimSpec::default() };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| bifurcation_sweep(&sweep, &base, &spec).unwrap())
    };
    let one = run(1);
    let many = run(8);
    assert_eq!(one, many);
    assert!(one.parameter_values.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(one.attractor_samples.len(), 50);
}

#[test]
fn settle_time_within_run() {
    for id in PresetId::ALL {
        let (c, init, t0) = preset(id);
        let traj = integrate(&SimSpec::new(t0, 60.0, 1e-3, Method::Rk4, init), &c).unwrap();
        for tol in [1e-2, 1e-4, 1e-6] {
            if let Some(t) = analysis::settle_time(&traj, &c, tol) {
                assert!(t >= t0 && t <= traj.t_end(), "{id} {tol}: {t}");
            }
        }
    }
}

#[test]
fn converged_runs_have_non_positive_lyapunov() {
    for id in PresetId::ALL {
        let (c, init, t0) = preset(id);
        let spec = SimSpec::new(t0, 400.0, 1e-3, Method::Rk4, init);
        let traj = integrate(&spec, &c).unwrap();
        let report = classify_regime(&traj, &c, &Thresholds::default(), None).unwrap();
        if report.label == RegimeLabel::Converged {
            let l = lyapunov_max(&c, &spec, 100, 1e-8).unwrap();
            assert!(l <= 0.01, "{id}: {l}");
        }
    }
}
