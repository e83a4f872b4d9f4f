//! Independent oracles for the model, integrators, and analysis.

use num::{BigRational, FromPrimitive, ToPrimitive};
use regimelab::analysis::{lyapunov_max, settle_time, DEFAULT_RENORM_INTERVAL, DEFAULT_SEPARATION};
use regimelab::*;

/// Real root of y^3 - 2y^2 - 1 = 0 by bisection. Equilibria of the unit
/// system satisfy x = y/(1+y^2), z = y - 1 and this cubic.
fn cubic_root_by_bisection() -> f64 {
    let g = |y: f64| y * y * y - 2.0 * y * y - 1.0;
    let (mut lo, mut hi) = (2.20, 2.21);
    assert!(g(lo) < 0.0 && g(hi) > 0.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn ones() -> Coefficients {
    preset(PresetId::AllOnes).0
}

#[test]
fn unit_equilibrium_matches_bisection() {
    let y = cubic_root_by_bisection();
    assert!((y - 2.2056).abs() < 1e-3);
    let fps = fixed_points(&ones(), 1e-10, 100);
    let fp = fps.iter().find(|p| (p.state.y - y).abs() < 1e-6).expect("equilibrium on the cubic root");
    assert!((fp.state.x - y / (1.0 + y * y)).abs() < 1e-6);
    assert!((fp.state.z - (y - 1.0)).abs() < 1e-6);
    assert!(fp.residual_norm < 1e-10);
}

/// The field written out again, term by term, for residual checks.
fn field_by_hand(s: StateVec, c: [f64; 4]) -> [f64; 3] {
    let [c1, c2, c3, c4] = c;
    let (x, y, z) = (s.x, s.y, s.z);
    [-x - x * y.powi(2) + c2 * z + c1, (x + x * y.powi(2) - y) / c3, (y - z) / c4 - (x * y * z) / c4]
}

#[test]
fn bifurcation_preset_equilibria_pass_residual_check() {
    let c = preset(PresetId::Fig13).0;
    let fps = fixed_points(&c, 1e-10, 100);
    assert!(!fps.is_empty());
    for fp in fps {
        let r = field_by_hand(fp.state, c.to_array());
        let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        assert!(norm <= 1e-10, "{fp:?} residual {norm}");
        assert!(fp.residual_norm <= 1e-10);
    }
}

#[test]
fn every_preset_equilibrium_is_a_root() {
    for id in PresetId::ALL {
        let c = preset(id).0;
        for fp in fixed_points(&c, 1e-10, 100) {
            assert!(vector_field(fp.state, &c).unwrap().norm() <= 1e-10, "{id}: {fp:?}");
        }
    }
}

// Exact rational arithmetic for one RK4 step of the unit system.
type Q = BigRational;

fn q(v: f64) -> Q {
    Q::from_f64(v).unwrap()
}

fn field_exact(s: &[Q; 3]) -> [Q; 3] {
    let one = q(1.0);
    let [x, y, z] = s;
    let xy2 = x * y * y;
    [-x - &xy2 + z + &one, x + &xy2 - y, y - z - x * y * z]
}

fn axpy(s: &[Q; 3], h: &Q, k: &[Q; 3]) -> [Q; 3] {
    [&s[0] + h * &k[0], &s[1] + h * &k[1], &s[2] + h * &k[2]]
}

#[test]
fn rk4_step_matches_exact_rational_step() {
    let dt = q(0.1);
    let half = &dt / q(2.0);
    let s = [q(0.0), q(0.0), q(0.0)];
    let k1 = field_exact(&s);
    let k2 = field_exact(&axpy(&s, &half, &k1));
    let k3 = field_exact(&axpy(&s, &half, &k2));
    let k4 = field_exact(&axpy(&s, &dt, &k3));
    let six = q(6.0);
    let two = q(2.0);
    let exact: Vec<f64> = (0..3)
        .map(|i| (&s[i] + &dt / &six * (&k1[i] + &two * &k2[i] + &two * &k3[i] + &k4[i])).to_f64().unwrap())
        .collect();
    let got = step_rk4(StateVec::ORIGIN, &ones(), 0.1).unwrap();
    assert!((got.x - exact[0]).abs() <= 1e-12);
    assert!((got.y - exact[1]).abs() <= 1e-12);
    assert!((got.z - exact[2]).abs() <= 1e-12);
}

#[test]
fn convergence_orders_on_unit_system() {
    let rk4 = convergence_order(Method::Rk4, &ones(), StateVec::ORIGIN, 5.0).unwrap().value().unwrap();
    let heun = convergence_order(Method::Heun, &ones(), StateVec::ORIGIN, 5.0).unwrap().value().unwrap();
    assert!((3.7..=4.3).contains(&rk4), "rk4 order {rk4}");
    assert!((1.7..=2.3).contains(&heun), "heun order {heun}");
}

#[test]
fn unit_run_lands_on_equilibrium() {
    let fp = fixed_points(&ones(), 1e-12, 100)[0].state;
    let spec = SimSpec { t_end: 200.0, ..SimSpec::default() };
    let traj = integrate(&spec, &ones()).unwrap();
    assert_eq!(traj.len(), 200_001);
    assert!((traj.last() - fp).sup_norm() < 1e-6);

    // Independent fine-step Heun run over the first ten time units.
    let reference =
        integrate(&SimSpec { t_end: 10.0, dt: 1e-5, method: Method::Heun, ..SimSpec::default() }, &ones()).unwrap();
    for k in 0..=10_000 {
        assert!((traj.samples[k] - reference.samples[100 * k]).sup_norm() < 1e-4, "t = {}", traj.time(k));
    }
}

fn worst_gap(id: PresetId, coarse_dt: f64, fine_dt: f64) -> Option<f64> {
    let (c, init, t0) = preset(id);
    let coarse = integrate(&SimSpec::new(t0, 10.0, coarse_dt, Method::Rk4, init), &c).unwrap();
    let fine = integrate(&SimSpec::new(t0, 10.0, fine_dt, Method::Heun, init), &c).unwrap();
    if coarse.diverged_at.is_some() || fine.diverged_at.is_some() {
        return None;
    }
    let stride = (coarse_dt / fine_dt).round() as usize;
    Some((0..coarse.len()).map(|k| (coarse.samples[k] - fine.samples[stride * k]).sup_norm()).fold(0.0, f64::max))
}

#[test]
fn rk4_and_fine_heun_agree() {
    for id in [PresetId::Fig12, PresetId::AllOnes] {
        let worst = worst_gap(id, 1e-3, 1e-5).expect("run stays bounded");
        assert!(worst < 1e-4, "{id}: {worst}");
    }
}

#[test]
fn rk4_and_fine_heun_agree_through_bifurcation_spike() {
    // The fig13 start-up spike (y near 42 around t = 0.1) leaves an O(0.4)
    // gap at dt = 1e-3 and O(3e-4) even for Heun at 1e-5; both methods need
    // ten times finer steps to agree at 1e-4.
    let coarse = worst_gap(PresetId::Fig13, 1e-3, 1e-5).unwrap();
    assert!(coarse > 1e-4, "{coarse}");
    let refined = worst_gap(PresetId::Fig13, 1e-4, 1e-6).unwrap();
    assert!(refined < 1e-4, "{refined}");
}

#[test]
fn equilibrium_is_preserved() {
    let fp = fixed_points(&ones(), 1e-12, 100)[0];
    assert!(fp.residual_norm <= 1e-12);
    let spec = SimSpec { t_end: 100.0, initial: fp.state, ..SimSpec::default() };
    assert_eq!(spec.step_count().unwrap(), 100_000);
    let traj = integrate(&spec, &ones()).unwrap();
    let drift = traj.samples.iter().map(|s| (*s - fp.state).sup_norm()).fold(0.0, f64::max);
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn settle_time_regression() {
    let spec = SimSpec { t_end: 200.0, ..SimSpec::default() };
    let traj = integrate(&spec, &ones()).unwrap();
    let tight = settle_time(&traj, &ones(), 1e-4).unwrap();
    let loose = settle_time(&traj, &ones(), 1e-2).unwrap();
    assert!(loose <= tight);
    // Frozen from the reference run (rk4, dt = 1e-3).
    assert_eq!(tight, traj.time(24_910));
    assert_eq!(loose, traj.time(12_497));
}

#[test]
fn unit_run_lyapunov_is_not_chaotic() {
    let spec = SimSpec { t_end: 500.0, ..SimSpec::default() };
    let l = lyapunov_max(&ones(), &spec, DEFAULT_RENORM_INTERVAL, DEFAULT_SEPARATION).unwrap();
    assert!(l <= 0.01);
    // Frozen from the reference run: the slowest decay rate at the equilibrium.
    assert!((l - (-0.37046090993527575)).abs() < 1e-9, "{l}");
}

#[test]
fn lyapunov_insensitive_to_renorm_interval() {
    for id in PresetId::ALL {
        let (c, init, t0) = preset(id);
        let spec = SimSpec::new(t0, 100.0, 1e-3, Method::Rk4, init);
        let base = lyapunov_max(&c, &spec, 100, DEFAULT_SEPARATION).unwrap();
        let doubled = lyapunov_max(&c, &spec, 200, DEFAULT_SEPARATION).unwrap();
        let halved = lyapunov_max(&c, &spec, 50, DEFAULT_SEPARATION).unwrap();
        assert!((base - doubled).abs() < 0.02, "{id}: {base} vs {doubled}");
        assert!((base - halved).abs() < 0.02, "{id}: {base} vs {halved}");
    }
}

#[test]
fn c3_sweep_matches_golden_counts() {
    let base = preset(PresetId::Fig13).0;
    let sweep = SweepSpec { parameter: CoefficientName::C3, lo: 0.01, hi: 1.0, count: 100, component: Component::X };
    let d = bifurcation_sweep(&sweep, &base, &SimSpec::default()).unwrap();
    let text: String = d
        .parameter_values
        .iter()
        .zip(&d.attractor_samples)
        .zip(&d.diverged)
        .map(|((p, s), div)| {
            format!("{} {} {}\n", regimelab::io::format_f64(*p), s.len(), if *div { "diverged" } else { "ok" })
        })
        .collect();
    let golden = include_str!("golden/c3_sweep_counts.txt");
    assert_eq!(text, golden);
}
