mod common;

use common::{c, loglog_slope, real_norm};
use nmd_core::error::Error;
use nmd_core::ninebus::{self, X_SEP};
use nmd_core::poly::Monomial;
use nmd_core::power::{build_swing_field, find_equilibrium, make_jet, make_jet_with_tolerance, MachineParams, NetworkParams, PowerSystem};
use nmd_core::synth::{random_power_system, PowerSpec};
use nmd_core::trig::{taylor_trig, TrigComponent, TrigField, TrigTerm, Wave};
use nmd_core::{eigendecompose, Complex64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scalar(wave: Wave) -> TrigField {
    TrigField {
        components: vec![TrigComponent { constant: 0.0, linear: vec![], terms: vec![TrigTerm { amplitude: 1.0, wave, direction: vec![(0, 1.0)], phase: 0.0 }] }],
        angle_states: vec![],
    }
}

fn mono(e: &[u8]) -> Monomial {
    Monomial::new(e.to_vec())
}

#[test]
fn sine_and_cosine_series() {
    let s = taylor_trig(&scalar(Wave::Sin), &[0.0], 3).unwrap();
    assert_eq!(s.constant, vec![0.0]);
    assert!((s.map.linear()[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
    assert!(s.map.coeff(0, &mono(&[2])).norm() < 1e-15);
    assert!((s.map.coeff(0, &mono(&[3])) - c(-1.0 / 6.0, 0.0)).norm() < 1e-15);

    let co = taylor_trig(&scalar(Wave::Cos), &[0.0], 3).unwrap();
    assert!((co.constant[0] - 1.0).abs() < 1e-15);
    assert!(co.map.linear()[(0, 0)].norm() < 1e-15);
    assert!((co.map.coeff(0, &mono(&[2])) - c(-0.5, 0.0)).norm() < 1e-15);
    assert!(co.map.coeff(0, &mono(&[3])).norm() < 1e-15);
}

#[test]
fn linear_field_jet_is_its_matrix() {
    let field = TrigField {
        components: vec![
            TrigComponent { constant: 0.0, linear: vec![(1, 1.0)], terms: vec![] },
            TrigComponent { constant: 0.0, linear: vec![(0, -4.0), (1, -0.3)], terms: vec![] },
        ],
        angle_states: vec![],
    };
    let jet = make_jet(&field, &[0.0, 0.0], 3).unwrap();
    assert!(jet.jet.is_linear());
    assert_eq!(jet.jet.linear()[(1, 0)], c(-4.0, 0.0));
    assert_eq!(jet.jet.linear()[(1, 1)], c(-0.3, 0.0));
    assert_eq!(jet.jet.linear()[(0, 1)], c(1.0, 0.0));
}

fn central_first(field: &TrigField, x: &[f64], i: usize, j: usize, h: f64) -> f64 {
    let mut a = x.to_vec();
    let mut b = x.to_vec();
    a[j] += h;
    b[j] -= h;
    (field.eval(&a).unwrap()[i] - field.eval(&b).unwrap()[i]) / (2.0 * h)
}

fn central_second(field: &TrigField, x: &[f64], i: usize, j: usize, l: usize, h: f64) -> f64 {
    let shifted = |sj: f64, sl: f64| {
        let mut y = x.to_vec();
        y[j] += sj;
        y[l] += sl;
        field.eval(&y).unwrap()[i]
    };
    (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h)
}

fn close(a: f64, b: f64, rel: f64, scale: f64) -> bool {
    (a - b).abs() <= rel * scale.max(1.0)
}

#[test]
fn partial_derivatives_match_finite_differences() {
    let field = ninebus::literal();
    let exp = taylor_trig(&field, &X_SEP, 3).unwrap();
    let scale = exp.map.linear().iter().map(|v| v.norm()).fold(0.0, f64::max);
    for i in 0..6 {
        for j in 0..6 {
            let fd = central_first(&field, &X_SEP, i, j, 1e-6);
            assert!(close(exp.map.linear()[(i, j)].re, fd, 1e-6, scale), "d f{i}/d x{j}: {} vs {fd}", exp.map.linear()[(i, j)].re);
            for l in j..6 {
                let mut e = vec![0u8; 6];
                e[j] += 1;
                e[l] += 1;
                let coeff = exp.map.coeff(i, &Monomial::new(e)).re;
                let taylor = if j == l { 2.0 * coeff } else { coeff };
                let fd = central_second(&field, &X_SEP, i, j, l, 1e-4);
                assert!(close(taylor, fd, 1e-6, scale), "d2 f{i}/d x{j} d x{l}: {taylor} vs {fd}");
            }
        }
    }
}

#[test]
fn jet_jacobian_matches_field_jacobian() {
    let field = ninebus::balanced();
    let jet = make_jet(&field, &X_SEP, 3).unwrap();
    let exact = field.jacobian(&X_SEP).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            assert!((jet.jet.linear()[(i, j)].re - exact[(i, j)]).abs() < 1e-12);
            assert_eq!(jet.jet.linear()[(i, j)].im, 0.0);
        }
    }
}

#[test]
fn taylor_remainder_has_order_k_plus_one() {
    let field = ninebus::literal();
    let dir = [0.3, -0.2, -0.5, 0.1, 0.8, 0.4];
    for k in 2..=4 {
        let exp = taylor_trig(&field, &X_SEP, k).unwrap();
        let steps = [1e-3, 1e-2, 1e-1];
        let errs: Vec<f64> = steps
            .iter()
            .map(|&s| {
                let y: Vec<f64> = dir.iter().map(|d| d * s).collect();
                let x: Vec<f64> = X_SEP.iter().zip(&y).map(|(a, b)| a + b).collect();
                let exact = field.eval(&x).unwrap();
                let yc: Vec<Complex64> = y.iter().map(|&v| c(v, 0.0)).collect();
                let approx = exp.map.eval(&yc).unwrap();
                let diff: Vec<f64> = (0..6).map(|i| exact[i] - exp.constant[i] - approx[i].re).collect();
                real_norm(&diff)
            })
            .collect();
        assert!(loglog_slope(&steps, &errs) > k as f64 + 0.5, "k={k} {errs:?}");
    }
}

#[test]
fn literal_fixture_balances_only_the_first_machine() {
    let f = ninebus::literal().eval(&X_SEP).unwrap();
    // angle rates are the common drift
    for i in [0, 2, 4] {
        assert!((f[i] - 3.12).abs() < 1e-12);
    }
    assert!(f[1].abs() < 1e-3);
    assert!(f[3].abs() > 10.0 && f[5].abs() > 10.0);
    assert!(matches!(make_jet(&ninebus::literal(), &X_SEP, 3), Err(Error::ResidualTooLarge { .. })));
}

#[test]
fn balanced_fixture_is_a_relative_equilibrium() {
    let jet = make_jet(&ninebus::balanced(), &X_SEP, 3).unwrap();
    assert!((jet.drift - 3.12).abs() < 1e-12);
    let relaxed = make_jet_with_tolerance(&ninebus::literal(), &X_SEP, 3, 100.0).unwrap();
    assert_eq!(relaxed.jet.linear(), jet.jet.linear());
}

fn two_machine() -> PowerSystem {
    let mc = MachineParams { h: 5.0, d: 1.0, pm: 0.5, e: 1.0 };
    let net = NetworkParams {
        g: vec![0.0, 0.0],
        c: nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        d: nalgebra::DMatrix::zeros(2, 2),
    };
    PowerSystem { machines: vec![mc, MachineParams { pm: -0.5, ..mc }], network: net, omega_s: 1.0 }
}

#[test]
fn swing_equilibrium_solves_power_balance() {
    let field = build_swing_field(&two_machine()).unwrap();
    let eq = find_equilibrium(&field, &[0.0; 4]).unwrap();
    // sin(d1 - d2) = 0.5
    let delta = eq.state[0] - eq.state[2];
    assert!((delta - std::f64::consts::FRAC_PI_6).abs() < 1e-9, "{delta}");
    assert!(eq.drift.abs() < 1e-9);
}

#[test]
fn invalid_power_system_is_rejected() {
    let mut sys = two_machine();
    sys.machines[1].h = 0.0;
    assert!(matches!(build_swing_field(&sys), Err(Error::NonPositiveInertia { machine: 1 })));
    let mut sys = two_machine();
    sys.network.g.pop();
    assert!(build_swing_field(&sys).unwrap_err().is_input());
}

#[test]
fn random_swing_systems_have_two_real_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for machines in [3, 4, 5] {
        for _ in 0..4 {
            let spec = PowerSpec { machines, ..PowerSpec::default() };
            let (sys, angles) = random_power_system(&spec, &mut rng);
            let field = build_swing_field(&sys).unwrap();
            let guess: Vec<f64> = angles.iter().flat_map(|&a| [a, 0.0]).collect();
            let eq = find_equilibrium(&field, &guess).unwrap();
            let jet = make_jet(&field, &eq.state, 3).unwrap();
            let basis = eigendecompose(&jet).unwrap();
            assert_eq!(basis.dropped.len(), 2);
            assert_eq!(basis.n_modes(), machines - 1);
            assert!(basis.dropped.iter().any(|l| l.norm() < 1e-8), "{:?}", basis.dropped);
        }
    }
}
