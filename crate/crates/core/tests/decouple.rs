mod common;

use common::{c, loglog_slope, mechanical, ninebus_model, norm, paired_point, real_norm};
use nmd_core::decouple::{
    build_smib_target, conjugacy_residual, decouple_step, forward_map, inverse_map, run_decoupling, DecoupleOptions, IntraModalTarget,
    JacobianUpdate, TargetKind,
};
use nmd_core::error::Error;
use nmd_core::modal::to_modal;
use nmd_core::ninebus::OPERATING_ANGLES;
use nmd_core::oscillator::{smib_realize, to_real, ModeScaling};
use nmd_core::poly::{Monomial, PolyMap};
use nmd_core::power::EquilibriumJet;
use nmd_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EXACT: DecoupleOptions = DecoupleOptions { update: JacobianUpdate::Exact };
const FIRST_ORDER: DecoupleOptions = DecoupleOptions { update: JacobianUpdate::FirstOrder };

fn mono(e: &[u8]) -> Monomial {
    Monomial::new(e.to_vec())
}

fn random_eigenvalue(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..-0.05), rng.gen_range(0.5..5.0))
}

fn random_coeff(rng: &mut ChaCha8Rng) -> Complex64 {
    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Two single-variable modes `z1` (slot 0) and `z2` (slot 2) with quadratic
/// terms; slots 1 and 3 are passive partners.
#[test]
fn two_variable_h_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut draws = 0;
    while draws < 20 {
        let (l1, l2) = (random_eigenvalue(&mut rng), random_eigenvalue(&mut rng));
        let lam = [l1, random_eigenvalue(&mut rng), l2, random_eigenvalue(&mut rng)];
        let guard = 1e-6 * lam.iter().map(|l| l.norm()).fold(0.0, f64::max);
        if [l2, 2.0 * l2 - l1, l1, 2.0 * l1 - l2].iter().any(|d| d.norm() < 1e3 * guard) {
            continue;
        }
        draws += 1;
        let b1: [Complex64; 3] = std::array::from_fn(|_| random_coeff(&mut rng));
        let b2: [Complex64; 3] = std::array::from_fn(|_| random_coeff(&mut rng));
        let mut sys = PolyMap::zero(4, 4, 2);
        for (i, l) in lam.iter().enumerate() {
            sys.linear_mut()[(i, i)] = *l;
        }
        let quads = [mono(&[2, 0, 0, 0]), mono(&[1, 0, 1, 0]), mono(&[0, 0, 2, 0])];
        for (q, (&x, &y)) in quads.iter().zip(b1.iter().zip(&b2)) {
            sys.add_term(0, q.clone(), x);
            sys.add_term(2, q.clone(), y);
        }
        let step = decouple_step(&sys, &IntraModalTarget::SmallTransfer, 1, EXACT).unwrap().step;
        let expect = [
            (0, &quads[1], b1[1] / l2),
            (0, &quads[2], b1[2] / (2.0 * l2 - l1)),
            (2, &quads[1], b2[1] / l1),
            (2, &quads[0], b2[0] / (2.0 * l1 - l2)),
        ];
        for (r, m, h) in expect {
            let got = step.coeff(r, m);
            assert!((got - h).norm() <= 1e-12 * h.norm().max(1.0), "{got} vs {h}");
        }
        // intra-modal terms untouched by the small-transfer target
        assert_eq!(step.coeff(0, &quads[0]), Complex64::new(0.0, 0.0));
        assert_eq!(step.coeff(2, &quads[2]), Complex64::new(0.0, 0.0));
    }
}

#[test]
fn already_decoupled_system_needs_no_step() {
    let mut sys = PolyMap::zero(4, 4, 3);
    for (i, l) in [c(-0.1, 2.0), c(-0.1, -2.0), c(-0.2, 3.1), c(-0.2, -3.1)].into_iter().enumerate() {
        sys.linear_mut()[(i, i)] = l;
    }
    sys.add_term(0, mono(&[2, 0, 0, 0]), c(0.3, 0.1));
    sys.add_term(1, mono(&[0, 2, 0, 0]), c(0.3, -0.1));
    sys.add_term(2, mono(&[0, 0, 1, 2]), c(-1.0, 0.5));
    sys.add_term(3, mono(&[0, 0, 2, 1]), c(-1.0, -0.5));
    for p in 1..3 {
        let out = decouple_step(&sys, &IntraModalTarget::SmallTransfer, p, EXACT).unwrap();
        assert_eq!(out.step, PolyMap::identity(4, 3));
        assert_eq!(out.system, sys);
    }
}

#[test]
fn resonant_divisor_aborts() {
    let mut sys = PolyMap::zero(4, 4, 2);
    for (i, l) in [c(0.0, 2.0), c(0.0, -2.0), c(0.0, 4.0), c(0.0, -4.0)].into_iter().enumerate() {
        sys.linear_mut()[(i, i)] = l;
    }
    // z1^2 in the equation of z3 with lambda_3 = 2 lambda_1
    sys.add_term(2, mono(&[2, 0, 0, 0]), c(1.0, 0.0));
    let err = decouple_step(&sys, &IntraModalTarget::SmallTransfer, 1, EXACT).unwrap_err();
    assert!(matches!(err, Error::SmallDivisor { component: 2, .. }), "{err:?}");
    assert!(err.is_resonance());
}

#[test]
fn step_requires_lower_degrees_decoupled() {
    let mut sys = PolyMap::zero(4, 4, 3);
    for i in 0..4 {
        sys.linear_mut()[(i, i)] = c(-0.1, if i % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + i as f64));
    }
    sys.add_term(0, mono(&[1, 0, 1, 0]), c(1.0, 0.0));
    assert!(matches!(decouple_step(&sys, &IntraModalTarget::NormalForm, 2, EXACT), Err(Error::PreconditionNotDecoupled { degree: 2 })));
}

#[test]
fn order_two_inter_modal_steps_agree_across_targets() {
    let (jet, basis) = ninebus_model(3);
    let modal = to_modal(&jet, &basis).unwrap();
    let smib = build_smib_target(&basis, &OPERATING_ANGLES, 3, ModeScaling::Half).unwrap();
    let targets = [IntraModalTarget::SmallTransfer, IntraModalTarget::NormalForm, smib];
    let steps: Vec<_> = targets.iter().map(|t| decouple_step(&modal, t, 1, EXACT).unwrap()).collect();
    for s in &steps {
        assert!(s.cancellation_residual < 1e-10, "{}", s.cancellation_residual);
        let inter = s.system.max_coeff_where(|r, m| m.degree() == 2 && !m.support().all(|v| v / 2 == r / 2));
        assert_eq!(inter, 0.0);
    }
    let inter_terms = |map: &PolyMap| -> Vec<(usize, Monomial, Complex64)> {
        map.nonlinear_terms().filter(|(r, m, _)| !m.support().all(|v| v / 2 == r / 2)).map(|(r, m, c)| (r, m.clone(), *c)).collect()
    };
    let reference = inter_terms(&steps[0].step);
    assert!(!reference.is_empty());
    for s in &steps[1..] {
        let other = inter_terms(&s.step);
        assert_eq!(other.len(), reference.len());
        for (a, b) in reference.iter().zip(&other) {
            assert_eq!((a.0, &a.1), (b.0, &b.1));
            assert!((a.2 - b.2).norm() < 1e-14);
        }
    }
}

fn check_structure(system: &PolyMap) {
    for (r, m, _) in system.nonlinear_terms() {
        assert!(m.support().all(|v| v / 2 == r / 2), "component {r} keeps {:?}", m.exponents());
    }
}

#[test]
fn decoupled_jets_store_no_inter_modal_terms() {
    for seed in 0..6 {
        for n_modes in [2, 3] {
            let (jet, basis) = mechanical(seed, n_modes, 3);
            let smib_angles = vec![0.1; basis.displacement_states.len()];
            let smib = build_smib_target(&basis, &smib_angles, 3, ModeScaling::Half).unwrap();
            for target in [IntraModalTarget::SmallTransfer, IntraModalTarget::NormalForm, smib] {
                let (dec, chain) = run_decoupling(&jet, &basis, &target, 3, EXACT).unwrap();
                assert_eq!(dec.max_inter_modal(), 0.0);
                check_structure(&dec.system);
                assert_eq!(chain.steps.len(), 2);
                assert!(dec.system.conjugate_closure_defect() < 1e-10);
            }
        }
    }
}

#[test]
fn normal_form_is_linear() {
    let (jet, basis) = ninebus_model(3);
    let (dec, _) = run_decoupling(&jet, &basis, &IntraModalTarget::NormalForm, 3, EXACT).unwrap();
    assert!(dec.system.is_linear());
    for (i, l) in basis.eigenvalues.iter().enumerate() {
        assert_eq!(dec.system.linear()[(i, i)], *l);
    }
}

#[test]
fn small_transfer_keeps_the_computed_intra_coefficients() {
    let (jet, basis) = ninebus_model(3);
    let modal = to_modal(&jet, &basis).unwrap();
    let after_two = decouple_step(&modal, &IntraModalTarget::SmallTransfer, 1, EXACT).unwrap().system;
    let (dec, _) = run_decoupling(&jet, &basis, &IntraModalTarget::SmallTransfer, 3, EXACT).unwrap();
    for (r, m, c) in dec.system.nonlinear_terms() {
        let expected = if m.degree() == 2 { modal.coeff(r, m) } else { after_two.coeff(r, m) };
        assert!((c - expected).norm() < 1e-12, "component {r} {:?}", m.exponents());
    }
}

#[test]
fn smib_real_form_matches_the_target() {
    let (jet, basis) = ninebus_model(3);
    for scaling in [ModeScaling::Half, ModeScaling::Unit] {
        let target = build_smib_target(&basis, &OPERATING_ANGLES, 3, scaling).unwrap();
        let (dec, _) = run_decoupling(&jet, &basis, &target, 3, EXACT).unwrap();
        for mode in 0..2 {
            let got = to_real(&dec, mode, scaling).unwrap();
            let want = smib_realize(&target, mode, 3).unwrap();
            let keys: std::collections::BTreeSet<_> = got.velocity.keys().chain(want.velocity.keys()).collect();
            for &(a, b) in keys {
                let (x, y) = (got.velocity_coeff(a, b), want.velocity_coeff(a, b));
                assert!((x - y).abs() < 1e-8 * y.abs().max(1.0), "{scaling:?} mode {mode} ({a},{b}): {x} vs {y}");
            }
            assert!((got.displacement_coeff(1, 0) - 1.0).abs() < 1e-12);
            assert!(got.displacement.iter().all(|(&(a, b), v)| (a, b) == (1, 0) || v.abs() < 1e-8));
        }
    }
}

#[test]
fn smib_parameters_follow_the_eigenvalues() {
    let (_, basis) = ninebus_model(3);
    let IntraModalTarget::Smib(t) = build_smib_target(&basis, &OPERATING_ANGLES, 3, ModeScaling::Half).unwrap() else { unreachable!() };
    for (mode, m) in t.modes.iter().enumerate() {
        let l = basis.eigenvalues[2 * mode];
        assert!((m.alpha + 2.0 * l.re).abs() < 1e-12);
        assert!((m.beta * m.y_s.cos() - l.norm_sqr()).abs() < 1e-9);
        assert!((m.r[0] - l.norm_sqr()).abs() < 1e-9);
        assert!((m.r[2] + m.r[0] / 6.0).abs() < 1e-9);
    }
}

fn conjugacy_slope(jet: &EquilibriumJet, basis: &nmd_core::ModalBasis, k: usize, options: DecoupleOptions, seed: u64) -> f64 {
    let (dec, chain) = run_decoupling(jet, basis, &IntraModalTarget::SmallTransfer, k, options).unwrap();
    let truncated = EquilibriumJet { jet: jet.jet.with_max_degree(k), ..jet.clone() };
    let modal = to_modal(&truncated, basis).unwrap();
    let amps = [1e-3, 1e-2, 1e-1];
    let res: Vec<f64> = amps
        .iter()
        .map(|&a| norm(&conjugacy_residual(&modal, &dec.system, &chain, &paired_point(seed, basis.n_modes(), a)).unwrap()))
        .collect();
    loglog_slope(&amps, &res)
}

#[test]
fn chain_is_semi_conjugate_to_order_k() {
    for seed in 0..5 {
        for (n_modes, k) in [(2, 2), (2, 3), (3, 3)] {
            let (jet, basis) = mechanical(seed, n_modes, k);
            let slope = conjugacy_slope(&jet, &basis, k, EXACT, seed);
            assert!(slope >= k as f64 + 0.5, "seed {seed} N={} k={k}: slope {slope}", 2 * n_modes);
        }
    }
    let (jet, basis) = ninebus_model(3);
    assert!(conjugacy_slope(&jet, &basis, 3, EXACT, 9) >= 3.5);
}

#[test]
fn first_order_update_is_exact_only_through_degree_two() {
    let (jet, basis) = mechanical(1, 2, 3);
    assert!(conjugacy_slope(&jet, &basis, 2, FIRST_ORDER, 1) >= 2.5);
    let slope = conjugacy_slope(&jet, &basis, 3, FIRST_ORDER, 1);
    assert!((slope - 3.0).abs() < 0.3, "{slope}");
}

#[test]
fn round_trip_residual_scales_with_order() {
    let (jet, basis) = ninebus_model(3);
    let (_, chain) = run_decoupling(&jet, &basis, &IntraModalTarget::SmallTransfer, 3, EXACT).unwrap();
    // a state inside the span of the oscillatory modes
    let z = paired_point(3, 2, 1.0);
    let dir = forward_map(&chain, &z).unwrap();
    let unit = real_norm(&dir);
    let amps = [1e-3, 1e-2, 1e-1];
    let errs: Vec<f64> = amps
        .iter()
        .map(|&a| {
            let x: Vec<f64> = dir.iter().map(|v| v * a / unit).collect();
            let back = forward_map(&chain, &inverse_map(&chain, &x).unwrap()).unwrap();
            real_norm(&back.iter().zip(&x).map(|(p, q)| p - q).collect::<Vec<_>>()) / real_norm(&x)
        })
        .collect();
    assert!(errs[0] < 1e-8, "{errs:?}");
    // relative error ~ a^k
    assert!(loglog_slope(&amps, &errs) >= 2.5, "{errs:?}");
}

#[test]
fn equilibrium_maps_to_origin() {
    let (jet, basis) = ninebus_model(3);
    let (_, chain) = run_decoupling(&jet, &basis, &IntraModalTarget::SmallTransfer, 3, EXACT).unwrap();
    assert!(inverse_map(&chain, &[0.0; 6]).unwrap().iter().all(|z| z.norm() == 0.0));
    assert!(forward_map(&chain, &[Complex64::new(0.0, 0.0); 4]).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn linear_chain_is_the_left_eigenvector_projection() {
    let (jet, basis) = mechanical(2, 2, 3);
    let (dec, chain) = run_decoupling(&jet, &basis, &IntraModalTarget::SmallTransfer, 1, EXACT).unwrap();
    assert!(chain.steps.is_empty());
    assert!(dec.system.is_linear());
    let x = [0.1, -0.2, 0.05, 0.3];
    let z = inverse_map(&chain, &x).unwrap();
    for (r, zr) in z.iter().enumerate() {
        let expect: Complex64 = (0..4).map(|col| basis.left[(r, col)] * x[col]).sum();
        assert!((zr - expect).norm() < 1e-15);
    }
    let back = forward_map(&chain, &z).unwrap();
    assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn decoupled_target_kind_is_recorded() {
    let (jet, basis) = mechanical(0, 2, 2);
    let (dec, _) = run_decoupling(&jet, &basis, &IntraModalTarget::NormalForm, 2, EXACT).unwrap();
    assert_eq!(dec.target, TargetKind::NormalForm);
    assert_eq!(TargetKind::Smib.name(), "smib");
}
