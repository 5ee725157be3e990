mod common;

use common::{c, loglog_slope, norm, paired_point};
use nmd_core::poly::{compose_truncated, invert_near_identity, monomial_count, monomials_of_degree, Monomial, PolyMap};
use nmd_core::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identity plus random terms of degrees `2..=k`, each present with
/// probability `density`.
fn near_identity(seed: u64, n: usize, k: usize, scale: f64, density: f64) -> PolyMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = PolyMap::identity(n, k);
    for r in 0..n {
        for d in 2..=k {
            for m in monomials_of_degree(n, d) {
                if rng.gen_bool(density) {
                    map.add_term(r, m, c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale)));
                }
            }
        }
    }
    map
}

/// Like `near_identity` but with conjugate-pair closure.
fn closed_near_identity(seed: u64, n_modes: usize, k: usize, scale: f64) -> PolyMap {
    let n = 2 * n_modes;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = PolyMap::identity(n, k);
    for r in (0..n).step_by(2) {
        for d in 2..=k {
            for m in monomials_of_degree(n, d) {
                if rng.gen_bool(0.5) {
                    let v = c(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
                    map.add_term(r, m.clone(), v);
                    map.add_term(r + 1, m.pair_swapped(), v.conj());
                }
            }
        }
    }
    map
}

fn max_coeff_diff(a: &PolyMap, b: &PolyMap) -> f64 {
    let diff = a.sub(b).unwrap();
    let lin = diff.linear().iter().map(|v| v.norm()).fold(0.0, f64::max);
    diff.nonlinear_terms().map(|(_, _, v)| v.norm()).fold(lin, f64::max)
}

fn round_trip_error(map: &PolyMap, inverse: &PolyMap, z: &[Complex64]) -> f64 {
    let there = map.eval(z).unwrap();
    let back = inverse.eval(&there).unwrap();
    norm(&back.iter().zip(z).map(|(a, b)| a - b).collect::<Vec<_>>())
}

#[test]
fn monomial_counts_match_enumeration() {
    for n in 1..=6 {
        for d in 0..=4 {
            assert_eq!(monomials_of_degree(n, d).len(), monomial_count(n, d), "n={n} d={d}");
        }
    }
    assert_eq!(monomial_count(18, 3), 1140);
}

#[test]
fn composition_with_identity_is_neutral() {
    let f = near_identity(3, 4, 3, 1.0, 0.5);
    let id = PolyMap::identity(4, 3);
    assert!(max_coeff_diff(&compose_truncated(&f, &id, 3).unwrap(), &f) < 1e-14);
    assert!(max_coeff_diff(&compose_truncated(&id, &f, 3).unwrap(), &f) < 1e-14);
}

#[test]
fn square_of_a_variable() {
    // outer(y) = y0^2, inner(z) = z0 + z1  =>  z0^2 + 2 z0 z1 + z1^2
    let mut outer = PolyMap::zero(1, 1, 2);
    outer.add_term(0, Monomial::new(vec![2]), c(1.0, 0.0));
    let mut inner = PolyMap::zero(1, 2, 2);
    inner.linear_mut()[(0, 0)] = c(1.0, 0.0);
    inner.linear_mut()[(0, 1)] = c(1.0, 0.0);
    let out = compose_truncated(&outer, &inner, 2).unwrap();
    assert_eq!(out.coeff(0, &Monomial::new(vec![2, 0])), c(1.0, 0.0));
    assert_eq!(out.coeff(0, &Monomial::new(vec![1, 1])), c(2.0, 0.0));
    assert_eq!(out.coeff(0, &Monomial::new(vec![0, 2])), c(1.0, 0.0));
}

#[test]
fn truncation_drops_high_degrees() {
    let f = near_identity(5, 3, 3, 1.0, 1.0);
    let sq = compose_truncated(&f, &f, 3).unwrap();
    assert!(sq.nonlinear_terms().all(|(_, m, _)| m.degree() <= 3));
}

#[test]
fn inverse_of_linear_map_rejected() {
    let mut f = PolyMap::identity(2, 3);
    f.linear_mut()[(0, 1)] = c(0.5, 0.0);
    assert!(invert_near_identity(&f, 3).is_err());
}

#[test]
fn inverse_of_quadratic_in_one_variable() {
    // H(u) = u + a u^2  =>  S(x) = x - a x^2 + 2 a^2 x^3 + ...
    let a = c(0.3, -0.2);
    let mut h = PolyMap::identity(1, 3);
    h.add_term(0, Monomial::new(vec![2]), a);
    let s = invert_near_identity(&h, 3).unwrap();
    assert!((s.coeff(0, &Monomial::new(vec![2])) + a).norm() < 1e-15);
    assert!((s.coeff(0, &Monomial::new(vec![3])) - a * a * 2.0).norm() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn composition_is_associative(seed in any::<u64>(), n in 2usize..=4, k in 2usize..=4) {
        let f = near_identity(seed, n, k, 1.0, 0.4);
        let g = near_identity(seed.wrapping_add(1), n, k, 1.0, 0.4);
        let h = near_identity(seed.wrapping_add(2), n, k, 1.0, 0.4);
        let left = compose_truncated(&compose_truncated(&f, &g, k).unwrap(), &h, k).unwrap();
        let right = compose_truncated(&f, &compose_truncated(&g, &h, k).unwrap(), k).unwrap();
        prop_assert!(max_coeff_diff(&left, &right) < 1e-10);
    }

    #[test]
    fn inverse_cancels_through_degree_k(seed in any::<u64>(), n in 2usize..=4, k in 2usize..=4) {
        let h = near_identity(seed, n, k, 1.0, 0.5);
        let s = invert_near_identity(&h, k).unwrap();
        let both = compose_truncated(&s, &h, k).unwrap();
        prop_assert!(max_coeff_diff(&both, &PolyMap::identity(n, k)) < 1e-10);
    }

    #[test]
    fn inversion_residual_scales_with_order(seed in any::<u64>(), k in 2usize..=3) {
        let n = 4;
        let h = near_identity(seed, n, k, 0.5, 0.5);
        let s = invert_near_identity(&h, k).unwrap();
        let radii = [1e-3, 1e-2, 1e-1];
        let errors: Vec<f64> = radii.iter().map(|&r| round_trip_error(&h, &s, &paired_point(seed, 2, r))).collect();
        let slope = loglog_slope(&radii, &errors);
        prop_assert!(slope >= k as f64 + 0.5, "slope {slope} errors {errors:?}");
    }

    #[test]
    fn small_round_trip_error(seed in any::<u64>()) {
        let h = near_identity(seed, 4, 3, 0.2, 0.5);
        let s = invert_near_identity(&h, 3).unwrap();
        let z = paired_point(seed, 2, 1e-2);
        prop_assert!(round_trip_error(&h, &s, &z) <= 1e-6 * norm(&z));
    }

    #[test]
    fn conjugate_closure_survives_algebra(seed in any::<u64>(), n_modes in 1usize..=3) {
        let f = closed_near_identity(seed, n_modes, 3, 1.0);
        let g = closed_near_identity(seed ^ 0x5555, n_modes, 3, 1.0);
        prop_assert!(f.conjugate_closure_defect() < 1e-15);
        let fg = compose_truncated(&f, &g, 3).unwrap();
        prop_assert!(fg.conjugate_closure_defect() < 1e-12);
        let inv = invert_near_identity(&fg, 3).unwrap();
        prop_assert!(inv.conjugate_closure_defect() < 1e-12);
        let z = paired_point(seed, n_modes, 0.3);
        let image = fg.eval(&z).unwrap();
        for pair in image.chunks(2) {
            prop_assert!((pair[1] - pair[0].conj()).norm() < 1e-12);
        }
    }
}
