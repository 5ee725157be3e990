#![allow(dead_code)]

use nmd_core::modal::{eigendecompose, normalize_basis, ModalBasis};
use nmd_core::ninebus;
use nmd_core::power::{make_jet, EquilibriumJet};
use nmd_core::synth::{random_mechanical, MechanicalSpec};
use nmd_core::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Balanced 9-bus jet and its normalized basis.
pub fn ninebus_model(k: usize) -> (EquilibriumJet, ModalBasis) {
    let jet = make_jet(&ninebus::balanced(), &ninebus::X_SEP, k).unwrap();
    let basis = normalize_basis(&eigendecompose(&jet).unwrap()).unwrap();
    (jet, basis)
}

pub fn mechanical(seed: u64, n_modes: usize, k: usize) -> (EquilibriumJet, ModalBasis) {
    let spec = MechanicalSpec { n_modes, k, ..MechanicalSpec::default() };
    let (jet, _) = random_mechanical(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
    let basis = normalize_basis(&eigendecompose(&jet).unwrap()).unwrap();
    (jet, basis)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let den: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    num / den
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn real_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Point with conjugate pairs `(z, conj z)` of the given norm.
pub fn paired_point(seed: u64, n_modes: usize, amplitude: f64) -> Vec<Complex64> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Vec::with_capacity(2 * n_modes);
    for _ in 0..n_modes {
        let v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        z.push(v);
        z.push(v.conj());
    }
    let s = amplitude / norm(&z);
    z.iter().map(|v| v * s).collect()
}
