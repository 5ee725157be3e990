//! Random test systems: polynomial mechanical oscillators and small
//! classical-model power systems.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use rand::Rng;

use crate::poly::{monomials_of_degree, Monomial, PolyMap};
use crate::power::{EquilibriumJet, MachineParams, NetworkParams, PowerSystem};

/// Smallest decoupling divisor `|sum m_j l_j - l_s|` over all orders
/// `2..=k`, relative to the spectral radius.
pub fn min_relative_divisor(eigs: &[Complex64], k: usize) -> f64 {
    let scale = eigs.iter().map(|l| l.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut best = f64::INFINITY;
    for order in 2..=k {
        for m in monomials_of_degree(eigs.len(), order) {
            let combo: Complex64 = m.exponents().iter().zip(eigs).map(|(&e, l)| l * e as f64).sum();
            for l in eigs {
                best = best.min((combo - l).norm());
            }
        }
    }
    best / scale
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MechanicalSpec {
    pub n_modes: usize,
    pub k: usize,
    /// Frequency range (rad/s).
    pub omega: (f64, f64),
    /// Damping-ratio range.
    pub zeta: (f64, f64),
    /// Bound on nonlinear coefficient magnitudes.
    pub coupling: f64,
    /// Minimum relative divisor accepted.
    pub min_divisor: f64,
}

impl Default for MechanicalSpec {
    fn default() -> Self {
        MechanicalSpec { n_modes: 2, k: 3, omega: (1.0, 4.0), zeta: (0.05, 0.15), coupling: 1.0, min_divisor: 0.02 }
    }
}

fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    a.qr().q()
}

/// `q'' = -K q - C q' + N(q, q')` with modal damping, state order
/// `(q_1, q_1', q_2, q_2', ...)`, equilibrium at the origin, all
/// eigenvalues in the open left half-plane.
///
/// Returns the jet and its eigenvalues. Draws are repeated until the
/// decoupling divisors clear `spec.min_divisor`.
pub fn random_mechanical<R: Rng>(spec: &MechanicalSpec, rng: &mut R) -> (EquilibriumJet, Vec<Complex64>) {
    let m = spec.n_modes;
    let n = 2 * m;
    loop {
        let omegas: Vec<f64> = (0..m).map(|_| rng.gen_range(spec.omega.0..spec.omega.1)).collect();
        let zetas: Vec<f64> = (0..m).map(|_| rng.gen_range(spec.zeta.0..spec.zeta.1)).collect();
        let eigs: Vec<Complex64> = omegas
            .iter()
            .zip(&zetas)
            .flat_map(|(&w, &z)| {
                let l = Complex64::new(-z * w, w * (1.0 - z * z).sqrt());
                [l, l.conj()]
            })
            .collect();
        if min_relative_divisor(&eigs, spec.k) < spec.min_divisor {
            continue;
        }
        let q = random_orthogonal(m, rng);
        let stiff = &q * DMatrix::from_diagonal(&omegas.iter().map(|w| w * w).collect::<Vec<_>>().into()) * q.transpose();
        let damp = &q * DMatrix::from_diagonal(&omegas.iter().zip(&zetas).map(|(w, z)| 2.0 * z * w).collect::<Vec<_>>().into()) * q.transpose();

        let mut jet = PolyMap::zero(n, n, spec.k);
        for i in 0..m {
            jet.linear_mut()[(2 * i, 2 * i + 1)] = Complex64::new(1.0, 0.0);
            for j in 0..m {
                jet.linear_mut()[(2 * i + 1, 2 * j)] = Complex64::new(-stiff[(i, j)], 0.0);
                jet.linear_mut()[(2 * i + 1, 2 * j + 1)] = Complex64::new(-damp[(i, j)], 0.0);
            }
            for d in 2..=spec.k {
                for mono in monomials_of_degree(m, d) {
                    let mut e = vec![0u8; n];
                    for (v, &x) in mono.exponents().iter().enumerate() {
                        e[2 * v] = x;
                    }
                    let c = rng.gen_range(-spec.coupling..spec.coupling);
                    jet.add_term(2 * i + 1, Monomial::new(e), Complex64::new(c, 0.0));
                }
            }
        }
        let displacement = (0..m).map(|i| 2 * i).collect();
        return (EquilibriumJet::from_poly(jet, displacement), eigs);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerSpec {
    pub machines: usize,
    /// Inertia range (s).
    pub inertia: (f64, f64),
    /// Uniform damping ratio `D / 2H`.
    pub damping: f64,
    /// Transfer susceptance range.
    pub coupling: (f64, f64),
    /// Spread of operating angles (rad).
    pub angle_spread: f64,
    pub omega_s: f64,
}

impl Default for PowerSpec {
    fn default() -> Self {
        PowerSpec {
            machines: 3,
            inertia: (3.0, 12.0),
            damping: 0.25,
            coupling: (0.5, 2.0),
            angle_spread: 0.3,
            omega_s: 2.0 * core::f64::consts::PI * 60.0,
        }
    }
}

/// A random connected power system together with its operating angles.
/// Mechanical powers are set so that the operating point is an equilibrium.
pub fn random_power_system<R: Rng>(spec: &PowerSpec, rng: &mut R) -> (PowerSystem, Vec<f64>) {
    let m = spec.machines;
    let mut c = DMatrix::zeros(m, m);
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let cij = rng.gen_range(spec.coupling.0..spec.coupling.1);
            let dij = rng.gen_range(0.0..0.1 * spec.coupling.1);
            c[(i, j)] = cij;
            c[(j, i)] = cij;
            d[(i, j)] = dij;
            d[(j, i)] = dij;
        }
    }
    let g: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..0.5)).collect();
    let angles: Vec<f64> = (0..m).map(|_| rng.gen_range(-spec.angle_spread..spec.angle_spread)).collect();
    let machines = (0..m)
        .map(|i| {
            let h = rng.gen_range(spec.inertia.0..spec.inertia.1);
            let e = rng.gen_range(0.95..1.1);
            let pe = e * e * g[i]
                + (0..m)
                    .filter(|&j| j != i)
                    .map(|j| c[(i, j)] * (angles[i] - angles[j]).sin() + d[(i, j)] * (angles[i] - angles[j]).cos())
                    .sum::<f64>();
            MachineParams { h, d: 2.0 * h * spec.damping, pm: pe, e }
        })
        .collect();
    (PowerSystem { machines, network: NetworkParams { g, c, d }, omega_s: spec.omega_s }, angles)
}
