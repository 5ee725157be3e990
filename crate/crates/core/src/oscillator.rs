//! Real second-order oscillators from decoupled complex mode pairs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::decouple::{DecoupledJet, IntraModalTarget, TargetKind};
use crate::error::{Error, Result};
use crate::poly::{compose_truncated, Monomial, PolyMap};

const IMAG_TOL: f64 = 1e-8;

/// Scale of the real mode coordinates.
///
/// With `Half`, `w_d = (z1 + z2) / 2` and `w_v = (l1 z1 + l2 z2) / 2`;
/// with `Unit` the factor 1/2 is absent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ModeScaling {
    Unit,
    #[default]
    Half,
}

impl ModeScaling {
    pub fn factor(self) -> f64 {
        match self {
            ModeScaling::Unit => 1.0,
            ModeScaling::Half => 0.5,
        }
    }

    /// `(w_v, w_d)` of a mode pair.
    pub fn to_real(self, lambda: (Complex64, Complex64), z: (Complex64, Complex64)) -> (f64, f64) {
        let s = self.factor();
        ((lambda.0 * z.0 + lambda.1 * z.1).re * s, (z.0 + z.1).re * s)
    }

    /// `(z1, z2)` from `(w_v, w_d)`.
    pub fn to_complex(self, lambda: (Complex64, Complex64), w: (f64, f64)) -> (Complex64, Complex64) {
        let k = Complex64::new(1.0, 0.0) / ((lambda.0 - lambda.1) * self.factor());
        ((-lambda.1 * w.1 + w.0) * k, (lambda.0 * w.1 - w.0) * k)
    }
}

/// Real bivariate polynomial keyed by `(exponent of w_v, exponent of w_d)`.
pub type RealPoly2 = BTreeMap<(u8, u8), f64>;

fn eval2(p: &RealPoly2, wv: f64, wd: f64) -> f64 {
    p.iter().map(|(&(a, b), &c)| c * wv.powi(a as i32) * wd.powi(b as i32)).sum()
}

/// One mode as `w_v' = velocity(w_v, w_d)`, `w_d' = displacement(w_v, w_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoupledOscillator {
    pub mode: usize,
    pub lambda: (Complex64, Complex64),
    pub velocity: RealPoly2,
    pub displacement: RealPoly2,
    pub target: TargetKind,
    pub scaling: ModeScaling,
    /// Force coefficients `v_1..v_k` once reduced to `w_v' = sum v_j w_d^j`.
    pub simplified: Option<Vec<f64>>,
}

impl DecoupledOscillator {
    pub fn eval(&self, w: (f64, f64)) -> (f64, f64) {
        (eval2(&self.velocity, w.0, w.1), eval2(&self.displacement, w.0, w.1))
    }

    pub fn velocity_coeff(&self, a: u8, b: u8) -> f64 {
        self.velocity.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn displacement_coeff(&self, a: u8, b: u8) -> f64 {
        self.displacement.get(&(a, b)).copied().unwrap_or(0.0)
    }

    /// Jacobian at the origin, rows `(w_v', w_d')`.
    pub fn linearization(&self) -> [[f64; 2]; 2] {
        [
            [self.velocity_coeff(1, 0), self.velocity_coeff(0, 1)],
            [self.displacement_coeff(1, 0), self.displacement_coeff(0, 1)],
        ]
    }

    pub fn max_degree(&self) -> usize {
        self.velocity.keys().chain(self.displacement.keys()).map(|&(a, b)| (a + b) as usize).max().unwrap_or(1)
    }

    /// The oscillator as a polynomial field on `(w_v, w_d)`, for integration.
    pub fn as_field(&self) -> PolyMap {
        let mut map = PolyMap::zero(2, 2, self.max_degree());
        for (row, poly) in [&self.velocity, &self.displacement].into_iter().enumerate() {
            for (&(a, b), &c) in poly {
                let c = Complex64::new(c, 0.0);
                match (a, b) {
                    (0, 0) => {}
                    (1, 0) => map.linear_mut()[(row, 0)] = c,
                    (0, 1) => map.linear_mut()[(row, 1)] = c,
                    _ => map.add_term(row, Monomial::new(vec![a, b]), c),
                }
            }
        }
        map
    }
}

fn mode_poly(system: &PolyMap, r: usize, base: usize) -> PolyMap {
    let mut out = PolyMap::zero(1, 2, system.max_degree());
    out.linear_mut()[(0, 0)] = system.linear()[(r, base)];
    out.linear_mut()[(0, 1)] = system.linear()[(r, base + 1)];
    for (m, &c) in system.nonlinear(r) {
        let e = m.exponents();
        out.add_term(0, Monomial::new(vec![e[base], e[base + 1]]), c);
    }
    out
}

fn realify(map: &PolyMap, row: usize) -> Result<RealPoly2> {
    let mut out = RealPoly2::new();
    let mut worst: f64 = 0.0;
    let mut size: f64 = 1.0;
    let mut push = |a: u8, b: u8, c: Complex64| {
        worst = worst.max(c.im.abs());
        size = size.max(c.re.abs());
        if c.re.abs() >= crate::poly::DROP_TOL {
            out.insert((a, b), c.re);
        }
    };
    push(1, 0, map.linear()[(row, 0)]);
    push(0, 1, map.linear()[(row, 1)]);
    for (m, &c) in map.nonlinear(row) {
        let e = m.exponents();
        push(e[0], e[1], c);
    }
    if worst > IMAG_TOL * size {
        return Err(Error::ImaginaryResidue { residue: worst });
    }
    Ok(out)
}

/// Real form of one decoupled mode.
pub fn to_real(jet: &DecoupledJet, mode: usize, scaling: ModeScaling) -> Result<DecoupledOscillator> {
    if mode >= jet.n_modes() {
        return Err(Error::InvalidArgument("mode index out of range".into()));
    }
    let base = 2 * mode;
    let l1 = jet.system.linear()[(base, base)];
    let l2 = jet.system.linear()[(base + 1, base + 1)];
    let s = scaling.factor();
    let k = jet.system.max_degree();

    let p1 = mode_poly(&jet.system, base, base);
    let p2 = mode_poly(&jet.system, base + 1, base);
    // rows: w_v' = s (l1 z1' + l2 z2'), w_d' = s (z1' + z2')
    let mix = DMatrix::from_row_slice(2, 2, &[l1 * s, l2 * s, Complex64::new(s, 0.0), Complex64::new(s, 0.0)]);
    let mut stacked = PolyMap::zero(2, 2, k);
    stacked.linear_mut().row_mut(0).copy_from(&p1.linear().row(0));
    stacked.linear_mut().row_mut(1).copy_from(&p2.linear().row(0));
    for (m, &c) in p1.nonlinear(0) {
        stacked.add_term(0, m.clone(), c);
    }
    for (m, &c) in p2.nonlinear(0) {
        stacked.add_term(1, m.clone(), c);
    }
    let outer = stacked.left_mul(&mix)?;

    // z in terms of w = (w_v, w_d)
    let inv = Complex64::new(1.0, 0.0) / ((l1 - l2) * s);
    let inner = PolyMap::from_linear(DMatrix::from_row_slice(2, 2, &[inv, -l2 * inv, -inv, l1 * inv]), k);
    let real = compose_truncated(&outer, &inner, k)?;
    Ok(DecoupledOscillator {
        mode,
        lambda: (l1, l2),
        velocity: realify(&real, 0)?,
        displacement: realify(&real, 1)?,
        target: jet.target,
        scaling,
        simplified: None,
    })
}

/// Keep only the pure-displacement force in the velocity equation and set
/// `w_d' = w_v`. Damping and mixed terms are dropped.
pub fn simplify_undamped(osc: &DecoupledOscillator) -> DecoupledOscillator {
    let k = osc.max_degree();
    let force: Vec<f64> = match &osc.simplified {
        Some(v) => v.clone(),
        None => (1..=k).map(|j| osc.velocity_coeff(0, j as u8)).collect(),
    };
    let velocity = force.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| ((0u8, (j + 1) as u8), v)).collect();
    let mut displacement = RealPoly2::new();
    displacement.insert((1, 0), 1.0);
    DecoupledOscillator { velocity, displacement, simplified: Some(force), ..osc.clone() }
}

/// The SMIB real form `y'' = -alpha y' - sum r_n y^n` of one mode.
pub fn smib_realize(target: &IntraModalTarget, mode: usize, k: usize) -> Result<DecoupledOscillator> {
    let IntraModalTarget::Smib(t) = target else { return Err(Error::VariantMismatch) };
    let m = t.modes.get(mode).ok_or_else(|| Error::InvalidArgument("mode index out of range".into()))?;
    let mut velocity = RealPoly2::new();
    velocity.insert((1, 0), -m.alpha);
    for n in 1..=k.min(m.r.len()) {
        let r = m.r[n - 1];
        if r != 0.0 {
            velocity.insert((0, n as u8), -r);
        }
    }
    let mut displacement = RealPoly2::new();
    displacement.insert((1, 0), 1.0);
    // roots of s^2 + alpha s + r_1
    let disc = Complex64::new(m.alpha * m.alpha - 4.0 * m.r[0], 0.0).sqrt();
    let l1 = (Complex64::new(-m.alpha, 0.0) + disc) * 0.5;
    let l2 = (Complex64::new(-m.alpha, 0.0) - disc) * 0.5;
    let (l1, l2) = if l1.im >= l2.im { (l1, l2) } else { (l2, l1) };
    Ok(DecoupledOscillator {
        mode,
        lambda: (l1, l2),
        velocity,
        displacement,
        target: TargetKind::Smib,
        scaling: t.scaling,
        simplified: None,
    })
}

/// Eigenvalues of a real 2x2 matrix.
pub fn eigenvalues_2x2(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
    let a = (Complex64::new(tr, 0.0) + disc) * 0.5;
    let b = (Complex64::new(tr, 0.0) - disc) * 0.5;
    if a.im >= b.im {
        (a, b)
    } else {
        (b, a)
    }
}
