//! Vector fields built from affine terms plus sines and cosines of affine
//! combinations of the state, and their Taylor jets.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::poly::{Poly, PolyMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Wave {
    Sin,
    Cos,
}

/// `amplitude * wave(direction . x + phase)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub wave: Wave,
    /// Sparse direction vector as `(state index, weight)`.
    pub direction: Vec<(usize, f64)>,
    pub phase: f64,
}

impl TrigTerm {
    fn argument(&self, x: &[f64]) -> f64 {
        self.direction.iter().map(|&(j, w)| w * x[j]).sum::<f64>() + self.phase
    }

    /// n-th derivative of the wave with respect to its argument at `theta`.
    fn derivative(&self, theta: f64, n: usize) -> f64 {
        let shifted = theta + n as f64 * FRAC_PI_2;
        match self.wave {
            Wave::Sin => self.amplitude * shifted.sin(),
            Wave::Cos => self.amplitude * shifted.cos(),
        }
    }
}

/// One component: `constant + linear . x + sum of trig terms`.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrigComponent {
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    pub terms: Vec<TrigTerm>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigField {
    pub components: Vec<TrigComponent>,
    /// Indices of angle-like states. A uniform shift of all of them leaves
    /// the field unchanged, so equilibria are only defined up to drift.
    pub angle_states: Vec<usize>,
}

/// Taylor expansion around a point: `constant + map(y)` with `y = x - x0`.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorExpansion {
    pub constant: Vec<f64>,
    pub map: PolyMap,
}

impl TrigField {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a buffer.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, comp) in out.iter_mut().zip(&self.components) {
            let mut acc = comp.constant;
            for &(j, a) in &comp.linear {
                acc += a * x[j];
            }
            for t in &comp.terms {
                acc += t.derivative(t.argument(x), 0);
            }
            *o = acc;
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let n = self.dim();
        let mut jac = DMatrix::zeros(n, n);
        for (i, comp) in self.components.iter().enumerate() {
            for &(j, a) in &comp.linear {
                jac[(i, j)] += a;
            }
            for t in &comp.terms {
                let d = t.derivative(t.argument(x), 1);
                for &(j, w) in &t.direction {
                    jac[(i, j)] += d * w;
                }
            }
        }
        Ok(jac)
    }
}

/// Expand `field` around `x0` up to total degree `k`.
pub fn taylor_trig(field: &TrigField, x0: &[f64], k: usize) -> Result<TaylorExpansion> {
    field.check_dim(x0)?;
    if k == 0 {
        return Err(Error::InvalidArgument("Taylor degree must be at least 1".into()));
    }
    let n = field.dim();
    let constant = field.eval(x0)?;
    let mut polys = Vec::with_capacity(n);
    for comp in &field.components {
        let mut p = Poly::zero(n);
        for &(j, a) in &comp.linear {
            p.add_term(crate::poly::Monomial::var(n, j), Complex64::new(a, 0.0));
        }
        for t in &comp.terms {
            let theta = t.argument(x0);
            let mut dir = vec![Complex64::new(0.0, 0.0); n];
            for &(j, w) in &t.direction {
                dir[j] += w;
            }
            let s = Poly::linear(&dir);
            let mut s_pow = s.clone();
            let mut factorial = 1.0;
            for d in 1..=k {
                factorial *= d as f64;
                let coeff = t.derivative(theta, d) / factorial;
                p.add_scaled(&s_pow, Complex64::new(coeff, 0.0));
                if d < k {
                    s_pow = s_pow.mul_truncated(&s, k);
                }
            }
        }
        p.prune();
        polys.push(p);
    }
    Ok(TaylorExpansion { constant, map: PolyMap::from_polys(&polys, n, k)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    fn scalar(wave: Wave) -> TrigField {
        TrigField {
            components: vec![TrigComponent {
                constant: 0.0,
                linear: vec![],
                terms: vec![TrigTerm { amplitude: 1.0, wave, direction: vec![(0, 1.0)], phase: 0.0 }],
            }],
            angle_states: vec![],
        }
    }

    #[test]
    fn sine_series() {
        let t = taylor_trig(&scalar(Wave::Sin), &[0.0], 3).unwrap();
        assert_eq!(t.constant, vec![0.0]);
        assert!((t.map.linear()[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(t.map.coeff(0, &Monomial::new(vec![2])).norm() < 1e-15);
        assert!((t.map.coeff(0, &Monomial::new(vec![3])).re + 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_series() {
        let t = taylor_trig(&scalar(Wave::Cos), &[0.0], 3).unwrap();
        assert!((t.constant[0] - 1.0).abs() < 1e-15);
        assert!(t.map.linear()[(0, 0)].norm() < 1e-15);
        assert!((t.map.coeff(0, &Monomial::new(vec![2])).re + 0.5).abs() < 1e-15);
        assert!(t.map.coeff(0, &Monomial::new(vec![3])).norm() < 1e-15);
    }
}
