//! Fixed-step RK4 integration, reconstruction through the transform chain
//! and trajectory error metrics.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Sub};

use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use num_traits::Zero;

use crate::decouple::{forward_map, inverse_map, run_decoupling, DecoupleOptions, IntraModalTarget, TargetKind, TransformChain};
use crate::error::{Error, Result};
use crate::modal::ModalBasis;
use crate::poly::PolyMap;
use crate::power::EquilibriumJet;
use crate::trig::TrigField;

/// States larger than this count as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 10.0;

pub trait OdeScalar: Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn magnitude(self) -> f64;
    fn from_coeff(c: Complex64) -> Self;
}

impl OdeScalar for f64 {
    fn magnitude(self) -> f64 {
        self.abs()
    }
    fn from_coeff(c: Complex64) -> Self {
        c.re
    }
}

impl OdeScalar for Complex64 {
    fn magnitude(self) -> f64 {
        self.norm()
    }
    fn from_coeff(c: Complex64) -> Self {
        c
    }
}

/// Right-hand side of an autonomous ODE.
pub trait VectorField<T> {
    fn dim(&self) -> usize;
    fn eval_into(&self, x: &[T], out: &mut [T]);
}

impl VectorField<f64> for TrigField {
    fn dim(&self) -> usize {
        TrigField::dim(self)
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        TrigField::eval_into(self, x, out)
    }
}

/// A `PolyMap` flattened for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly<T> {
    n: usize,
    max_exp: usize,
    linear: Vec<(usize, usize, T)>,
    terms: Vec<(usize, T, Vec<(usize, usize)>)>,
}

impl<T: OdeScalar + Mul<Output = T>> CompiledPoly<T> {
    fn build(map: &PolyMap) -> Self {
        let mut linear = Vec::new();
        for i in 0..map.n_out() {
            for j in 0..map.n_vars() {
                let c = map.linear()[(i, j)];
                if c.norm() != 0.0 {
                    linear.push((i, j, T::from_coeff(c)));
                }
            }
        }
        let mut max_exp = 1;
        let terms = map
            .nonlinear_terms()
            .map(|(i, m, &c)| {
                let factors: Vec<(usize, usize)> = m.support().map(|j| (j, m.exponents()[j] as usize)).collect();
                max_exp = factors.iter().fold(max_exp, |a, &(_, e)| a.max(e));
                (i, T::from_coeff(c), factors)
            })
            .collect();
        CompiledPoly { n: map.n_out(), max_exp, linear, terms }
    }
}

impl CompiledPoly<Complex64> {
    pub fn new(map: &PolyMap) -> Self {
        Self::build(map)
    }
}

impl CompiledPoly<f64> {
    /// Real evaluation of a map whose coefficients are real.
    pub fn real(map: &PolyMap) -> Result<Self> {
        let worst = map
            .linear()
            .iter()
            .map(|c| c.im.abs())
            .chain(map.nonlinear_terms().map(|(_, _, c)| c.im.abs()))
            .fold(0.0, f64::max);
        if worst > 1e-10 {
            return Err(Error::ImaginaryResidue { residue: worst });
        }
        Ok(Self::build(map))
    }
}

impl<T: OdeScalar + Mul<Output = T>> VectorField<T> for CompiledPoly<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval_into(&self, x: &[T], out: &mut [T]) {
        for o in out.iter_mut() {
            *o = T::zero();
        }
        for &(i, j, c) in &self.linear {
            out[i] = out[i] + x[j] * c;
        }
        // powers[j * (max_exp + 1) + e] = x_j^e
        let stride = self.max_exp + 1;
        let mut powers = vec![T::zero(); x.len() * stride];
        for (j, &xj) in x.iter().enumerate() {
            let mut p = T::from_coeff(Complex64::new(1.0, 0.0));
            for e in 0..stride {
                powers[j * stride + e] = p;
                p = p * xj;
            }
        }
        for (i, c, factors) in &self.terms {
            let mut v = *c;
            for &(j, e) in factors {
                v = v * powers[j * stride + e];
            }
            out[*i] = out[*i] + v;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    Original,
    Modal,
    Decoupled(usize),
    RealMode,
}

/// States on a uniform time grid `t0 + i dt`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub t0: f64,
    pub dt: f64,
    pub states: Vec<Vec<T>>,
    pub space: Space,
}

impl<T> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn last(&self) -> &[T] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

struct Rk4<T> {
    k1: Vec<T>,
    k2: Vec<T>,
    k3: Vec<T>,
    k4: Vec<T>,
    tmp: Vec<T>,
}

impl<T: OdeScalar> Rk4<T> {
    fn new(n: usize) -> Self {
        Rk4 { k1: vec![T::zero(); n], k2: vec![T::zero(); n], k3: vec![T::zero(); n], k4: vec![T::zero(); n], tmp: vec![T::zero(); n] }
    }

    fn step<F: VectorField<T> + ?Sized>(&mut self, f: &F, x: &mut [T], dt: f64) {
        f.eval_into(x, &mut self.k1);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + self.k1[i] * (0.5 * dt);
        }
        f.eval_into(&self.tmp, &mut self.k2);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + self.k2[i] * (0.5 * dt);
        }
        f.eval_into(&self.tmp, &mut self.k3);
        for i in 0..x.len() {
            self.tmp[i] = x[i] + self.k3[i] * dt;
        }
        f.eval_into(&self.tmp, &mut self.k4);
        for i in 0..x.len() {
            let incr = (self.k1[i] + self.k2[i] * 2.0 + self.k3[i] * 2.0 + self.k4[i]) * (dt / 6.0);
            x[i] = x[i] + incr;
        }
    }
}

fn check_args(n: usize, x0_len: usize, dt: f64, horizon: f64) -> Result<usize> {
    if x0_len != n {
        return Err(Error::DimensionMismatch { expected: n, found: x0_len });
    }
    if !(dt > 0.0) || !(horizon >= dt) {
        return Err(Error::InvalidArgument("need dt > 0 and horizon >= dt".into()));
    }
    Ok((horizon / dt).round() as usize)
}

fn diverged<T: OdeScalar>(x: &[T]) -> bool {
    x.iter().any(|v| {
        let m = v.magnitude();
        !m.is_finite() || m > DIVERGENCE_LIMIT
    })
}

/// Classical fourth-order Runge-Kutta with a fixed step.
pub fn integrate<T: OdeScalar, F: VectorField<T> + ?Sized>(field: &F, x0: &[T], dt: f64, horizon: f64, space: Space) -> Result<Trajectory<T>> {
    let steps = check_args(field.dim(), x0.len(), dt, horizon)?;
    let mut rk = Rk4::new(x0.len());
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x.clone());
    for s in 1..=steps {
        rk.step(field, &mut x, dt);
        if diverged(&x) {
            return Err(Error::NonFinite { time: s as f64 * dt });
        }
        states.push(x.clone());
    }
    Ok(Trajectory { t0: 0.0, dt, states, space })
}

/// Final state after exactly `duration`, with the step shrunk so that an
/// integer number of steps lands on it.
pub fn integrate_final<T: OdeScalar, F: VectorField<T> + ?Sized>(field: &F, x0: &[T], max_dt: f64, duration: f64) -> Result<Vec<T>> {
    if x0.len() != field.dim() {
        return Err(Error::DimensionMismatch { expected: field.dim(), found: x0.len() });
    }
    if !(max_dt > 0.0) || !(duration >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and duration >= 0".into()));
    }
    let mut x = x0.to_vec();
    if duration == 0.0 {
        return Ok(x);
    }
    let steps = (duration / max_dt - 1e-9).ceil().max(1.0) as usize;
    let dt = duration / steps as f64;
    let mut rk = Rk4::new(x.len());
    for s in 1..=steps {
        rk.step(field, &mut x, dt);
        if diverged(&x) {
            return Err(Error::NonFinite { time: s as f64 * dt });
        }
    }
    Ok(x)
}

/// Map a decoupled-coordinate trajectory to the original state space.
pub fn reconstruct(chain: &TransformChain, ztraj: &Trajectory<Complex64>) -> Result<Trajectory<f64>> {
    let states = ztraj.states.iter().map(|z| forward_map(chain, z)).collect::<Result<Vec<_>>>()?;
    Ok(Trajectory { t0: ztraj.t0, dt: ztraj.dt, states, space: Space::Original })
}

/// Which components enter the error norm.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleMetric {
    pub indices: Vec<usize>,
    /// Subtract the mean over `indices` before differencing, so that a common
    /// angle shift does not count as error.
    pub centered: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// Mean of e(t), degrees.
    pub mean: f64,
    /// Population standard deviation of e(t), degrees.
    pub std: f64,
    pub series: Vec<f64>,
}

pub fn error_report(reference: &Trajectory<f64>, test: &Trajectory<f64>, metric: &AngleMetric) -> Result<ErrorReport> {
    if reference.len() != test.len() || (reference.dt - test.dt).abs() > 1e-15 || (reference.t0 - test.t0).abs() > 1e-15 {
        return Err(Error::GridMismatch);
    }
    let m = metric.indices.len();
    if m == 0 {
        return Err(Error::InvalidArgument("no angle components".into()));
    }
    let mut series = Vec::with_capacity(reference.len());
    for (a, b) in reference.states.iter().zip(&test.states) {
        let diff: Vec<f64> = metric.indices.iter().map(|&i| a[i] - b[i]).collect();
        let shift = if metric.centered { diff.iter().sum::<f64>() / m as f64 } else { 0.0 };
        let e = diff.iter().map(|d| (d - shift) * (d - shift)).sum::<f64>().sqrt();
        series.push(e.to_degrees());
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let var = series.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    Ok(ErrorReport { mean, std: var.sqrt(), series })
}

/// Angle metric for a jet: its angle states, centered when the field is
/// invariant under a common angle shift.
pub fn angle_metric(jet: &EquilibriumJet, basis: &ModalBasis) -> AngleMetric {
    AngleMetric {
        indices: basis.displacement_states.clone(),
        centered: !jet.angle_states().is_empty() && !basis.dropped.is_empty(),
    }
}

/// Settings shared by the comparison runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareSettings {
    pub k: usize,
    pub dt: f64,
    pub horizon: f64,
    pub options: DecoupleOptions,
}

/// Simulate the k-jet from `x0` (equilibrium-relative) and each decoupled
/// system from `inverse_map(x0)`; report the reconstruction error.
pub fn compare_targets(
    jet: &EquilibriumJet,
    basis: &ModalBasis,
    targets: &[IntraModalTarget],
    x0: &[f64],
    settings: CompareSettings,
) -> Result<Vec<(TargetKind, ErrorReport)>> {
    let k = settings.k;
    let reference_field = CompiledPoly::real(&jet.jet.with_max_degree(k))?;
    let reference = integrate(&reference_field, x0, settings.dt, settings.horizon, Space::Original)?;
    let metric = angle_metric(jet, basis);
    let mut out = Vec::with_capacity(targets.len());
    for target in targets {
        let (decoupled, chain) = run_decoupling(jet, basis, target, k, settings.options)?;
        let z0 = inverse_map(&chain, x0)?;
        let field = CompiledPoly::new(&decoupled.system);
        let ztraj = integrate(&field, &z0, settings.dt, settings.horizon, Space::Decoupled(k))?;
        let xtraj = reconstruct(&chain, &ztraj)?;
        out.push((decoupled.target, error_report(&reference, &xtraj, &metric)?));
    }
    Ok(out)
}
