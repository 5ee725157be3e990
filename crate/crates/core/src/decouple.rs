//! Order-by-order removal of inter-modal terms by near-identity
//! homogeneous transformations.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)] // float math without std
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::modal::{to_modal, ModalBasis};
use crate::oscillator::ModeScaling;
use crate::poly::{binomial, compose_truncated, invert_near_identity, Monomial, Poly, PolyMap};
use crate::power::EquilibriumJet;

/// Divisors smaller than this times the spectral radius are rejected.
pub const SMALL_DIVISOR_REL: f64 = 1e-6;
const COSINE_TOL: f64 = 1e-6;
const IMAG_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TargetKind {
    /// Each mode keeps the form of a single-machine-infinite-bus system.
    Smib,
    /// Intra-modal terms are left untouched (`h_intra = 0`).
    SmallTransfer,
    /// All nonlinear terms are eliminated.
    NormalForm,
}

impl TargetKind {
    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Smib => "smib",
            TargetKind::SmallTransfer => "st",
            TargetKind::NormalForm => "nf",
        }
    }
}

/// SMIB parameters of one mode: `y'' + alpha y' + beta (sin(y + y_s) - sin y_s) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SmibMode {
    pub alpha: f64,
    pub beta: f64,
    pub y_s: f64,
    /// `r[n-1]` multiplies `y^n` in the truncated real form.
    pub r: Vec<f64>,
    /// Nonlinear coefficients of the first complex equation of the mode,
    /// keyed by the exponents of the mode's two variables.
    pub mu: BTreeMap<(u8, u8), Complex64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmibTarget {
    pub modes: Vec<SmibMode>,
    pub scaling: ModeScaling,
}

#[derive(Clone, Debug, PartialEq)]
pub enum IntraModalTarget {
    Smib(SmibTarget),
    SmallTransfer,
    NormalForm,
}

impl IntraModalTarget {
    pub fn kind(&self) -> TargetKind {
        match self {
            IntraModalTarget::Smib(_) => TargetKind::Smib,
            IntraModalTarget::SmallTransfer => TargetKind::SmallTransfer,
            IntraModalTarget::NormalForm => TargetKind::NormalForm,
        }
    }

    /// Desired coefficient of an intra-modal monomial in component `r`.
    fn smib_mu(&self, r: usize, m: &Monomial) -> Complex64 {
        let IntraModalTarget::Smib(t) = self else { return Complex64::zero() };
        let mode = r / 2;
        let e = m.exponents();
        let (a, b) = (e[2 * mode], e[2 * mode + 1]);
        let lookup = |key| t.modes.get(mode).and_then(|md| md.mu.get(&key)).copied().unwrap_or_else(Complex64::zero);
        if r % 2 == 0 {
            lookup((a, b))
        } else {
            lookup((b, a)).conj()
        }
    }
}

/// How the transformed field `(I + Dh)^-1 F(H(u))` is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JacobianUpdate {
    /// Full series inverse of `I + Dh`, exact through the truncation degree.
    #[default]
    Exact,
    /// First-order approximation `I - Dh`. Its cubic coefficients differ from
    /// the exact ones; kept for comparison with published tables.
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct DecoupleOptions {
    pub update: JacobianUpdate,
}

fn same_mode(r: usize, m: &Monomial) -> bool {
    m.support().all(|v| v / 2 == r / 2)
}

/// Result of one decoupling step.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoupleStep {
    pub system: PolyMap,
    pub step: PolyMap,
    /// Largest degree-`p+1` coefficient discarded because the step should
    /// have cancelled it. Zero up to rounding when the step is correct.
    pub cancellation_residual: f64,
}

fn jacobian_times(jac: &[Vec<Poly>], u: &PolyMap, k: usize) -> Result<PolyMap> {
    let n = u.n_vars();
    let comps: Vec<Poly> = (0..u.n_out()).map(|j| u.component(j)).collect();
    let mut out = Vec::with_capacity(jac.len());
    for row in jac {
        let mut acc = Poly::zero(n);
        for (entry, comp) in row.iter().zip(&comps) {
            if !entry.is_zero() {
                acc.add_scaled(&entry.mul_truncated(comp, k), Complex64::new(1.0, 0.0));
            }
        }
        acc.prune();
        out.push(acc);
    }
    PolyMap::from_polys(&out, n, k)
}

/// Remove the inter-modal terms of degree `p + 1` from a system in modal
/// coordinates whose degrees `2..=p` are already intra-modal.
pub fn decouple_step(system: &PolyMap, target: &IntraModalTarget, p: usize, options: DecoupleOptions) -> Result<DecoupleStep> {
    let n = system.n_vars();
    let k = system.max_degree();
    let d = p + 1;
    if system.n_out() != n || n % 2 != 0 {
        return Err(Error::DimensionMismatch { expected: n, found: system.n_out() });
    }
    if d < 2 || d > k {
        return Err(Error::InvalidArgument("step degree outside 2..=k".into()));
    }
    for (r, m, _) in system.nonlinear_terms() {
        if m.degree() <= p && !same_mode(r, m) {
            return Err(Error::PreconditionNotDecoupled { degree: m.degree() });
        }
    }
    let lambda: Vec<Complex64> = (0..n).map(|i| system.linear()[(i, i)]).collect();
    let guard = SMALL_DIVISOR_REL * lambda.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let smib_modes = match target {
        IntraModalTarget::Smib(t) => t.modes.len(),
        _ => 0,
    };

    let mut step = PolyMap::identity(n, k);
    for r in 0..n {
        let mut coeffs: BTreeMap<Monomial, Complex64> =
            system.nonlinear(r).iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), *c)).collect();
        if let IntraModalTarget::Smib(t) = target {
            if let Some(mode) = t.modes.get(r / 2) {
                for &(a, b) in mode.mu.keys() {
                    if (a + b) as usize == d {
                        let mut e = vec![0u8; n];
                        let base = 2 * (r / 2);
                        if r % 2 == 0 {
                            e[base] = a;
                            e[base + 1] = b;
                        } else {
                            e[base] = b;
                            e[base + 1] = a;
                        }
                        coeffs.entry(Monomial::new(e)).or_insert_with(Complex64::zero);
                    }
                }
            }
        }
        for (m, c) in coeffs {
            let intra = same_mode(r, &m);
            let numerator = if !intra {
                c
            } else {
                match target {
                    IntraModalTarget::SmallTransfer => continue,
                    IntraModalTarget::NormalForm => c,
                    IntraModalTarget::Smib(_) => {
                        if r / 2 >= smib_modes {
                            continue;
                        }
                        c - target.smib_mu(r, &m)
                    }
                }
            };
            if numerator.norm() == 0.0 {
                continue;
            }
            let den: Complex64 = m.exponents().iter().zip(&lambda).map(|(&e, l)| l * e as f64).sum::<Complex64>() - lambda[r];
            if den.norm() < guard {
                return Err(Error::SmallDivisor { component: r, exponents: m.exponents().to_vec(), divisor: den.norm() });
            }
            step.add_term(r, m, numerator / den);
        }
    }
    step.prune();

    let g = compose_truncated(system, &step, k)?;
    let jac = step.nonlinear_jacobian();
    let mut updated = match options.update {
        JacobianUpdate::FirstOrder => g.sub(&jacobian_times(&jac, &g, k)?)?,
        JacobianUpdate::Exact => {
            let mut u = g.clone();
            for _ in 0..(k - 1) / (d - 1) + 1 {
                u = g.sub(&jacobian_times(&jac, &u, k)?)?;
            }
            u
        }
    };

    // Pin degree d to the target exactly.
    let mut residual: f64 = 0.0;
    for r in 0..n {
        let terms: Vec<(Monomial, Complex64)> =
            updated.nonlinear(r).iter().filter(|(m, _)| m.degree() == d).map(|(m, c)| (m.clone(), *c)).collect();
        for (m, c) in terms {
            let intra = same_mode(r, &m);
            let desired = if !intra {
                Complex64::zero()
            } else {
                match target {
                    IntraModalTarget::SmallTransfer => continue,
                    IntraModalTarget::NormalForm => Complex64::zero(),
                    IntraModalTarget::Smib(_) if r / 2 >= smib_modes => continue,
                    IntraModalTarget::Smib(_) => target.smib_mu(r, &m),
                }
            };
            residual = residual.max((c - desired).norm());
            updated.set_term(r, m, desired);
        }
        if let IntraModalTarget::Smib(_) = target {
            if r / 2 < smib_modes {
                for (m, mu) in smib_terms(target, r, d, n) {
                    if updated.coeff(r, &m).norm() == 0.0 {
                        residual = residual.max(mu.norm());
                        updated.set_term(r, m, mu);
                    }
                }
            }
        }
    }
    Ok(DecoupleStep { system: updated, step, cancellation_residual: residual })
}

fn smib_terms(target: &IntraModalTarget, r: usize, d: usize, n: usize) -> Vec<(Monomial, Complex64)> {
    let IntraModalTarget::Smib(t) = target else { return Vec::new() };
    let Some(mode) = t.modes.get(r / 2) else { return Vec::new() };
    let base = 2 * (r / 2);
    mode.mu
        .iter()
        .filter(|((a, b), _)| (a + b) as usize == d)
        .map(|(&(a, b), &c)| {
            let mut e = vec![0u8; n];
            if r % 2 == 0 {
                e[base] = a;
                e[base + 1] = b;
                (Monomial::new(e), c)
            } else {
                e[base] = b;
                e[base + 1] = a;
                (Monomial::new(e), c.conj())
            }
        })
        .collect()
}

/// Coordinate maps from decoupled coordinates back to the original state.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformChain {
    /// Right eigenvectors (`n x N`): `x = U z`.
    pub modal_right: DMatrix<Complex64>,
    /// Left eigenvectors (`N x n`).
    pub modal_left: DMatrix<Complex64>,
    /// Near-identity maps for degrees `2..=k`, in order.
    pub steps: Vec<PolyMap>,
    /// Series inverses of `steps`, truncated at `k`.
    pub inverse_steps: Vec<PolyMap>,
    pub k: usize,
}

/// The decoupled k-jet: every component involves only its own mode's pair.
#[derive(Clone, Debug, PartialEq)]
pub struct DecoupledJet {
    pub system: PolyMap,
    pub target: TargetKind,
}

impl DecoupledJet {
    pub fn n_modes(&self) -> usize {
        self.system.n_vars() / 2
    }

    pub fn eigenvalue(&self, mode: usize) -> Complex64 {
        self.system.linear()[(2 * mode, 2 * mode)]
    }

    /// Coefficients of the first equation of `mode`, keyed by the exponents
    /// of the mode's two variables (degree 1 included).
    pub fn mode_coefficients(&self, mode: usize) -> BTreeMap<(u8, u8), Complex64> {
        let r = 2 * mode;
        let mut out = BTreeMap::new();
        out.insert((1, 0), self.system.linear()[(r, r)]);
        let off = self.system.linear()[(r, r + 1)];
        if off.norm() > 0.0 {
            out.insert((0, 1), off);
        }
        for (m, &c) in self.system.nonlinear(r) {
            let e = m.exponents();
            out.insert((e[r], e[r + 1]), c);
        }
        out
    }

    /// Largest stored coefficient of a monomial mixing modes (zero by construction).
    pub fn max_inter_modal(&self) -> f64 {
        self.system.max_coeff_where(|r, m| !same_mode(r, m))
    }
}

/// Decouple the jet through degree `k` with the given intra-modal target.
pub fn run_decoupling(
    jet: &EquilibriumJet,
    basis: &ModalBasis,
    target: &IntraModalTarget,
    k: usize,
    options: DecoupleOptions,
) -> Result<(DecoupledJet, TransformChain)> {
    if k < 1 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let truncated = EquilibriumJet { jet: jet.jet.with_max_degree(k), ..jet.clone() };
    let mut system = to_modal(&truncated, basis)?;
    let mut steps = Vec::new();
    for p in 1..k {
        let out = decouple_step(&system, target, p, options)?;
        system = out.system;
        steps.push(out.step);
    }
    let inverse_steps = steps.iter().map(|s| invert_near_identity(s, k)).collect::<Result<Vec<_>>>()?;
    let chain = TransformChain { modal_right: basis.right.clone(), modal_left: basis.left.clone(), steps, inverse_steps, k };
    Ok((DecoupledJet { system, target: target.kind() }, chain))
}

/// Decoupled coordinates to original (equilibrium-relative) state.
pub fn forward_map(chain: &TransformChain, z: &[Complex64]) -> Result<Vec<f64>> {
    let mut w = z.to_vec();
    for step in chain.steps.iter().rev() {
        w = step.eval(&w)?;
    }
    if w.len() != chain.modal_right.ncols() {
        return Err(Error::DimensionMismatch { expected: chain.modal_right.ncols(), found: w.len() });
    }
    let n = chain.modal_right.nrows();
    let mut x = vec![0.0; n];
    let mut worst: f64 = 0.0;
    let mut size: f64 = 1.0;
    for (r, xr) in x.iter_mut().enumerate() {
        let v: Complex64 = (0..w.len()).map(|c| chain.modal_right[(r, c)] * w[c]).sum();
        worst = worst.max(v.im.abs());
        size = size.max(v.re.abs());
        *xr = v.re;
    }
    if worst > IMAG_TOL * size {
        return Err(Error::ImaginaryResidue { residue: worst });
    }
    Ok(x)
}

/// Original (equilibrium-relative) state to decoupled coordinates via the
/// series inverses. Components outside the retained modes are projected out.
pub fn inverse_map(chain: &TransformChain, x: &[f64]) -> Result<Vec<Complex64>> {
    let n = chain.modal_left.ncols();
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: x.len() });
    }
    let mut z: Vec<Complex64> =
        (0..chain.modal_left.nrows()).map(|r| (0..n).map(|c| chain.modal_left[(r, c)] * x[c]).sum()).collect();
    for inv in &chain.inverse_steps {
        z = inv.eval(&z)?;
    }
    Ok(z)
}

/// `M(H(z)) - DH(z) G(z)` for the modal field `M`, the decoupled field `G`
/// and the chain's near-identity part `H`. Vanishes to order `k` in `z`.
pub fn conjugacy_residual(modal: &PolyMap, decoupled: &PolyMap, chain: &TransformChain, z: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut w = z.to_vec();
    let mut v = decoupled.eval(z)?;
    for step in chain.steps.iter().rev() {
        let jac = step.nonlinear_jacobian();
        let mut dv: Vec<Complex64> = (0..step.n_out()).map(|i| (0..v.len()).map(|j| step.linear()[(i, j)] * v[j]).sum()).collect();
        for (i, row) in jac.iter().enumerate() {
            for (j, entry) in row.iter().enumerate() {
                if !entry.is_zero() {
                    dv[i] += entry.eval(&w) * v[j];
                }
            }
        }
        v = dv;
        w = step.eval(&w)?;
    }
    let target = modal.eval(&w)?;
    Ok(target.iter().zip(&v).map(|(a, b)| a - b).collect())
}

/// SMIB parameters from the normalized basis and the operating rotor angles
/// (one per displacement state).
pub fn build_smib_target(basis: &ModalBasis, angles: &[f64], k: usize, scaling: ModeScaling) -> Result<IntraModalTarget> {
    let disp = &basis.displacement_states;
    if angles.len() != disp.len() {
        return Err(Error::DimensionMismatch { expected: disp.len(), found: angles.len() });
    }
    let mut modes = Vec::with_capacity(basis.n_modes());
    for mode in 0..basis.n_modes() {
        let l1 = basis.eigenvalues[2 * mode];
        let l2 = basis.eigenvalues[2 * mode + 1];
        let y_s: f64 = disp.iter().zip(angles).map(|(&j, &a)| (basis.left[(2 * mode, j)] * a).re).sum();
        let cos_y = y_s.cos();
        if cos_y.abs() < COSINE_TOL {
            return Err(Error::CosineSingular { mode });
        }
        let alpha = -2.0 * l1.re;
        let beta = (l1 * l2).re / cos_y;
        let mut r = Vec::with_capacity(k);
        let mut factorial = 1.0;
        for n in 1..=k {
            factorial *= n as f64;
            // cos(y_s + (n-1) pi/2) without rounding pi/2
            let shifted = match (n - 1) % 4 {
                0 => cos_y,
                1 => -y_s.sin(),
                2 => -cos_y,
                _ => y_s.sin(),
            };
            r.push(beta * shifted / factorial);
        }
        let sigma = scaling.factor();
        let kappa = Complex64::new(1.0, 0.0) / ((l1 - l2) * sigma);
        let mut mu = BTreeMap::new();
        for n in 2..=k {
            for a in 0..=n {
                let c = -kappa * r[n - 1] * sigma.powi(n as i32) * binomial(n, a) as f64;
                if c.norm() > 0.0 {
                    mu.insert((a as u8, (n - a) as u8), c);
                }
            }
        }
        modes.push(SmibMode { alpha, beta, y_s, r, mu });
    }
    Ok(IntraModalTarget::Smib(SmibTarget { modes, scaling }))
}
