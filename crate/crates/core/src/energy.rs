//! Energy functions of simplified oscillators, unstable equilibria and
//! fault-duration sweeps.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::decouple::{inverse_map, TransformChain};
use crate::error::{Error, Result};
use crate::oscillator::{DecoupledOscillator, ModeScaling};
use crate::sim::integrate_final;
use crate::trig::TrigField;

const ROOT_RESIDUAL_REL: f64 = 1e-8;
const TIE_TOL: f64 = 1e-10;

/// `V(w_v, w_d) = w_v^2 / 2 + P(w_d)` with `P(w) = -sum v_j w^(j+1) / (j+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyFunction {
    pub mode: usize,
    pub lambda: (Complex64, Complex64),
    pub scaling: ModeScaling,
    /// Force coefficients `v_1..v_k`.
    pub force: Vec<f64>,
    /// `potential[j]` multiplies `w_d^j`.
    pub potential: Vec<f64>,
    /// Smallest positive zero of the force, if any.
    pub w_uep: Option<f64>,
    /// Largest negative zero of the force, if any: the other side of the well.
    pub w_lower: Option<f64>,
}

impl EnergyFunction {
    pub fn potential_at(&self, w: f64) -> f64 {
        self.potential.iter().rev().fold(0.0, |acc, &c| acc * w + c)
    }

    pub fn value(&self, w: (f64, f64)) -> f64 {
        0.5 * w.0 * w.0 + self.potential_at(w.1)
    }

    pub fn force_at(&self, w: f64) -> f64 {
        self.force.iter().rev().fold(0.0, |acc, &c| (acc + c) * w)
    }
}

pub fn energy_function(osc: &DecoupledOscillator) -> Result<EnergyFunction> {
    let force = osc.simplified.clone().ok_or(Error::NotSimplified)?;
    let mut potential = vec![0.0; force.len() + 2];
    for (j, &v) in force.iter().enumerate() {
        let power = j + 2;
        potential[power] = -v / power as f64;
    }
    let w_uep = smallest_positive_root(&force).ok();
    let flipped: Vec<f64> = force.iter().enumerate().map(|(j, &v)| if j % 2 == 0 { v } else { -v }).collect();
    let w_lower = smallest_positive_root(&flipped).ok().map(|w| -w);
    Ok(EnergyFunction { mode: osc.mode, lambda: osc.lambda, scaling: osc.scaling, force, potential, w_uep, w_lower })
}

/// Real roots of `sum coeffs[i] x^i` via companion-matrix eigenvalues.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|&v| v == 0.0) {
        c.pop();
    }
    let deg = c.len().saturating_sub(1);
    if deg == 0 {
        return Vec::new();
    }
    let lead = c[deg];
    let mut comp = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        comp[(i, deg - 1)] = -c[i] / lead;
    }
    let eval = |x: f64| c.iter().rev().fold(0.0, |acc, &v| acc * x + v);
    let deriv = |x: f64| c.iter().enumerate().skip(1).rev().fold(0.0, |acc, (i, &v)| acc * x + v * i as f64);
    let mut roots: Vec<f64> = Schur::new(comp)
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * z.re.abs().max(1.0))
        .map(|z| {
            let mut x = z.re;
            for _ in 0..8 {
                let d = deriv(x);
                if d == 0.0 {
                    break;
                }
                x -= eval(x) / d;
            }
            x
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

fn smallest_positive_root(force: &[f64]) -> Result<f64> {
    // force(w) = w * sum v_j w^(j-1); the zero root is excluded
    let scale = force.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let f = |w: f64| force.iter().rev().fold(0.0, |acc, &c| (acc + c) * w);
    real_roots(force)
        .into_iter()
        .filter(|&w| w > 1e-12 && f(w).abs() < ROOT_RESIDUAL_REL * scale)
        .fold(None, |best: Option<f64>, w| Some(best.map_or(w, |b| b.min(w))))
        .ok_or(Error::NoPositiveRoot)
}

/// Smallest strictly positive zero of the simplified force.
pub fn find_uep(osc: &DecoupledOscillator) -> Result<f64> {
    let force = osc.simplified.as_ref().ok_or(Error::NotSimplified)?;
    smallest_positive_root(force)
}

pub fn critical_energy(ef: &EnergyFunction) -> Result<f64> {
    let w = ef.w_uep.ok_or(Error::NoPositiveRoot)?;
    Ok(ef.value((0.0, w)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Stable,
    Unstable,
}

/// Stable iff the energy is strictly below the critical energy and the
/// displacement lies inside the well between the two force zeros around the
/// origin; ties count as unstable. Without a positive UEP the well never
/// opens and every state is stable.
pub fn assess(ef: &EnergyFunction, w0: (f64, f64)) -> Verdict {
    let Ok(vc) = critical_energy(ef) else { return Verdict::Stable };
    let inside = ef.w_uep.map_or(true, |w| w0.1 < w) && ef.w_lower.map_or(true, |w| w0.1 > w);
    if inside && ef.value(w0) < vc - TIE_TOL * vc.abs().max(1.0) {
        Verdict::Stable
    } else {
        Verdict::Unstable
    }
}

/// A fault applied at the pre-fault state and cleared after a given duration.
#[derive(Clone, Debug, PartialEq)]
pub struct FaultScenario {
    pub pre_fault_state: Vec<f64>,
    pub fault_on: TrigField,
    /// Post-fault equilibrium the chain is built around.
    pub post_fault_equilibrium: Vec<f64>,
    /// Largest integration step during the fault.
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub duration: f64,
    /// Per-mode `(w_v, w_d)` at clearing.
    pub states: Vec<(f64, f64)>,
    pub energies: Vec<f64>,
    pub verdicts: Vec<Verdict>,
}

impl SweepRow {
    pub fn stable(&self) -> bool {
        self.verdicts.iter().all(|&v| v == Verdict::Stable)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub critical: Vec<Option<f64>>,
    /// Last duration before the first unstable one.
    pub cct: Option<f64>,
    /// True when no tested duration was unstable.
    pub cct_is_lower_bound: bool,
    /// Mode that first exceeds its critical energy.
    pub binding_mode: Option<usize>,
}

/// Per-mode `(w_v, w_d)` of a state relative to the post-fault equilibrium.
pub fn mode_states(chain: &TransformChain, efs: &[EnergyFunction], y: &[f64]) -> Result<Vec<(f64, f64)>> {
    let z = inverse_map(chain, y)?;
    efs.iter()
        .map(|ef| {
            let i = 2 * ef.mode;
            if i + 1 >= z.len() {
                return Err(Error::DimensionMismatch { expected: i + 2, found: z.len() });
            }
            Ok(ef.scaling.to_real(ef.lambda, (z[i], z[i + 1])))
        })
        .collect()
}

pub fn cct_sweep(scenario: &FaultScenario, chain: &TransformChain, efs: &[EnergyFunction], durations: &[f64]) -> Result<SweepReport> {
    if durations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("durations must be ascending".into()));
    }
    let critical: Vec<Option<f64>> = efs.iter().map(|ef| critical_energy(ef).ok()).collect();
    let mut rows = Vec::with_capacity(durations.len());
    for &duration in durations {
        let xc = integrate_final(&scenario.fault_on, &scenario.pre_fault_state, scenario.dt, duration)?;
        let y: Vec<f64> = xc.iter().zip(&scenario.post_fault_equilibrium).map(|(a, b)| a - b).collect();
        let states = mode_states(chain, efs, &y)?;
        let energies: Vec<f64> = efs.iter().zip(&states).map(|(ef, &w)| ef.value(w)).collect();
        let verdicts = efs.iter().zip(&states).map(|(ef, &w)| assess(ef, w)).collect();
        rows.push(SweepRow { duration, states, energies, verdicts });
    }
    let first_bad = rows.iter().position(|r| !r.stable());
    let (cct, binding_mode) = match first_bad {
        None => (rows.last().map(|r| r.duration), None),
        Some(i) => {
            let row = &rows[i];
            let binding = (0..efs.len())
                .filter(|&m| row.verdicts[m] == Verdict::Unstable)
                .max_by(|&a, &b| ratio(row.energies[a], critical[a]).total_cmp(&ratio(row.energies[b], critical[b])));
            (if i == 0 { None } else { Some(rows[i - 1].duration) }, binding)
        }
    };
    Ok(SweepReport { cct_is_lower_bound: first_bad.is_none(), rows, critical, cct, binding_mode })
}

fn ratio(v: f64, crit: Option<f64>) -> f64 {
    crit.map_or(0.0, |c| v / c)
}
