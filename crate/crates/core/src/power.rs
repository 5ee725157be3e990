//! Classical-model multi-machine swing equations, equilibria and jets.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
#[allow(unused_imports)] // float math without std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::poly::PolyMap;
use crate::trig::{taylor_trig, TrigComponent, TrigField, TrigTerm, Wave};

/// Residual gate of `make_jet`.
pub const JET_RESIDUAL_TOL: f64 = 1e-8;
const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MachineParams {
    /// Inertia constant (s).
    pub h: f64,
    /// Damping constant (pu).
    pub d: f64,
    /// Mechanical power (pu).
    pub pm: f64,
    /// Internal EMF magnitude (pu).
    pub e: f64,
}

/// Reduced-network transfer data. Electrical output of machine `i` is
/// `e_i^2 g_i + sum_j (c_ij sin(d_i - d_j) + d_ij cos(d_i - d_j))`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub g: Vec<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerSystem {
    pub machines: Vec<MachineParams>,
    pub network: NetworkParams,
    /// Synchronous speed (rad/s).
    pub omega_s: f64,
}

impl PowerSystem {
    pub fn n_machines(&self) -> usize {
        self.machines.len()
    }

    fn validate(&self) -> Result<()> {
        let m = self.n_machines();
        if m < 2 {
            return Err(Error::InvalidArgument("need at least two machines".into()));
        }
        for (i, mc) in self.machines.iter().enumerate() {
            if !(mc.h > 0.0) {
                return Err(Error::NonPositiveInertia { machine: i });
            }
            if !(mc.e > 0.0) || mc.d < 0.0 {
                return Err(Error::InvalidArgument("EMF must be positive and damping non-negative".into()));
            }
        }
        let net = &self.network;
        if net.g.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: net.g.len() });
        }
        for mat in [&net.c, &net.d] {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::DimensionMismatch { expected: m, found: mat.nrows() });
            }
        }
        Ok(())
    }
}

/// State layout `(angle_1, speed_1, angle_2, speed_2, ...)`.
pub fn build_swing_field(system: &PowerSystem) -> Result<TrigField> {
    system.validate()?;
    let m = system.n_machines();
    let net = &system.network;
    let mut components = Vec::with_capacity(2 * m);
    for (i, mc) in system.machines.iter().enumerate() {
        components.push(TrigComponent { constant: 0.0, linear: vec![(2 * i + 1, 1.0)], terms: vec![] });
        let k = system.omega_s / (2.0 * mc.h);
        let mut terms = Vec::new();
        for j in 0..m {
            if j == i {
                continue;
            }
            let direction = vec![(2 * i, 1.0), (2 * j, -1.0)];
            if net.c[(i, j)] != 0.0 {
                terms.push(TrigTerm { amplitude: -k * net.c[(i, j)], wave: Wave::Sin, direction: direction.clone(), phase: 0.0 });
            }
            if net.d[(i, j)] != 0.0 {
                terms.push(TrigTerm { amplitude: -k * net.d[(i, j)], wave: Wave::Cos, direction, phase: 0.0 });
            }
        }
        components.push(TrigComponent {
            constant: k * (mc.pm - mc.e * mc.e * net.g[i]),
            linear: vec![(2 * i + 1, -mc.d / (2.0 * mc.h))],
            terms,
        });
    }
    Ok(TrigField { components, angle_states: (0..m).map(|i| 2 * i).collect() })
}

/// An equilibrium, possibly relative: all angle states drift at a common
/// rate `drift` while every other state is stationary.
#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub state: Vec<f64>,
    pub drift: f64,
}

/// Residual of the (relative) equilibrium equations and the common drift.
fn relative_residual(field: &TrigField, f: &[f64]) -> (Vec<f64>, f64) {
    if field.angle_states.is_empty() {
        return (f.to_vec(), 0.0);
    }
    let drift = field.angle_states.iter().map(|&a| f[a]).sum::<f64>() / field.angle_states.len() as f64;
    let mut r = f.to_vec();
    for &a in &field.angle_states {
        r[a] -= drift;
    }
    (r, drift)
}

/// Newton iteration for an equilibrium near `guess`.
///
/// When the field has angle states, solves for a relative equilibrium: the
/// first angle is pinned to its guess and the angle rates are only required
/// to agree, not to vanish.
pub fn find_equilibrium(field: &TrigField, guess: &[f64]) -> Result<Equilibrium> {
    let n = field.dim();
    if guess.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: guess.len() });
    }
    let anchor = field.angle_states.first().copied();
    let is_angle = |j: usize| field.angle_states.contains(&j);
    let equations = |x: &[f64]| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let f = field.eval(x)?;
        let jf = field.jacobian(x)?;
        let mut r = DVector::zeros(n);
        let mut jr = DMatrix::zeros(n, n);
        match anchor {
            None => {
                r.copy_from_slice(&f);
                jr.copy_from(&jf);
            }
            Some(a0) => {
                for j in 0..n {
                    if j == a0 {
                        r[j] = x[a0] - guess[a0];
                        jr[(j, a0)] = 1.0;
                    } else if is_angle(j) {
                        r[j] = f[j] - f[a0];
                        for c in 0..n {
                            jr[(j, c)] = jf[(j, c)] - jf[(a0, c)];
                        }
                    } else {
                        r[j] = f[j];
                        for c in 0..n {
                            jr[(j, c)] = jf[(j, c)];
                        }
                    }
                }
            }
        }
        Ok((r, jr))
    };

    let mut x = guess.to_vec();
    let mut res = f64::INFINITY;
    for _ in 0..=NEWTON_MAX_ITER {
        let (r, jr) = equations(&x)?;
        res = r.amax();
        if !res.is_finite() {
            break;
        }
        if res < NEWTON_TOL {
            let f = field.eval(&x)?;
            let drift = anchor.map_or(0.0, |a| f[a]);
            return Ok(Equilibrium { state: x, drift });
        }
        let step = jr.lu().solve(&r).ok_or(Error::SingularJacobian)?;
        for (xi, s) in x.iter_mut().zip(step.iter()) {
            *xi -= s;
        }
    }
    Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: res })
}

/// Taylor jet of a trig field at a (relative) equilibrium, origin shifted to it.
#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumJet {
    pub x_sep: Vec<f64>,
    /// Common angle drift rate at `x_sep` (zero for true equilibria).
    pub drift: f64,
    pub jet: PolyMap,
    pub source: TrigField,
    /// Displacement-like states (rotor angles for swing fields).
    pub displacement_states: Vec<usize>,
}

impl EquilibriumJet {
    /// Wrap an explicit polynomial field whose origin is an equilibrium.
    pub fn from_poly(jet: PolyMap, displacement_states: Vec<usize>) -> Self {
        let n = jet.n_vars();
        EquilibriumJet {
            x_sep: vec![0.0; n],
            drift: 0.0,
            jet,
            source: TrigField { components: vec![TrigComponent::default(); n], angle_states: Vec::new() },
            displacement_states,
        }
    }

    pub fn angle_states(&self) -> &[usize] {
        &self.source.angle_states
    }

    pub fn dim(&self) -> usize {
        self.jet.n_vars()
    }
}

pub fn make_jet(field: &TrigField, x_sep: &[f64], k: usize) -> Result<EquilibriumJet> {
    make_jet_with_tolerance(field, x_sep, k, JET_RESIDUAL_TOL)
}

/// `make_jet` with an explicit residual gate.
pub fn make_jet_with_tolerance(field: &TrigField, x_sep: &[f64], k: usize, tol: f64) -> Result<EquilibriumJet> {
    let expansion = taylor_trig(field, x_sep, k)?;
    let (r, drift) = relative_residual(field, &expansion.constant);
    let residual = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(residual < tol) {
        return Err(Error::ResidualTooLarge { residual });
    }
    Ok(EquilibriumJet {
        x_sep: x_sep.to_vec(),
        drift,
        jet: expansion.map,
        source: field.clone(),
        displacement_states: field.angle_states.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_6;

    fn two_machine(pm1: f64) -> PowerSystem {
        let mc = MachineParams { h: 5.0, d: 1.0, pm: pm1, e: 1.0 };
        PowerSystem {
            machines: vec![mc, MachineParams { pm: -pm1, ..mc }],
            network: NetworkParams {
                g: vec![0.0, 0.0],
                c: DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]),
                d: DMatrix::zeros(2, 2),
            },
            omega_s: 100.0,
        }
    }

    #[test]
    fn sin_coupling_sign() {
        let field = build_swing_field(&two_machine(0.0)).unwrap();
        let t = &field.components[1].terms[0];
        // restoring: d(omega_1)/dt contains -(omega_s/2H) c sin(d1 - d2)
        assert_eq!(t.wave, Wave::Sin);
        assert!((t.amplitude + 100.0 / 10.0 * 1.5).abs() < 1e-12);
        assert_eq!(t.direction, vec![(0, 1.0), (2, -1.0)]);
    }

    #[test]
    fn rejects_bad_inertia() {
        let mut s = two_machine(0.0);
        s.machines[1].h = 0.0;
        assert_eq!(build_swing_field(&s), Err(Error::NonPositiveInertia { machine: 1 }));
    }

    #[test]
    fn equilibrium_with_known_angle() {
        // power balance: pm = c sin(delta), delta = pi/6
        let sys = two_machine(1.5 * FRAC_PI_6.sin());
        let field = build_swing_field(&sys).unwrap();
        let eq = find_equilibrium(&field, &[0.3, 0.0, 0.0, 0.0]).unwrap();
        assert!((eq.state[0] - eq.state[2] - FRAC_PI_6).abs() < 1e-8);
        assert!(eq.drift.abs() < 1e-10);
        let again = find_equilibrium(&field, &eq.state).unwrap();
        assert_eq!(again.state, eq.state);
    }

    #[test]
    fn linear_field_jet() {
        let field = TrigField {
            components: vec![
                TrigComponent { constant: 0.0, linear: vec![(1, 1.0)], terms: vec![] },
                TrigComponent { constant: 0.0, linear: vec![(0, -4.0), (1, -0.2)], terms: vec![] },
            ],
            angle_states: vec![],
        };
        let jet = make_jet(&field, &[0.0, 0.0], 3).unwrap();
        assert!(jet.jet.is_linear());
        assert_eq!(jet.jet.linear()[(1, 0)].re, -4.0);
        assert!(matches!(make_jet(&field, &[1.0, 0.0], 3), Err(Error::ResidualTooLarge { .. })));
    }
}
