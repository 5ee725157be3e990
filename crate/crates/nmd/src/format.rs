//! System-definition files.
//!
//! A file holds exactly one of three system kinds:
//!
//! * a classical-model power system: `omega_s`, `[[machines]]` and either
//!   `[network]` or `[networks.pre_fault]`, `[networks.fault_on]`,
//!   `[networks.post_fault]`, plus an optional `[initial]` state;
//! * an explicit trigonometric field: `[trig_field]`;
//! * an explicit polynomial field around an equilibrium at the origin:
//!   `[poly_field]`.
//!
//! See `docs/system-format.md` for the full schema.

use std::path::Path;

use nalgebra::DMatrix;
use nmd_core::poly::{Monomial, PolyMap};
use nmd_core::power::{EquilibriumJet, MachineParams, NetworkParams, PowerSystem};
use nmd_core::trig::{TrigComponent, TrigField, TrigTerm, Wave};
use nmd_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineSpec {
    pub h: f64,
    pub d: f64,
    pub pm: f64,
    pub e: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub g: Vec<f64>,
    pub c: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultNetworks {
    pub pre_fault: Option<NetworkSpec>,
    pub fault_on: Option<NetworkSpec>,
    pub post_fault: Option<NetworkSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub angles: Vec<f64>,
    #[serde(default)]
    pub speeds: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub amplitude: f64,
    pub wave: String,
    pub direction: Vec<f64>,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    #[serde(default)]
    pub constant: f64,
    pub linear: Vec<f64>,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigFieldSpec {
    #[serde(default)]
    pub states: Option<Vec<String>>,
    #[serde(default)]
    pub angle_states: Vec<usize>,
    /// Expansion point.
    pub equilibrium: Vec<f64>,
    /// Operating rotor angles for the SMIB target; defaults to the angle
    /// states of `equilibrium`.
    #[serde(default)]
    pub operating_angles: Option<Vec<f64>>,
    /// Replace each non-angle constant so that `equilibrium` is exact.
    #[serde(default)]
    pub rebalance: bool,
    #[serde(default)]
    pub residual_tolerance: Option<f64>,
    pub components: Vec<ComponentSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyTermSpec {
    pub component: usize,
    pub exponents: Vec<u8>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolyFieldSpec {
    #[serde(default)]
    pub states: Option<Vec<String>>,
    pub order: usize,
    pub displacement_states: Vec<usize>,
    pub linear: Vec<Vec<f64>>,
    #[serde(default)]
    pub terms: Vec<PolyTermSpec>,
}

/// Raw file contents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub machines: Vec<MachineSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub networks: Option<FaultNetworks>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trig_field: Option<TrigFieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly_field: Option<PolyFieldSpec>,
}

/// A power system with the networks of a fault scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerCase {
    /// Post-fault (or only) network.
    pub system: PowerSystem,
    pub pre_fault: Option<NetworkParams>,
    pub fault_on: Option<NetworkParams>,
    /// Full initial state `(angle, speed, ...)`, if given.
    pub initial: Option<Vec<f64>>,
}

impl PowerCase {
    pub fn with_network(&self, network: &NetworkParams) -> PowerSystem {
        PowerSystem { network: network.clone(), ..self.system.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrigCase {
    pub field: TrigField,
    pub equilibrium: Vec<f64>,
    pub operating_angles: Vec<f64>,
    pub residual_tolerance: f64,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolyCase {
    pub jet: EquilibriumJet,
    pub states: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SystemDef {
    Power(PowerCase),
    Trig(TrigCase),
    Poly(PolyCase),
}

impl SystemDef {
    pub fn state_names(&self) -> Vec<String> {
        match self {
            SystemDef::Power(p) => power_state_names(p.system.n_machines()),
            SystemDef::Trig(t) => t.states.clone(),
            SystemDef::Poly(p) => p.states.clone(),
        }
    }
}

pub fn power_state_names(m: usize) -> Vec<String> {
    (1..=m).flat_map(|i| [format!("delta{i}"), format!("omega{i}")]).collect()
}

fn generic_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn square(rows: &[Vec<f64>], n: usize, what: &str) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(input(format!("{what} must be a {n}x{n} matrix")));
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn network(spec: &NetworkSpec, m: usize, what: &str) -> Result<NetworkParams, CliError> {
    if spec.g.len() != m {
        return Err(input(format!("{what}.g needs {m} entries")));
    }
    Ok(NetworkParams { g: spec.g.clone(), c: square(&spec.c, m, &format!("{what}.c"))?, d: square(&spec.d, m, &format!("{what}.d"))? })
}

fn names(given: &Option<Vec<String>>, n: usize) -> Result<Vec<String>, CliError> {
    match given {
        Some(v) if v.len() != n => Err(input(format!("states needs {n} names"))),
        Some(v) => Ok(v.clone()),
        None => Ok(generic_names(n)),
    }
}

fn power_case(file: &SystemFile) -> Result<PowerCase, CliError> {
    let m = file.machines.len();
    let omega_s = file.omega_s.ok_or_else(|| input("omega_s is required for a power system"))?;
    let machines = file.machines.iter().map(|s| MachineParams { h: s.h, d: s.d, pm: s.pm, e: s.e }).collect();
    let (post, pre, fault) = match (&file.network, &file.networks) {
        (Some(n), None) => (network(n, m, "network")?, None, None),
        (None, Some(ns)) => {
            let post = ns.post_fault.as_ref().ok_or_else(|| input("networks.post_fault is required"))?;
            let opt = |n: &Option<NetworkSpec>, what| n.as_ref().map(|n| network(n, m, what)).transpose();
            (network(post, m, "networks.post_fault")?, opt(&ns.pre_fault, "networks.pre_fault")?, opt(&ns.fault_on, "networks.fault_on")?)
        }
        (Some(_), Some(_)) => return Err(input("give either [network] or [networks.*], not both")),
        (None, None) => return Err(input("a power system needs a [network] section")),
    };
    let initial = match &file.initial {
        None => None,
        Some(init) => {
            if init.angles.len() != m {
                return Err(input(format!("initial.angles needs {m} entries")));
            }
            let speeds = init.speeds.clone().unwrap_or_else(|| vec![0.0; m]);
            if speeds.len() != m {
                return Err(input(format!("initial.speeds needs {m} entries")));
            }
            Some(init.angles.iter().zip(&speeds).flat_map(|(&a, &s)| [a, s]).collect())
        }
    };
    Ok(PowerCase { system: PowerSystem { machines, network: post, omega_s }, pre_fault: pre, fault_on: fault, initial })
}

fn trig_case(spec: &TrigFieldSpec) -> Result<TrigCase, CliError> {
    let n = spec.components.len();
    if n == 0 {
        return Err(input("trig_field has no components"));
    }
    if spec.equilibrium.len() != n {
        return Err(input(format!("trig_field.equilibrium needs {n} entries")));
    }
    if spec.angle_states.iter().any(|&a| a >= n) {
        return Err(input("trig_field.angle_states out of range"));
    }
    let sparse = |v: &[f64], what: &str| -> Result<Vec<(usize, f64)>, CliError> {
        if v.len() != n {
            return Err(input(format!("{what} needs {n} entries")));
        }
        Ok(v.iter().enumerate().filter(|(_, &c)| c != 0.0).map(|(i, &c)| (i, c)).collect())
    };
    let mut components = Vec::with_capacity(n);
    for (i, c) in spec.components.iter().enumerate() {
        let mut terms = Vec::with_capacity(c.terms.len());
        for t in &c.terms {
            let wave = match t.wave.to_ascii_lowercase().as_str() {
                "sin" => Wave::Sin,
                "cos" => Wave::Cos,
                other => return Err(input(format!("unknown wave '{other}' (expected sin or cos)"))),
            };
            terms.push(TrigTerm { amplitude: t.amplitude, wave, direction: sparse(&t.direction, "direction")?, phase: t.phase });
        }
        components.push(TrigComponent { constant: c.constant, linear: sparse(&c.linear, &format!("components[{i}].linear"))?, terms });
    }
    let mut field = TrigField { components, angle_states: spec.angle_states.clone() };
    if spec.rebalance {
        let f = field.eval(&spec.equilibrium)?;
        for (i, comp) in field.components.iter_mut().enumerate() {
            if !spec.angle_states.contains(&i) {
                comp.constant -= f[i];
            }
        }
    }
    let operating_angles = match &spec.operating_angles {
        Some(a) if a.len() != spec.angle_states.len() => return Err(input("operating_angles must match angle_states")),
        Some(a) => a.clone(),
        None => spec.angle_states.iter().map(|&i| spec.equilibrium[i]).collect(),
    };
    Ok(TrigCase {
        field,
        equilibrium: spec.equilibrium.clone(),
        operating_angles,
        residual_tolerance: spec.residual_tolerance.unwrap_or(nmd_core::power::JET_RESIDUAL_TOL),
        states: names(&spec.states, n)?,
    })
}

fn poly_case(spec: &PolyFieldSpec) -> Result<PolyCase, CliError> {
    let n = spec.linear.len();
    if n == 0 || spec.order == 0 {
        return Err(input("poly_field needs a non-empty linear part and order >= 1"));
    }
    let a = square(&spec.linear, n, "poly_field.linear")?;
    let mut map = PolyMap::from_linear(a.map(|v| Complex64::new(v, 0.0)), spec.order);
    for t in &spec.terms {
        let degree: usize = t.exponents.iter().map(|&e| e as usize).sum();
        if t.component >= n || t.exponents.len() != n {
            return Err(input("poly_field term has the wrong dimension"));
        }
        if degree < 2 || degree > spec.order {
            return Err(input(format!("poly_field term degree {degree} outside 2..={}", spec.order)));
        }
        map.add_term(t.component, Monomial::new(t.exponents.clone()), Complex64::new(t.re, t.im));
    }
    if spec.displacement_states.iter().any(|&d| d >= n) {
        return Err(input("poly_field.displacement_states out of range"));
    }
    Ok(PolyCase { jet: EquilibriumJet::from_poly(map, spec.displacement_states.clone()), states: names(&spec.states, n)? })
}

pub fn parse_system(text: &str) -> Result<SystemDef, CliError> {
    let file: SystemFile = toml::from_str(text).map_err(|e| input(format!("parse error: {e}")))?;
    let power = !file.machines.is_empty();
    match (power, &file.trig_field, &file.poly_field) {
        (true, None, None) => Ok(SystemDef::Power(power_case(&file)?)),
        (false, Some(t), None) => Ok(SystemDef::Trig(trig_case(t)?)),
        (false, None, Some(p)) => Ok(SystemDef::Poly(poly_case(p)?)),
        (false, None, None) => Err(input("no system found: expected machines, trig_field or poly_field")),
        _ => Err(input("a file must define exactly one of machines, trig_field or poly_field")),
    }
}

pub fn load_system(path: &Path) -> Result<SystemDef, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("cannot read {}: {e}", path.display())))?;
    parse_system(&text)
}

fn network_spec(n: &NetworkParams) -> NetworkSpec {
    let rows = |m: &DMatrix<f64>| (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect();
    NetworkSpec { g: n.g.clone(), c: rows(&n.c), d: rows(&n.d) }
}

/// File for a power system with a single network and an initial state.
pub fn power_file(system: &PowerSystem, angles: &[f64]) -> SystemFile {
    SystemFile {
        omega_s: Some(system.omega_s),
        machines: system.machines.iter().map(|m| MachineSpec { h: m.h, d: m.d, pm: m.pm, e: m.e }).collect(),
        initial: Some(InitialSpec { angles: angles.to_vec(), speeds: None }),
        network: Some(network_spec(&system.network)),
        ..SystemFile::default()
    }
}

/// File for a real polynomial field.
pub fn poly_file(jet: &EquilibriumJet) -> SystemFile {
    let map = &jet.jet;
    let n = map.n_vars();
    let linear = (0..n).map(|r| (0..n).map(|c| map.linear()[(r, c)].re).collect()).collect();
    let terms = map
        .nonlinear_terms()
        .map(|(component, m, c)| PolyTermSpec { component, exponents: m.exponents().to_vec(), re: c.re, im: c.im })
        .collect();
    SystemFile {
        poly_field: Some(PolyFieldSpec {
            states: None,
            order: map.max_degree(),
            displacement_states: jet.displacement_states.clone(),
            linear,
            terms,
        }),
        ..SystemFile::default()
    }
}

pub fn to_toml(file: &SystemFile) -> Result<String, CliError> {
    toml::to_string(file).map_err(|e| CliError::Input(format!("cannot serialize system: {e}")))
}
