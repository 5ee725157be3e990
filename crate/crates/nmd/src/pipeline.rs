//! End-to-end steps shared by the commands and the acceptance suite.

use nmd_core::decouple::{build_smib_target, run_decoupling, DecoupleOptions, DecoupledJet, IntraModalTarget, TargetKind, TransformChain};
use nmd_core::energy::{cct_sweep, energy_function, EnergyFunction, FaultScenario, SweepReport};
use nmd_core::modal::{eigendecompose, normalize_basis, ModalBasis};
use nmd_core::oscillator::{simplify_undamped, to_real, DecoupledOscillator, ModeScaling};
use nmd_core::power::{build_swing_field, find_equilibrium, make_jet, make_jet_with_tolerance, EquilibriumJet};
use nmd_core::sim::{integrate, Space, Trajectory};
use nmd_core::trig::TrigField;

use crate::format::{PowerCase, SystemDef};
use crate::CliError;

/// A system expanded around its equilibrium with a normalized modal basis.
#[derive(Clone, Debug)]
pub struct Model {
    pub jet: EquilibriumJet,
    pub basis: ModalBasis,
    /// Rotor angles at the equilibrium, one per displacement state.
    pub operating_angles: Vec<f64>,
    pub states: Vec<String>,
    /// The non-polynomial field the jet came from, if any.
    pub original: Option<TrigField>,
}

fn power_equilibrium(case: &PowerCase, field: &TrigField) -> Result<Vec<f64>, CliError> {
    let guess = case.initial.clone().unwrap_or_else(|| vec![0.0; field.dim()]);
    Ok(find_equilibrium(field, &guess)?.state)
}

pub fn prepare(def: &SystemDef, k: usize) -> Result<Model, CliError> {
    if k < 2 {
        return Err(CliError::Input("order must be at least 2".into()));
    }
    let (jet, original) = match def {
        SystemDef::Power(case) => {
            let field = build_swing_field(&case.system)?;
            let x_sep = power_equilibrium(case, &field)?;
            (make_jet(&field, &x_sep, k)?, Some(field))
        }
        SystemDef::Trig(case) => {
            let jet = make_jet_with_tolerance(&case.field, &case.equilibrium, k, case.residual_tolerance)?;
            (jet, Some(case.field.clone()))
        }
        SystemDef::Poly(case) => {
            let mut jet = case.jet.clone();
            jet.jet = jet.jet.with_max_degree(k);
            (jet, None)
        }
    };
    let basis = normalize_basis(&eigendecompose(&jet)?)?;
    let operating_angles = match def {
        SystemDef::Trig(case) => case.operating_angles.clone(),
        _ => basis.displacement_states.iter().map(|&i| jet.x_sep[i]).collect(),
    };
    Ok(Model { jet, basis, operating_angles, states: def.state_names(), original })
}

pub fn target(model: &Model, kind: TargetKind, k: usize, scaling: ModeScaling) -> Result<IntraModalTarget, CliError> {
    Ok(match kind {
        TargetKind::Smib => build_smib_target(&model.basis, &model.operating_angles, k, scaling)?,
        TargetKind::SmallTransfer => IntraModalTarget::SmallTransfer,
        TargetKind::NormalForm => IntraModalTarget::NormalForm,
    })
}

pub fn all_targets(model: &Model, k: usize, scaling: ModeScaling) -> Result<Vec<IntraModalTarget>, CliError> {
    [TargetKind::Smib, TargetKind::SmallTransfer, TargetKind::NormalForm].into_iter().map(|t| target(model, t, k, scaling)).collect()
}

pub fn parse_target(name: &str) -> Result<TargetKind, CliError> {
    match name {
        "smib" => Ok(TargetKind::Smib),
        "st" => Ok(TargetKind::SmallTransfer),
        "nf" => Ok(TargetKind::NormalForm),
        other => Err(CliError::Input(format!("unknown target '{other}' (expected smib, st or nf)"))),
    }
}

/// Decoupled jet, chain and per-mode real oscillators.
#[derive(Clone, Debug)]
pub struct Decoupled {
    pub jet: DecoupledJet,
    pub chain: TransformChain,
    pub oscillators: Vec<DecoupledOscillator>,
}

pub fn decouple(model: &Model, target: &IntraModalTarget, k: usize, options: DecoupleOptions, scaling: ModeScaling) -> Result<Decoupled, CliError> {
    let (jet, chain) = run_decoupling(&model.jet, &model.basis, target, k, options)?;
    let oscillators = (0..jet.n_modes()).map(|m| to_real(&jet, m, scaling)).collect::<nmd_core::Result<Vec<_>>>()?;
    Ok(Decoupled { jet, chain, oscillators })
}

/// Energy functions of the simplified oscillators.
pub fn energy_functions(oscillators: &[DecoupledOscillator]) -> Result<Vec<EnergyFunction>, CliError> {
    Ok(oscillators.iter().map(|o| energy_function(&simplify_undamped(o))).collect::<nmd_core::Result<Vec<_>>>()?)
}

/// Post-fault model plus the fault-on field and pre-fault state of a power case.
#[derive(Clone, Debug)]
pub struct FaultSetup {
    pub model: Model,
    pub scenario: FaultScenario,
}

pub fn fault_setup(def: &SystemDef, k: usize, dt: f64) -> Result<FaultSetup, CliError> {
    let SystemDef::Power(case) = def else {
        return Err(CliError::Input("a fault scenario needs a power system with [networks.*]".into()));
    };
    let fault_net = case.fault_on.as_ref().ok_or_else(|| CliError::Input("networks.fault_on is required".into()))?;
    let pre_fault_state = match (&case.initial, &case.pre_fault) {
        (Some(x), _) => x.clone(),
        (None, Some(pre)) => {
            let field = build_swing_field(&case.with_network(pre))?;
            find_equilibrium(&field, &vec![0.0; field.dim()])?.state
        }
        (None, None) => return Err(CliError::Input("a fault scenario needs [initial] or networks.pre_fault".into())),
    };
    let fault_on = build_swing_field(&case.with_network(fault_net))?;
    let model = prepare(def, k)?;
    let scenario = FaultScenario { pre_fault_state, fault_on, post_fault_equilibrium: model.jet.x_sep.clone(), dt };
    Ok(FaultSetup { model, scenario })
}

/// Equilibrium-relative state at fault clearing.
pub fn clearing_offset(setup: &FaultSetup, duration: f64) -> Result<Vec<f64>, CliError> {
    let s = &setup.scenario;
    let xc = nmd_core::sim::integrate_final(&s.fault_on, &s.pre_fault_state, s.dt, duration)?;
    Ok(xc.iter().zip(&s.post_fault_equilibrium).map(|(a, b)| a - b).collect())
}

#[derive(Clone, Debug)]
pub struct StabilityRun {
    pub decoupled: Decoupled,
    pub energies: Vec<EnergyFunction>,
    pub report: SweepReport,
}

pub fn stability(setup: &FaultSetup, target: &IntraModalTarget, k: usize, options: DecoupleOptions, scaling: ModeScaling, durations: &[f64]) -> Result<StabilityRun, CliError> {
    let decoupled = decouple(&setup.model, target, k, options, scaling)?;
    let energies = energy_functions(&decoupled.oscillators)?;
    let report = cct_sweep(&setup.scenario, &decoupled.chain, &energies, durations)?;
    Ok(StabilityRun { decoupled, energies, report })
}

/// Simulate the non-polynomial source field from `x_sep + y0` and express
/// the result relative to the (possibly drifting) equilibrium.
pub fn simulate_original(model: &Model, y0: &[f64], dt: f64, horizon: f64) -> Result<Option<Trajectory<f64>>, CliError> {
    let Some(field) = &model.original else { return Ok(None) };
    let x0: Vec<f64> = model.jet.x_sep.iter().zip(y0).map(|(a, b)| a + b).collect();
    let mut traj = integrate(field, &x0, dt, horizon, Space::Original)?;
    let angles = model.jet.angle_states().to_vec();
    for (i, state) in traj.states.iter_mut().enumerate() {
        let t = i as f64 * dt;
        for (j, v) in state.iter_mut().enumerate() {
            *v -= model.jet.x_sep[j];
            if angles.contains(&j) {
                *v -= model.jet.drift * t;
            }
        }
    }
    Ok(Some(traj))
}

/// `0, step, 2 step, ..., max` without accumulated rounding.
pub fn duration_grid(step: f64, max: f64) -> Vec<f64> {
    let n = (max / step + 1e-9).floor() as usize;
    // round to the nearest short decimal so 0.07 prints as 0.07
    (0..=n).map(|i| (i as f64 * step * 1e12).round() / 1e12).collect()
}
