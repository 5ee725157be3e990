//! Command-line driver.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nmd_core::decouple::{DecoupleOptions, JacobianUpdate, TargetKind};
use nmd_core::modal::check_resonance;
use nmd_core::oscillator::ModeScaling;
use nmd_core::sim::{angle_metric, compare_targets, error_report, integrate, reconstruct, CompiledPoly, CompareSettings, Space, DEFAULT_DT, DEFAULT_HORIZON};
use nmd_core::synth::{random_mechanical, random_power_system, MechanicalSpec, PowerSpec};
use nmd_core::decouple::inverse_map;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::format::{load_system, poly_file, power_file, to_toml, SystemDef};
use crate::output::{self, sig6, OutDir};
use crate::pipeline::{self, Model};
use crate::{exit, CliError};

#[derive(Debug, Parser)]
#[command(name = "nmd", version, about = "Nonlinear modal decoupling of multi-oscillator systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decouple a system and write coefficient tables.
    Decouple(DecoupleArgs),
    /// Simulate the jet, the source field and a decoupled system from one initial state.
    Simulate(SimulateArgs),
    /// Compare the SMIB, ST and NF targets against the jet over several initial states.
    Compare(CompareArgs),
    /// Energy-based stability sweep over fault durations.
    Stability(StabilityArgs),
    /// Write a random synthetic system file.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TargetArg {
    Smib,
    St,
    Nf,
}

impl From<TargetArg> for TargetKind {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::Smib => TargetKind::Smib,
            TargetArg::St => TargetKind::SmallTransfer,
            TargetArg::Nf => TargetKind::NormalForm,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Exact,
    FirstOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    Half,
    Unit,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System-definition file.
    pub system: PathBuf,
    /// Truncation order k.
    #[arg(long = "order", default_value_t = 3)]
    pub order: usize,
    /// Output directory.
    #[arg(long, default_value = "nmd-out")]
    pub out: PathBuf,
    /// How the transformed field is formed at each step.
    #[arg(long, value_enum, default_value_t = UpdateArg::Exact)]
    pub update: UpdateArg,
    /// Scale of the real mode coordinates.
    #[arg(long, value_enum, default_value_t = ScalingArg::Half)]
    pub scaling: ScalingArg,
}

impl Common {
    fn options(&self) -> DecoupleOptions {
        DecoupleOptions {
            update: match self.update {
                UpdateArg::Exact => JacobianUpdate::Exact,
                UpdateArg::FirstOrder => JacobianUpdate::FirstOrder,
            },
        }
    }

    fn scaling(&self) -> ModeScaling {
        match self.scaling {
            ScalingArg::Half => ModeScaling::Half,
            ScalingArg::Unit => ModeScaling::Unit,
        }
    }
}

#[derive(Debug, Args)]
pub struct DecoupleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = TargetArg::St)]
    pub target: TargetArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = TargetArg::St)]
    pub target: TargetArg,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    /// Initial state relative to the equilibrium, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Start from the clearing state of the file's fault after this duration (s).
    #[arg(long)]
    pub fault_duration: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: f64,
    /// Direction of the initial states, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
    /// Scales applied to the direction, one row each.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4")]
    pub amplitudes: Vec<f64>,
    /// Fault durations (s) whose clearing states give the rows; needs a fault scenario.
    #[arg(long, value_delimiter = ',')]
    pub durations: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value_t = TargetArg::St)]
    pub target: TargetArg,
    /// Largest integration step during the fault (s).
    #[arg(long, default_value_t = DEFAULT_DT)]
    pub dt: f64,
    /// Fault durations (s), ascending, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub durations: Option<Vec<f64>>,
    /// Spacing of the default duration grid (s).
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
    /// End of the default duration grid (s).
    #[arg(long, default_value_t = 0.25)]
    pub max_duration: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    /// Classical-model power system.
    Power,
    /// Polynomial mechanical oscillators.
    Mechanical,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = SynthKind::Power)]
    pub kind: SynthKind,
    /// Machines (power) or modes (mechanical).
    #[arg(long, default_value_t = 3)]
    pub size: usize,
    /// Polynomial order of mechanical systems.
    #[arg(long = "order", default_value_t = 3)]
    pub order: usize,
    #[arg(long, default_value = "nmd-out")]
    pub out: PathBuf,
}

/// Parse arguments, run, print errors and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit::INPUT } else { exit::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(report) => {
            print!("{report}");
            exit::SUCCESS
        }
        Err(e) => {
            eprintln!("nmd: {e}");
            e.exit_code()
        }
    }
}

/// Execute a command; returns the text printed on success.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Decouple(a) => cmd_decouple(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn check_order(k: usize) -> Result<(), CliError> {
    if !(2..=8).contains(&k) {
        return Err(CliError::Input(format!("order {k} outside 2..=8")));
    }
    Ok(())
}

fn check_time(dt: f64, horizon: f64) -> Result<(), CliError> {
    if !(dt > 0.0 && dt.is_finite()) || !(horizon >= dt && horizon.is_finite()) {
        return Err(CliError::Input("need dt > 0 and horizon >= dt".into()));
    }
    Ok(())
}

fn eigen_summary(model: &Model) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "oscillatory modes: {}", model.basis.n_modes());
    for m in 0..model.basis.n_modes() {
        let _ = writeln!(s, "  mode {}: {}", m + 1, output::complex6(model.basis.eigenvalues[2 * m]));
    }
    if !model.basis.dropped.is_empty() {
        let d: Vec<String> = model.basis.dropped.iter().map(|l| sig6(l.re)).collect();
        let _ = writeln!(s, "dropped real eigenvalues: {}", d.join(", "));
    }
    s
}

fn cmd_decouple(a: &DecoupleArgs) -> Result<String, CliError> {
    let c = &a.common;
    check_order(c.order)?;
    let def = load_system(&c.system)?;
    let model = pipeline::prepare(&def, c.order)?;
    let out = OutDir::create(&c.out)?;
    let tol = nmd_core::decouple::SMALL_DIVISOR_REL * model.basis.max_abs_eigenvalue();
    let resonance = check_resonance(&model.basis.eigenvalues, c.order, tol);
    out.text("resonance.txt", &output::resonance_text(&resonance, tol))?;
    out.csv("eigenvalues.csv", &["index", "re", "im"], output::eigenvalue_rows(&model.basis))?;
    out.csv("modal_basis.csv", &["matrix", "row", "col", "re", "im"], output::basis_rows(&model.basis))?;

    let target = pipeline::target(&model, a.target.into(), c.order, c.scaling())?;
    let d = pipeline::decouple(&model, &target, c.order, c.options(), c.scaling())?;
    out.csv("decoupled.csv", &["component", "exponents", "re", "im"], output::map_rows(&d.jet.system))?;
    out.csv("chain.csv", &["degree", "component", "exponents", "re", "im"], output::chain_rows(&d.chain, false))?;
    out.csv("chain_inverse.csv", &["degree", "component", "exponents", "re", "im"], output::chain_rows(&d.chain, true))?;
    out.csv("real_forms.csv", &["mode", "equation", "wv_exp", "wd_exp", "coefficient"], output::real_form_rows(&d.oscillators))?;

    let mut report = eigen_summary(&model);
    let _ = writeln!(report, "target: {}, order {}", d.jet.target.name(), c.order);
    for o in &d.oscillators {
        let text = output::mode_text(&d.jet, o);
        out.text(&format!("mode{}.txt", o.mode + 1), &text)?;
        let _ = writeln!(report, "\n{text}");
    }
    let efs = pipeline::energy_functions(&d.oscillators)?;
    let _ = writeln!(report, "simplified oscillators");
    for ef in &efs {
        report.push_str(&output::simplified_text(ef));
    }
    if !resonance.exact.is_empty() {
        let _ = writeln!(report, "\nwarning: {} exact resonance(s), see resonance.txt", resonance.exact.len());
    }
    out.text("report.txt", &report)?;
    Ok(report)
}

/// `+1` on the first displacement state and `-1` on the last.
fn default_direction(model: &Model) -> Vec<f64> {
    let mut x = vec![0.0; model.jet.dim()];
    let disp = &model.basis.displacement_states;
    if let (Some(&first), Some(&last)) = (disp.first(), disp.last()) {
        x[first] += 1.0;
        x[last] -= 1.0;
    }
    x
}

fn check_state(x: &[f64], n: usize) -> Result<(), CliError> {
    if x.len() != n || x.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Input(format!("initial state needs {n} finite entries")));
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let c = &a.common;
    check_order(c.order)?;
    check_time(a.dt, a.horizon)?;
    let def = load_system(&c.system)?;
    let (model, y0) = match (&a.x0, a.fault_duration) {
        (Some(_), Some(_)) => return Err(CliError::Input("give either --x0 or --fault-duration".into())),
        (None, Some(t)) => {
            let setup = pipeline::fault_setup(&def, c.order, a.dt)?;
            let y0 = pipeline::clearing_offset(&setup, t)?;
            (setup.model, y0)
        }
        (x0, None) => {
            let model = pipeline::prepare(&def, c.order)?;
            let y0 = match x0 {
                Some(x) => x.clone(),
                None => default_direction(&model).iter().map(|v| 0.1 * v).collect(),
            };
            (model, y0)
        }
    };
    check_state(&y0, model.jet.dim())?;
    let out = OutDir::create(&c.out)?;
    let header: Vec<&str> = std::iter::once("t").chain(model.states.iter().map(String::as_str)).collect();

    let jet_field = CompiledPoly::real(&model.jet.jet)?;
    let reference = integrate(&jet_field, &y0, a.dt, a.horizon, Space::Original)?;
    out.csv("trajectory_jet.csv", &header, output::trajectory_rows(&reference))?;
    let mut report = eigen_summary(&model);
    if let Some(orig) = pipeline::simulate_original(&model, &y0, a.dt, a.horizon)? {
        out.csv("trajectory_original.csv", &header, output::trajectory_rows(&orig))?;
        let e = error_report(&orig, &reference, &angle_metric(&model.jet, &model.basis))?;
        let _ = writeln!(report, "jet vs source field: E[e] = {} deg, Std[e] = {} deg", sig6(e.mean), sig6(e.std));
    }
    let target = pipeline::target(&model, a.target.into(), c.order, c.scaling())?;
    let d = pipeline::decouple(&model, &target, c.order, c.options(), c.scaling())?;
    let z0 = inverse_map(&d.chain, &y0)?;
    let ztraj = integrate(&CompiledPoly::new(&d.jet.system), &z0, a.dt, a.horizon, Space::Decoupled(c.order))?;
    let xtraj = reconstruct(&d.chain, &ztraj)?;
    let name = d.jet.target.name();
    out.csv(&format!("trajectory_{name}.csv"), &header, output::trajectory_rows(&xtraj))?;
    let e = error_report(&reference, &xtraj, &angle_metric(&model.jet, &model.basis))?;
    out.csv(&format!("error_{name}.csv"), &["t", "e_deg"], output::error_rows(a.dt, &e))?;
    let _ = writeln!(report, "{name} vs jet: E[e] = {} deg, Std[e] = {} deg", sig6(e.mean), sig6(e.std));
    out.text("report.txt", &report)?;
    Ok(report)
}

fn cmd_compare(a: &CompareArgs) -> Result<String, CliError> {
    let c = &a.common;
    check_order(c.order)?;
    check_time(a.dt, a.horizon)?;
    let def = load_system(&c.system)?;
    let fault_rows = a.durations.is_some() || (a.x0.is_none() && matches!(&def, SystemDef::Power(p) if p.fault_on.is_some()));
    let (model, rows): (Model, Vec<(String, Vec<f64>)>) = if fault_rows {
        if a.x0.is_some() {
            return Err(CliError::Input("give either --x0 or --durations".into()));
        }
        let setup = pipeline::fault_setup(&def, c.order, a.dt)?;
        let durations = a.durations.clone().unwrap_or_else(|| vec![0.01, 0.05, 0.1, 0.15]);
        let rows = durations
            .iter()
            .map(|&t| Ok((format!("FD={}s", sig6(t)), pipeline::clearing_offset(&setup, t)?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        (setup.model, rows)
    } else {
        let model = pipeline::prepare(&def, c.order)?;
        let dir = a.x0.clone().unwrap_or_else(|| default_direction(&model));
        check_state(&dir, model.jet.dim())?;
        let rows = a.amplitudes.iter().map(|&s| (format!("a={}", sig6(s)), dir.iter().map(|v| v * s).collect())).collect();
        (model, rows)
    };
    let targets = pipeline::all_targets(&model, c.order, c.scaling())?;
    let settings = CompareSettings { k: c.order, dt: a.dt, horizon: a.horizon, options: c.options() };
    let out = OutDir::create(&c.out)?;

    let mut table = String::new();
    let _ = writeln!(table, "time-domain errors against the order-{} jet (degrees)", c.order);
    let mut header = format!("{:>12}", "row");
    for t in &targets {
        let n = t.kind().name();
        header.push_str(&format!(" {:>12} {:>12}", format!("E[{n}]"), format!("Std[{n}]")));
    }
    let _ = writeln!(table, "{header}");
    let mut csv_rows = Vec::new();
    for (i, (label, y0)) in rows.iter().enumerate() {
        let results = compare_targets(&model.jet, &model.basis, &targets, y0, settings)?;
        let mut line = format!("{label:>12}");
        for (kind, e) in &results {
            line.push_str(&format!(" {:>12} {:>12}", sig6(e.mean), sig6(e.std)));
            csv_rows.push(vec![(i + 1).to_string(), label.clone(), kind.name().to_string(), output::full(e.mean), output::full(e.std)]);
            out.csv(&format!("error_row{}_{}.csv", i + 1, kind.name()), &["t", "e_deg"], output::error_rows(a.dt, e))?;
        }
        let _ = writeln!(table, "{line}");
    }
    out.csv("compare.csv", &["row", "label", "target", "mean_deg", "std_deg"], csv_rows)?;
    out.text("compare.txt", &table)?;
    Ok(table)
}

fn cmd_stability(a: &StabilityArgs) -> Result<String, CliError> {
    let c = &a.common;
    check_order(c.order)?;
    if !(a.dt > 0.0 && a.step > 0.0 && a.max_duration >= 0.0) {
        return Err(CliError::Input("need dt > 0, step > 0 and max-duration >= 0".into()));
    }
    let durations = a.durations.clone().unwrap_or_else(|| pipeline::duration_grid(a.step, a.max_duration));
    if durations.is_empty() || durations.windows(2).any(|w| w[1] <= w[0]) || durations[0] < 0.0 {
        return Err(CliError::Input("durations must be non-negative and strictly ascending".into()));
    }
    let def = load_system(&c.system)?;
    let setup = pipeline::fault_setup(&def, c.order, a.dt)?;
    let target = pipeline::target(&setup.model, a.target.into(), c.order, c.scaling())?;
    let run = pipeline::stability(&setup, &target, c.order, c.options(), c.scaling(), &durations)?;
    let out = OutDir::create(&c.out)?;
    let mut report = eigen_summary(&setup.model);
    let _ = writeln!(report, "target: {}, order {}", target.kind().name(), c.order);
    for ef in &run.energies {
        report.push_str(&output::simplified_text(ef));
    }
    let _ = writeln!(report);
    report.push_str(&output::stability_text(&run.report, &run.energies));
    out.csv("stability.csv", &["duration", "mode", "wv", "wd", "energy", "critical", "verdict"], output::stability_rows(&run.report))?;
    out.text("stability.txt", &report)?;
    Ok(report)
}

fn cmd_synth(a: &SynthArgs) -> Result<String, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let file = match a.kind {
        SynthKind::Power => {
            if a.size < 2 {
                return Err(CliError::Input("a power system needs at least 2 machines".into()));
            }
            let (sys, angles) = random_power_system(&PowerSpec { machines: a.size, ..PowerSpec::default() }, &mut rng);
            power_file(&sys, &angles)
        }
        SynthKind::Mechanical => {
            if a.size < 1 {
                return Err(CliError::Input("need at least one mode".into()));
            }
            check_order(a.order)?;
            let (jet, _) = random_mechanical(&MechanicalSpec { n_modes: a.size, k: a.order, ..MechanicalSpec::default() }, &mut rng);
            poly_file(&jet)
        }
    };
    let out = OutDir::create(&a.out)?;
    let text = format!("# synthetic system, seed {}\n{}", a.seed, to_toml(&file)?);
    out.text("system.toml", &text)?;
    Ok(format!("wrote {}\n", out.path("system.toml").display()))
}
