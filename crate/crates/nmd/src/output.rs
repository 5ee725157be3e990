//! Text tables (6 significant digits) and CSV files (full precision).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nmd_core::decouple::{DecoupledJet, TransformChain};
use nmd_core::energy::{EnergyFunction, SweepReport, Verdict};
use nmd_core::modal::{ModalBasis, ResonanceReport};
use nmd_core::oscillator::DecoupledOscillator;
use nmd_core::poly::PolyMap;
use nmd_core::sim::{ErrorReport, Trajectory};
use nmd_core::Complex64;

use crate::CliError;

/// `x` with 6 significant digits, `%g` style.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // rounding can bump the exponent (999999.5 -> 1e6)
    let mantissa = format!("{:.5e}", x);
    let exp = mantissa.split('e').nth(1).and_then(|e| e.parse::<i32>().ok()).unwrap_or(exp);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        let (m, e) = mantissa.split_once('e').expect("exponent form");
        let sign = if e.starts_with('-') { "-" } else { "+" };
        format!("{}e{}{:02}", trim(m.to_string()), sign, e.trim_start_matches('-').parse::<i32>().unwrap_or(0))
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn complex6(c: Complex64) -> String {
    let sign = if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) { '-' } else { '+' };
    format!("{} {} j{}", sig6(c.re), sign, sig6(c.im.abs()))
}

pub fn exponents(e: &[u8]) -> String {
    e.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

/// CSV writer into an output directory.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Input(format!("cannot create {}: {e}", root.display())))?;
        Ok(OutDir { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn text(&self, name: &str, body: &str) -> Result<(), CliError> {
        fs::write(self.path(name), body)?;
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.path(name)).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

/// Full-precision (shortest round-trip) number.
pub fn full(x: f64) -> String {
    format!("{x}")
}

pub fn eigenvalue_rows(basis: &ModalBasis) -> Vec<Vec<String>> {
    basis.eigenvalues.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), full(l.re), full(l.im)]).collect()
}

pub fn basis_rows(basis: &ModalBasis) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (name, m) in [("right", &basis.right), ("left", &basis.left)] {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                rows.push(vec![name.to_string(), (r + 1).to_string(), (c + 1).to_string(), full(v.re), full(v.im)]);
            }
        }
    }
    rows
}

/// Every coefficient of a map, linear terms as degree-one monomials.
pub fn map_rows(map: &PolyMap) -> Vec<Vec<String>> {
    let n = map.n_vars();
    let mut rows = Vec::new();
    for r in 0..map.n_out() {
        for c in 0..n {
            let v = map.linear()[(r, c)];
            if v.norm() != 0.0 {
                let mut e = vec![0u8; n];
                e[c] = 1;
                rows.push(vec![(r + 1).to_string(), exponents(&e), full(v.re), full(v.im)]);
            }
        }
        for (m, v) in map.nonlinear(r) {
            rows.push(vec![(r + 1).to_string(), exponents(m.exponents()), full(v.re), full(v.im)]);
        }
    }
    rows
}

pub fn chain_rows(chain: &TransformChain, inverse: bool) -> Vec<Vec<String>> {
    let steps = if inverse { &chain.inverse_steps } else { &chain.steps };
    let mut rows = Vec::new();
    for (i, step) in steps.iter().enumerate() {
        for (r, m, v) in step.nonlinear_terms() {
            rows.push(vec![(i + 2).to_string(), (r + 1).to_string(), exponents(m.exponents()), full(v.re), full(v.im)]);
        }
    }
    rows
}

pub fn real_form_rows(oscillators: &[DecoupledOscillator]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for o in oscillators {
        for (eq, poly) in [("velocity", &o.velocity), ("displacement", &o.displacement)] {
            for (&(a, b), &v) in poly {
                rows.push(vec![(o.mode + 1).to_string(), eq.to_string(), a.to_string(), b.to_string(), full(v)]);
            }
        }
    }
    rows
}

fn term(c: f64, a: u8, b: u8, wv: &str, wd: &str) -> String {
    let mut s = sig6(c);
    for (var, p) in [(wv, a), (wd, b)] {
        match p {
            0 => {}
            1 => s.push_str(&format!("*{var}")),
            _ => s.push_str(&format!("*{var}^{p}")),
        }
    }
    s
}

fn poly_text(p: &std::collections::BTreeMap<(u8, u8), f64>, wv: &str, wd: &str) -> String {
    let mut keys: Vec<_> = p.keys().copied().collect();
    keys.sort_by_key(|&(a, b)| (a + b, std::cmp::Reverse(a)));
    if keys.is_empty() {
        return "0".into();
    }
    keys.iter().map(|&(a, b)| term(p[&(a, b)], a, b, wv, wd)).collect::<Vec<_>>().join(" + ").replace("+ -", "- ")
}

/// Per-mode report: complex coefficients and the real form.
pub fn mode_text(jet: &DecoupledJet, osc: &DecoupledOscillator) -> String {
    let m = osc.mode;
    let (wv, wd) = (format!("w{}", 2 * m + 1), format!("w{}", 2 * m + 2));
    let mut s = String::new();
    let _ = writeln!(s, "mode {} ({} target)", m + 1, jet.target.name());
    let _ = writeln!(s, "eigenvalues {} and {}", complex6(osc.lambda.0), complex6(osc.lambda.1));
    let _ = writeln!(s, "\ncomplex form, first equation of the pair");
    let _ = writeln!(s, "{:>6} {:>6} {:>14} {:>14}", "a", "b", "re", "im");
    for ((a, b), c) in jet.mode_coefficients(m) {
        let _ = writeln!(s, "{:>6} {:>6} {:>14} {:>14}", a, b, sig6(c.re), sig6(c.im));
    }
    let _ = writeln!(s, "\nreal form");
    let _ = writeln!(s, "d{wv}/dt = {}", poly_text(&osc.velocity, &wv, &wd));
    let _ = writeln!(s, "d{wd}/dt = {}", poly_text(&osc.displacement, &wv, &wd));
    s
}

pub fn simplified_text(ef: &EnergyFunction) -> String {
    let m = ef.mode;
    let (wv, wd) = (format!("w{}", 2 * m + 1), format!("w{}", 2 * m + 2));
    let force: std::collections::BTreeMap<(u8, u8), f64> =
        ef.force.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| ((0, (j + 1) as u8), v)).collect();
    let potential: std::collections::BTreeMap<(u8, u8), f64> =
        ef.potential.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| ((0, j as u8), v)).collect();
    let mut s = String::new();
    let _ = writeln!(s, "mode {}: d{wv}/dt = {}, d{wd}/dt = {wv}", m + 1, poly_text(&force, &wv, &wd));
    let _ = writeln!(s, "  V = {wv}^2/2 + {}", poly_text(&potential, &wv, &wd));
    match ef.w_uep {
        Some(w) => {
            let _ = writeln!(s, "  UEP {wd} = {}, critical energy {}", sig6(w), sig6(ef.value((0.0, w))));
        }
        None => {
            let _ = writeln!(s, "  no positive UEP");
        }
    }
    s
}

pub fn resonance_text(r: &ResonanceReport, tol: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "resonance check, tolerance {}", sig6(tol));
    for (label, list) in [("exact", &r.exact), ("near", &r.near)] {
        let _ = writeln!(s, "{label}: {}", list.len());
        for x in list {
            let _ = writeln!(
                s,
                "  lambda{} = sum m_j lambda_j, m = [{}], order {}, residual {}",
                x.target + 1,
                exponents(&x.multipliers),
                x.order,
                sig6(x.residual)
            );
        }
    }
    s
}

pub fn trajectory_rows(traj: &Trajectory<f64>) -> Vec<Vec<String>> {
    traj.states
        .iter()
        .enumerate()
        .map(|(i, x)| std::iter::once(full(traj.time(i))).chain(x.iter().map(|v| full(*v))).collect())
        .collect()
}

pub fn error_rows(dt: f64, report: &ErrorReport) -> Vec<Vec<String>> {
    report.series.iter().enumerate().map(|(i, e)| vec![full(i as f64 * dt), full(*e)]).collect()
}

fn verdict(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Unstable => "unstable",
    }
}

pub fn stability_text(report: &SweepReport, efs: &[EnergyFunction]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "initial energy of the decoupled modes at fault clearing");
    let mut header = format!("{:>10}", "FD (s)");
    for ef in efs {
        header.push_str(&format!(" {:>12}", format!("V{}", ef.mode + 1)));
    }
    header.push_str(&format!(" {:>10}", "verdict"));
    let _ = writeln!(s, "{header}");
    for row in &report.rows {
        let mut line = format!("{:>10}", sig6(row.duration));
        for v in &row.energies {
            line.push_str(&format!(" {:>12}", sig6(*v)));
        }
        line.push_str(&format!(" {:>10}", if row.stable() { "stable" } else { "unstable" }));
        let _ = writeln!(s, "{line}");
    }
    let mut crit = format!("{:>10}", "critical");
    for c in &report.critical {
        crit.push_str(&format!(" {:>12}", c.map_or("none".to_string(), sig6)));
    }
    let _ = writeln!(s, "{crit}");
    let _ = writeln!(s);
    match (report.cct, report.cct_is_lower_bound) {
        (Some(t), false) => {
            let _ = writeln!(s, "CCT estimate: {} s", sig6(t));
        }
        (Some(t), true) => {
            let _ = writeln!(s, "CCT estimate: >= {} s (no tested duration was unstable)", sig6(t));
        }
        (None, _) => {
            let _ = writeln!(s, "CCT estimate: below the shortest tested duration");
        }
    }
    if let Some(m) = report.binding_mode {
        let _ = writeln!(s, "binding mode: {}", m + 1);
    }
    s
}

pub fn stability_rows(report: &SweepReport) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for row in &report.rows {
        for (m, ((w, v), verdict_m)) in row.states.iter().zip(&row.energies).zip(&row.verdicts).enumerate() {
            let crit = report.critical[m].map_or(String::new(), full);
            rows.push(vec![full(row.duration), (m + 1).to_string(), full(w.0), full(w.1), full(*v), crit, verdict(*verdict_m).to_string()]);
        }
    }
    rows
}
