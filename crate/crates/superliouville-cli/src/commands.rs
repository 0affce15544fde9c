//! The five subcommands: build library objects from a config, run the
//! requested computation, write reports (JSON) and fields (CSV), and
//! evaluate gates.

use std::fs;
use std::path::Path;

use serde::Serialize;

use superliouville::blowup::{detect_concentration_with, generate_sequence};
use superliouville::diagnostics::{self, compute_t, DiagnosticsReport};
use superliouville::geometry::{kelvin_transform_with, Grid, SolutionPair};
use superliouville::operators::{
    dzbar_complex, energy_e, energy_i, exp_2u, residual_inf_norms, INTERIOR_RING,
};
use superliouville::solver::newton_solve;

use crate::config::{
    BlowupCliConfig, ExportConfig, Gates, KelvinConfig, SolveConfig, VerifyConfig,
};
use crate::Failure;

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let path = out.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// CSV dump of one node-sampled scalar quantity: header "x1,x2,value",
/// one row per node in row-major order, shortest round-trip decimal
/// floats.
fn write_csv(out: &Path, name: &str, grid: Grid, values: &[f64]) -> Result<(), Failure> {
    assert_eq!(values.len(), grid.nx * grid.ny);
    let path = out.join(name);
    let mut text = String::with_capacity(values.len() * 24 + 16);
    text.push_str("x1,x2,value\n");
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.node(i, j);
            let v = values[grid.idx(i, j)];
            text.push_str(&format!("{:?},{:?},{:?}\n", p.x1, p.x2, v));
        }
    }
    fs::write(&path, text)
        .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn psi_norm2(pair: &SolutionPair) -> Vec<f64> {
    pair.psi.values.iter().map(|s| s.norm_sqr()).collect()
}

fn write_state_csvs(out: &Path, pair: &SolutionPair) -> Result<(), Failure> {
    write_csv(out, "u.csv", pair.grid, &pair.u.values)?;
    write_csv(out, "psi_norm2.csv", pair.grid, &psi_norm2(pair))
}

// ---------------------------------------------------------------------------
// Gate evaluation
// ---------------------------------------------------------------------------

struct GateCheck {
    failures: Vec<String>,
}

impl GateCheck {
    fn new() -> Self {
        GateCheck {
            failures: Vec::new(),
        }
    }

    fn upper(&mut self, name: &str, value: f64, bound: Option<f64>) {
        let Some(bound) = bound else { return };
        let ok = value <= bound;
        println!(
            "gate {name}: {value:e} <= {bound:e} ... {}",
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            self.failures
                .push(format!("{name} = {value:e} exceeds {bound:e}"));
        }
    }

    fn near(&mut self, name: &str, value: f64, target: Option<f64>, tol: f64, relative: bool) {
        let Some(target) = target else { return };
        let err = if relative {
            (value - target).abs() / target.abs()
        } else {
            (value - target).abs()
        };
        let ok = err <= tol;
        println!(
            "gate {name}: {value} vs {target} ({} err {err:e} <= {tol:e}) ... {}",
            if relative { "rel" } else { "abs" },
            if ok { "pass" } else { "FAIL" }
        );
        if !ok {
            self.failures
                .push(format!("{name} = {value} misses {target} by {err:e}"));
        }
    }

    fn finish(self, what: &str) -> Result<(), Failure> {
        if self.failures.is_empty() {
            println!("{what}: all gates passed");
            Ok(())
        } else {
            Err(Failure::Gate(self.failures.join("; ")))
        }
    }
}

fn check_diagnostics_gates(gates: &Gates, report: &DiagnosticsReport) -> Result<(), Failure> {
    let mut check = GateCheck::new();
    check.upper("residual_u_max", report.residual_u_inf, gates.residual_u_max);
    check.upper(
        "residual_psi_max",
        report.residual_psi_inf,
        gates.residual_psi_max,
    );
    check.upper("t_max", report.T_max, gates.t_max);
    check.upper(
        "holomorphy_max",
        report.T_holomorphy_residual,
        gates.holomorphy_max,
    );
    check.near(
        "alpha",
        report.alpha,
        gates.alpha_target,
        gates.alpha_rel_tol.unwrap_or(0.01),
        true,
    );
    check.near(
        "u_slope",
        report.u_fit.slope,
        gates.slope_target,
        gates.slope_tol.unwrap_or(0.05),
        false,
    );
    check.finish("verify")
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

pub fn cmd_verify(config: &VerifyConfig, out: &Path) -> Result<(), Failure> {
    let grid = config.grid.build()?;
    let pair = config.perturbation.apply(&config.solution.build(grid)?);
    let report = diagnostics::report(&pair)?;
    println!(
        "residuals: u {:e}, psi {:e}; alpha {}; T_max {:e}",
        report.residual_u_inf, report.residual_psi_inf, report.alpha, report.T_max
    );
    write_json(out, "diagnostics.json", &report)?;
    write_state_csvs(out, &pair)?;
    check_diagnostics_gates(&config.gates, &report)
}

pub fn cmd_solve(config: &SolveConfig, out: &Path) -> Result<(), Failure> {
    let grid = config.grid.build()?;
    let initial = config.perturbation.apply(&config.solution.build(grid)?);
    let report = newton_solve(&initial, &config.solver)?;
    println!(
        "newton: converged in {} iterations, residual {:e}",
        report.iterations,
        report
            .residual_history
            .last()
            .copied()
            .unwrap_or(f64::NAN)
    );
    write_json(out, "solve.json", &report)?;
    let diag = diagnostics::report(&report.final_pair)?;
    write_json(out, "diagnostics.json", &diag)?;
    write_state_csvs(out, &report.final_pair)?;
    check_diagnostics_gates(&config.gates, &diag)
}

pub fn cmd_blowup(config: &BlowupCliConfig, out: &Path) -> Result<(), Failure> {
    let spec = config.sequence_spec()?;
    let pairs = generate_sequence(&spec)?;
    let report = detect_concentration_with(&pairs, &config.detector)?;
    println!(
        "blowup: {} concentration point(s), {} spinor point(s), classification {:?}",
        report.sigma1.len(),
        report.sigma2.len(),
        report.classification
    );
    for (p, m) in report.sigma1.iter().zip(&report.masses) {
        println!("  point ({}, {}): local mass {}", p.x1, p.x2, m);
    }
    write_json(out, "blowup.json", &report)
}

pub fn cmd_export(config: &ExportConfig, out: &Path) -> Result<(), Failure> {
    let grid = config.grid.build()?;
    let pair = config.perturbation.apply(&config.solution.build(grid)?);
    if config.fields.is_empty() {
        return Err(Failure::Config(
            "export config lists no fields (expected any of u, psi_norm2, e2u, t_re, t_im)"
                .into(),
        ));
    }
    // Reject unknown names before writing anything.
    for name in &config.fields {
        match name.as_str() {
            "u" | "psi_norm2" | "e2u" | "t_re" | "t_im" => {}
            other => {
                return Err(Failure::Config(format!(
                    "unknown field name {other:?} (expected u, psi_norm2, e2u, t_re, or t_im)"
                )))
            }
        }
    }
    let needs_t = config
        .fields
        .iter()
        .any(|f| f == "t_re" || f == "t_im");
    let t = if needs_t { Some(compute_t(&pair)?) } else { None };
    for name in &config.fields {
        let values: Vec<f64> = match name.as_str() {
            "u" => pair.u.values.clone(),
            "psi_norm2" => psi_norm2(&pair),
            "e2u" => pair.u.values.iter().map(|&v| exp_2u(v)).collect(),
            "t_re" => t.as_ref().unwrap().values.iter().map(|z| z.re).collect(),
            "t_im" => t.as_ref().unwrap().values.iter().map(|z| z.im).collect(),
            _ => unreachable!("names validated above"),
        };
        write_csv(out, &format!("{name}.csv"), grid, &values)?;
    }
    Ok(())
}

/// Local diagnostics of a Kelvin-transformed pair.  The tail diagnostics
/// (charge fits, decay slopes) are anchored at the origin and need an
/// origin-centered grid, which a Kelvin target deliberately is not, so
/// this report carries the local quantities only.
#[derive(Debug, Serialize)]
#[allow(non_snake_case)]
struct KelvinReport {
    residual_u_inf: f64,
    residual_psi_inf: f64,
    E: f64,
    I: f64,
    T_max: f64,
    T_holomorphy_residual: f64,
}

pub fn cmd_kelvin(config: &KelvinConfig, out: &Path) -> Result<(), Failure> {
    if config.gates.any_asymptotic() {
        return Err(Failure::Config(
            "alpha/slope gates are origin-anchored and not available for kelvin \
             (use residual_u_max, residual_psi_max, t_max, holomorphy_max)"
                .into(),
        ));
    }
    let source = config.solution.build(config.grid.build()?)?;
    let target = config.target.build()?;
    let pair = kelvin_transform_with(&source, target, config.r_min, config.clifford_factor)?;

    let (residual_u_inf, residual_psi_inf) = residual_inf_norms(&pair);
    let t = compute_t(&pair)?;
    let report = KelvinReport {
        residual_u_inf,
        residual_psi_inf,
        E: energy_e(&pair),
        I: energy_i(&pair),
        T_max: t.inf_norm_inset(INTERIOR_RING),
        T_holomorphy_residual: dzbar_complex(&t).inf_norm_inset(2 * INTERIOR_RING),
    };
    println!(
        "kelvin image: residuals u {:e}, psi {:e}; T_max {:e}",
        report.residual_u_inf, report.residual_psi_inf, report.T_max
    );
    write_json(out, "kelvin.json", &report)?;
    write_state_csvs(out, &pair)?;

    let mut check = GateCheck::new();
    check.upper(
        "residual_u_max",
        report.residual_u_inf,
        config.gates.residual_u_max,
    );
    check.upper(
        "residual_psi_max",
        report.residual_psi_inf,
        config.gates.residual_psi_max,
    );
    check.upper("t_max", report.T_max, config.gates.t_max);
    check.upper(
        "holomorphy_max",
        report.T_holomorphy_residual,
        config.gates.holomorphy_max,
    );
    check.finish("kelvin")
}
