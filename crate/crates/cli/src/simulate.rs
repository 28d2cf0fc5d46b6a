//! `simulate`: one solver run and its artifacts.

use std::path::Path;

use dnls_core::conformal::{norm_bridge, to_u_frame};
use dnls_core::diagnostics::{emit_report, monitor_phi, MonitorSetup, Report};
use dnls_core::field::{write_snapshot, Field, Frame};
use dnls_core::params::Violation;
use dnls_core::solver::run;
use dnls_core::{Complex64, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::{Hypotheses, InitialSpec, RunConfig};
use crate::error::Result;
use crate::io;

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
/// Relative L∞ tolerance of the free-Gaussian comparison.
pub const FREE_ORACLE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialSummary {
    pub n: u32,
    pub inf_weighted: f64,
    pub x_norm: f64,
    pub k_const: f64,
    pub max_order: usize,
    pub boundary_ratio: f64,
    pub bump_weighted_sup: Option<f64>,
    pub bump_dominated: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub max_rel_error: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub frame: Frame,
    pub steps: usize,
    pub snapshots: usize,
    pub final_time: f64,
    pub mass_monotone: bool,
    pub max_mass_increase: f64,
    /// Theorem hypotheses the run does not meet.
    pub tolerated_violations: Vec<Violation>,
    pub initial: Option<InitialSummary>,
    /// Present for `λ = 0` Gaussian runs.
    pub free_oracle: Option<OracleSummary>,
    pub monitors_compliant: Option<bool>,
}

/// Free solution of `i u_t + Δu = 0` from `a e^{-|x|²/(2 s₀)}`, complex `s₀`.
fn free_gaussian(a: Complex64, s0: Complex64, dim: usize, t: f64, r2: f64) -> Complex64 {
    let w = s0 + Complex64::new(0.0, 2.0 * t);
    let ratio = s0 / w;
    // ratio^{N/2} on the principal branch; arg ratio stays in (-π/2, π/2]
    let pref = ratio.powu(dim as u32 / 2) * ratio.sqrt().powu(dim as u32 % 2);
    a * pref * (-r2 / (2.0 * w)).exp()
}

/// Max over snapshots of `‖u - u_exact‖_∞ / ‖u_exact‖_∞`; v-frame snapshots
/// are compared after the transform.
fn free_oracle(traj: &Trajectory, amplitude: Complex64, width: f64) -> Result<f64> {
    let b = traj.params.b;
    let inv = Complex64::new(1.0 / (width * width), 0.0);
    let s0 = match traj.frame {
        Frame::U => 1.0 / inv,
        // u(0, x) = v(0, x) e^{i b |x|²/4}
        Frame::V => 1.0 / (inv - Complex64::new(0.0, b / 2.0)),
    };
    let mut worst = 0.0f64;
    for s in &traj.snapshots {
        let u: Field = match traj.frame {
            Frame::U => s.field.clone(),
            Frame::V => to_u_frame(&s.field, b).map_err(|e| crate::error::CliError::Numeric(e.to_string()))?,
        };
        let (mut err, mut peak) = (0.0f64, 0.0f64);
        for i in 0..u.grid.len() {
            let exact = free_gaussian(amplitude, s0, traj.params.dim, u.time, u.grid.radius_sq(i));
            err = err.max((u.values[i] - exact).norm());
            peak = peak.max(exact.norm());
        }
        worst = worst.max(err / peak);
    }
    Ok(worst)
}

pub fn simulate(cfg: &RunConfig, out: &Path, max_order: usize) -> Result<Summary> {
    let tolerated = cfg.validate(Hypotheses::Simulation)?;
    let prep = cfg.prepare(max_order)?;
    let traj = run(&prep.field, &cfg.solver, &cfg.physics)?;

    io::ensure_dir(out)?;
    io::write_json(&out.join("config.json"), cfg)?;
    io::write(&out.join("norms.csv"), io::norms_csv(&traj))?;
    let snaps = out.join("snapshots");
    io::ensure_dir(&snaps)?;
    for (k, s) in traj.snapshots.iter().enumerate() {
        write_snapshot(&snaps.join(format!("snap_{k:04}")), &s.field)?;
    }

    let mut monitors_compliant = None;
    if traj.frame == Frame::V {
        let bridge = norm_bridge(&traj).map_err(|e| crate::error::CliError::Numeric(e.to_string()))?;
        io::write(&out.join("bridge.csv"), io::bridge_csv(&bridge))?;
        // monitors need the data constant and a valid exponent set
        if let (Some(data), true) = (&prep.data, tolerated.is_empty()) {
            let exps = cfg.exponents(prep.n)?;
            let (set, source) = exps.for_monitors();
            let setup = MonitorSetup::new(prep.n, data.k_const, max_order, set, source);
            let monitors = monitor_phi(&traj, &setup)?;
            monitors_compliant = Some(monitors.compliant);
            let mut report = Report::new(cfg.physics, monitors);
            report.exponents = exps.relaxed.clone();
            report.strict_exponents = Some(exps.strict.clone());
            emit_report(out, &report)?;
        }
    }

    let free = match &cfg.initial {
        InitialSpec::Gaussian { amplitude, width } if cfg.physics.lambda == Complex64::new(0.0, 0.0) => {
            let e = free_oracle(&traj, *amplitude, *width)?;
            Some(OracleSummary {
                max_rel_error: e,
                tol: FREE_ORACLE_TOL,
                pass: e <= FREE_ORACLE_TOL,
            })
        }
        _ => None,
    };

    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        frame: traj.frame,
        steps: traj.steps.len().saturating_sub(1),
        snapshots: traj.snapshots.len(),
        final_time: traj.final_snapshot().field.time,
        mass_monotone: traj.mass_monotone(),
        max_mass_increase: traj.max_mass_increase,
        tolerated_violations: tolerated,
        initial: prep.data.as_ref().map(|d| InitialSummary {
            n: d.n,
            inf_weighted: d.inf_weighted,
            x_norm: d.x_norm,
            k_const: d.k_const,
            max_order: d.max_order,
            boundary_ratio: d.boundary_ratio,
            bump_weighted_sup: (!d.bump_weighted_sup.is_nan()).then_some(d.bump_weighted_sup),
            bump_dominated: prep.c_abs.map(|c| d.bump_dominated(c)),
        }),
        free_oracle: free,
        monitors_compliant,
    };
    io::write_json(&out.join("summary.json"), &summary)?;
    Ok(summary)
}
