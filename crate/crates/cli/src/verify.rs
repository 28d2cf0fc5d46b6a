//! `verify-theorem`: run, extract the profile, and check the asymptotic
//! statements against their explicit constants.

use std::path::Path;

use dnls_core::asymptotics::{error_series, extract_f_algebraic, finalize_profile, ProfileData, ProfileOptions};
use dnls_core::conformal::{norm_bridge, u_time, BridgeRecord};
use dnls_core::diagnostics::{
    check_l2_envelope, check_profile_error, check_sup_limit, emit_report, monitor_phi, sup_limit_target, MonitorSetup,
    Report,
};
use dnls_core::solver::run;
use dnls_core::Trajectory;
use serde::{Deserialize, Serialize};

use crate::config::{Hypotheses, RunConfig};
use crate::error::{CliError, Result};
use crate::io;

pub const VERDICT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The a priori bounds the proof relies on fail empirically, so the
    /// checks do not test the theorem.
    NotInTheoremRegime,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::NotInTheoremRegime => "not_in_theorem_regime",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Empirical {
    pub sup_target: f64,
    pub sup_last: Option<f64>,
    pub sup_rel_dev: Option<f64>,
    pub l2_target: Option<f64>,
    pub l2_exponent: Option<f64>,
    pub l2_a: Option<f64>,
    pub l2_big_a: Option<f64>,
    /// `-slope` of the fitted profile errors.
    pub delta_e2: Option<f64>,
    pub delta_einf: Option<f64>,
    pub f0_sup: Option<f64>,
    /// Range of `|ω₀|^α / |v₀|^α = 1/(1+f₀)` over the grid.
    pub omega_ratio_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorFlags {
    pub compliant: bool,
    pub psi_nondecreasing: bool,
    pub psi_bounded: bool,
    pub f_within_bound: bool,
    pub decay_v0_holds: bool,
    pub sigma_source: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub schema_version: u32,
    pub verdict: Verdict,
    pub run_floor: f64,
    pub analysis_floor: f64,
    pub checks: Vec<Check>,
    pub empirical: Empirical,
    pub monitors: MonitorFlags,
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        pass,
        detail,
    }
}

fn bridge_to_floor(traj: &Trajectory, floor: f64) -> Result<Vec<BridgeRecord>> {
    let b = traj.params.b;
    Ok(norm_bridge(traj)
        .map_err(|e| CliError::Numeric(e.to_string()))?
        .into_iter()
        .filter(|r| 1.0 - b * r.s >= floor * (1.0 - 1e-9))
        .collect())
}

pub fn verify(cfg: &RunConfig, out: &Path, max_order: usize) -> Result<VerdictReport> {
    cfg.validate(Hypotheses::Theorem)?;
    let vs = &cfg.verify;
    let p = cfg.physics;
    let prep = cfg.prepare(max_order)?;
    let data = prep.data.as_ref().expect("validated: v-frame data");
    let n = prep.n;
    let exps = cfg.exponents(n)?;
    let traj = run(&prep.field, &cfg.solver, &p)?;
    let (run_floor, floor) = (cfg.run_floor(), cfg.analysis_floor());

    let (set, source) = exps.for_monitors();
    let monitors = monitor_phi(&traj, &MonitorSetup::new(n, data.k_const, max_order, set, source))?;
    let mut checks = Vec::new();
    let mut emp = Empirical {
        sup_target: sup_limit_target(&p),
        ..Default::default()
    };

    checks.push(check(
        "mass_dissipation",
        traj.mass_monotone(),
        format!("max step mass growth {:.2e}", traj.max_mass_increase),
    ));

    let bridge = bridge_to_floor(&traj, floor)?;
    let sup = check_sup_limit(&bridge, &p, vs.sup_latest);
    emp.sup_last = sup.latest_u.last().map(|x| x.1);
    emp.sup_rel_dev = Some(sup.max_rel_dev_u);
    checks.push(check(
        "sup_limit",
        sup.max_rel_dev_u <= vs.sup_rel_tol,
        format!(
            "t‖u‖∞^α at the latest {} samples deviates by {:.3e} from {} (tol {})",
            vs.sup_latest, sup.max_rel_dev_u, sup.target_u, vs.sup_rel_tol
        ),
    ));

    let l2 = check_l2_envelope(&bridge, &p, n, None);
    match &l2 {
        Ok(r) => {
            emp.l2_target = Some(r.target_exponent);
            emp.l2_exponent = Some(-r.fit.exponent);
            emp.l2_a = Some(r.a_empirical);
            emp.l2_big_a = Some(r.big_a_empirical);
            checks.push(check(
                "l2_envelope",
                r.rel_dev <= vs.l2_rel_tol && r.a_empirical > 0.0 && r.ratio <= vs.l2_ratio_max,
                format!(
                    "decay exponent {:.4} vs {:.4} (rel dev {:.3e}, tol {}), A/a = {:.4} (max {})",
                    -r.fit.exponent, r.target_exponent, r.rel_dev, vs.l2_rel_tol, r.ratio, vs.l2_ratio_max
                ),
            ));
        }
        Err(e) => checks.push(check("l2_envelope", false, e.to_string())),
    }

    let profile: std::result::Result<ProfileData, String> = extract_f_algebraic(&traj)
        .and_then(|fs| {
            finalize_profile(
                &traj,
                &fs,
                &ProfileOptions {
                    floor: Some(run_floor),
                    ..Default::default()
                },
            )
        })
        .map_err(|e| e.to_string());
    let mut profile_error = None;
    match &profile {
        Ok(prof) => {
            let (lo, hi) = prof.f0.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &f| {
                (lo.min(f), hi.max(f))
            });
            emp.f0_sup = Some(prof.meta.f0_sup);
            emp.omega_ratio_range = Some((1.0 / (1.0 + hi), 1.0 / (1.0 + lo)));
            let r = prof.meta.omega_identity_residual;
            checks.push(check(
                "omega_identity",
                r <= vs.omega_identity_tol,
                format!(
                    "|ω₀|^α(1+f₀) = |v₀|^α to relative {r:.2e} (tol {:.0e})",
                    vs.omega_identity_tol
                ),
            ));

            let t_max = u_time((1.0 - floor) / p.b, p.b);
            let series = error_series(&traj, prof, t_max / 10.0 * (1.0 - 1e-9))
                .map(|s| {
                    s.into_iter()
                        .filter(|m| m.t <= t_max * (1.0 + 1e-9))
                        .collect::<Vec<_>>()
                })
                .map_err(|e| e.to_string())
                .and_then(|s| check_profile_error(&s, vs.profile_jitter).map_err(|e| e.to_string()));
            match series {
                Ok(rep) => {
                    emp.delta_e2 = Some(-rep.fit_e2.exponent);
                    emp.delta_einf = Some(-rep.fit_einf.exponent);
                    let slope_ok = |s: f64| s <= vs.profile_slope_max && s < 0.0;
                    checks.push(check(
                        "profile_convergence",
                        rep.decreasing_e2
                            && rep.decreasing_einf
                            && slope_ok(rep.fit_e2.exponent)
                            && slope_ok(rep.fit_einf.exponent),
                        format!(
                            "e₂ slope {:.4}, e∞ slope {:.4} on t ∈ [{:.4e}, {:.4e}], decreasing within {}: {}/{}",
                            rep.fit_e2.exponent,
                            rep.fit_einf.exponent,
                            rep.fit_e2.t_lo,
                            rep.fit_e2.t_hi,
                            vs.profile_jitter,
                            rep.decreasing_e2,
                            rep.decreasing_einf
                        ),
                    ));
                    profile_error = Some(rep);
                }
                Err(e) => checks.push(check("profile_convergence", false, e)),
            }
        }
        Err(e) => {
            checks.push(check("omega_identity", false, e.clone()));
            checks.push(check("profile_convergence", false, e.clone()));
        }
    }

    let flags = MonitorFlags {
        compliant: monitors.compliant,
        psi_nondecreasing: monitors.psi_nondecreasing,
        psi_bounded: monitors.psi_bounded,
        f_within_bound: monitors.f_within_bound,
        decay_v0_holds: monitors.decay_v0_holds,
        sigma_source: monitors.setup.sigma_source.clone(),
    };
    let verdict = if !monitors.compliant {
        Verdict::NotInTheoremRegime
    } else if checks.iter().all(|c| c.pass) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };

    io::ensure_dir(out)?;
    io::write_json(&out.join("config.json"), cfg)?;
    io::write(&out.join("norms.csv"), io::norms_csv(&traj))?;
    io::write(
        &out.join("bridge.csv"),
        io::bridge_csv(&norm_bridge(&traj).map_err(|e| CliError::Numeric(e.to_string()))?),
    )?;
    let mut report = Report::new(p, monitors);
    report.exponents = exps.relaxed.clone();
    report.strict_exponents = Some(exps.strict.clone());
    report.sup_limit = Some(sup);
    report.l2_envelope = l2.ok();
    report.profile = profile.as_ref().ok().map(|pr| pr.meta.clone());
    report.profile_error = profile_error;
    emit_report(out, &report)?;
    if let Ok(prof) = &profile {
        prof.save(&out.join("profile"))
            .map_err(|e| CliError::Io(e.to_string()))?;
    }

    let verdict = VerdictReport {
        schema_version: VERDICT_SCHEMA_VERSION,
        verdict,
        run_floor,
        analysis_floor: floor,
        checks,
        empirical: emp,
        monitors: flags,
    };
    io::write_json(&out.join("verdict.json"), &verdict)?;
    Ok(verdict)
}
