//! Rate fits, limit checks and truncated a priori monitors, plus the JSON and
//! CSV report writers.
//!
//! Monitors are evaluated up to a truncated derivative order and never fail a
//! run; they classify it as inside or outside the large-`b` regime.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymptotics::{extract_f_algebraic, g_function, AsymptoticsError, ErrorMetric, ProfileMeta, F0_BOUND};
use crate::conformal::{u_time, BridgeRecord};
use crate::field::{multi_indices, weighted_inf, weighted_sup_norm, FieldError, Spectral};
use crate::params::{ExponentSet, PhysParams};
use crate::solver::Trajectory;

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const MIN_FIT_SAMPLES: usize = 8;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("power-law fit needs positive values, got {value} at t = {t}")]
    NonPositive { t: f64, value: f64 },
    #[error("power-law fit needs at least {need} samples in the window, got {got}")]
    TooFewSamples { got: usize, need: usize },
    #[error("no snapshots")]
    NoSnapshots,
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("serialization: {0}")]
    Serialize(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    /// RMS residual in log-log.
    pub residual: f64,
    pub samples: usize,
}

/// Least squares of `log value` against `log t` over samples with
/// `t ∈ [lo, hi]` (the whole series without a window).
pub fn fit_power_law(series: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<RateFit, DiagnosticsError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| window.is_none_or(|(lo, hi)| t >= lo && t <= hi))
        .collect();
    if let Some(&(t, value)) = pts.iter().find(|(t, v)| !(*v > 0.0) || !(*t > 0.0)) {
        return Err(DiagnosticsError::NonPositive { t, value });
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(DiagnosticsError::TooFewSamples {
            got: pts.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(RateFit {
        exponent: slope,
        prefactor: intercept.exp(),
        t_lo: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        t_hi: pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        residual: (rss / n).sqrt(),
        samples: pts.len(),
    })
}

/// `[t_max/10, t_max]` of a series.
pub fn last_decade(ts: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let hi = ts.into_iter().fold(f64::NEG_INFINITY, f64::max);
    (hi / 10.0, hi)
}

fn rel_dev(value: f64, target: f64) -> f64 {
    (value - target).abs() / target.abs()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupLimitReport {
    /// `(2-Nα)/(2α|Im λ|)`.
    pub target_u: f64,
    /// `(t, t‖u(t)‖_∞^α)` at the latest bridge times.
    pub latest_u: Vec<(f64, f64)>,
    pub max_rel_dev_u: f64,
    /// `b(2-Nα)/(2α|Im λ|)`.
    pub target_v: f64,
    /// `(1 - bs, (1-bs)^{-γ}‖v(s)‖_∞^α)` at the same records.
    pub latest_v: Vec<(f64, f64)>,
    pub max_rel_dev_v: f64,
    /// Decades of u-time covered by the series.
    pub decades: f64,
}

pub fn sup_limit_target(params: &PhysParams) -> f64 {
    (2.0 - params.dim as f64 * params.alpha) / (2.0 * params.alpha * params.lambda.im.abs())
}

/// Compares the compensated sup norms at the `latest` last bridge records with
/// the universal limits in both frames.
pub fn check_sup_limit(bridge: &[BridgeRecord], params: &PhysParams, latest: usize) -> SupLimitReport {
    let target_u = sup_limit_target(params);
    let target_v = params.b * target_u;
    let half_dim = params.dim as f64 / 2.0;
    let tail = &bridge[bridge.len().saturating_sub(latest)..];
    let latest_u: Vec<(f64, f64)> = tail.iter().map(|r| (r.t, r.t * r.linf.powf(params.alpha))).collect();
    let latest_v: Vec<(f64, f64)> = tail
        .iter()
        .map(|r| {
            let rem = 1.0 - params.b * r.s;
            let v_inf = (1.0 + params.b * r.t).powf(half_dim) * r.linf;
            (rem, rem.powf(-params.gamma()) * v_inf.powf(params.alpha))
        })
        .collect();
    let positive: Vec<f64> = bridge.iter().map(|r| r.t).filter(|&t| t > 0.0).collect();
    let decades = match (positive.first(), positive.last()) {
        (Some(a), Some(b)) => (b / a).log10(),
        _ => 0.0,
    };
    SupLimitReport {
        max_rel_dev_u: latest_u.iter().map(|p| rel_dev(p.1, target_u)).fold(0.0, f64::max),
        max_rel_dev_v: latest_v.iter().map(|p| rel_dev(p.1, target_v)).fold(0.0, f64::max),
        target_u,
        latest_u,
        target_v,
        latest_v,
        decades,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L2EnvelopeReport {
    /// `(1/α - N/2)(1 - N/(2n))`.
    pub target_exponent: f64,
    /// Fit of `‖u(t)‖_2` against `t`; its exponent should be `-target`.
    pub fit: RateFit,
    pub rel_dev: f64,
    /// Extremes of `(1+bt)^{target}‖u(t)‖_2` over the fit window.
    pub a_empirical: f64,
    pub big_a_empirical: f64,
    pub ratio: f64,
}

pub fn l2_target_exponent(params: &PhysParams, n: u32) -> f64 {
    let dim = params.dim as f64;
    (1.0 / params.alpha - dim / 2.0) * (1.0 - dim / (2.0 * n as f64))
}

pub fn check_l2_envelope(
    bridge: &[BridgeRecord],
    params: &PhysParams,
    n: u32,
    window: Option<(f64, f64)>,
) -> Result<L2EnvelopeReport, DiagnosticsError> {
    let target = l2_target_exponent(params, n);
    let window = window.unwrap_or_else(|| last_decade(bridge.iter().map(|r| r.t)));
    let series: Vec<(f64, f64)> = bridge.iter().map(|r| (r.t, r.l2)).collect();
    let fit = fit_power_law(&series, Some(window))?;
    let comp: Vec<f64> = bridge
        .iter()
        .filter(|r| r.t >= window.0 && r.t <= window.1)
        .map(|r| (1.0 + params.b * r.t).powf(target) * r.l2)
        .collect();
    let a = comp.iter().copied().fold(f64::INFINITY, f64::min);
    let big_a = comp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(L2EnvelopeReport {
        target_exponent: target,
        rel_dev: rel_dev(-fit.exponent, target),
        fit,
        a_empirical: a,
        big_a_empirical: big_a,
        ratio: big_a / a,
    })
}

/// Profile-error trend over a window of u-time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileErrorReport {
    pub samples: Vec<ErrorMetric>,
    pub fit_e2: RateFit,
    pub fit_einf: RateFit,
    /// Every step `e_{i+1} ≤ (1 + jitter) e_i`.
    pub decreasing_e2: bool,
    pub decreasing_einf: bool,
    pub jitter: f64,
}

pub fn check_profile_error(samples: &[ErrorMetric], jitter: f64) -> Result<ProfileErrorReport, DiagnosticsError> {
    let e2: Vec<(f64, f64)> = samples.iter().map(|m| (m.t, m.e2)).collect();
    let einf: Vec<(f64, f64)> = samples.iter().map(|m| (m.t, m.einf)).collect();
    let decreasing = |s: &[(f64, f64)]| s.windows(2).all(|w| w[1].1 <= (1.0 + jitter) * w[0].1);
    Ok(ProfileErrorReport {
        fit_e2: fit_power_law(&e2, None)?,
        fit_einf: fit_power_law(&einf, None)?,
        decreasing_e2: decreasing(&e2),
        decreasing_einf: decreasing(&einf),
        jitter,
        samples: samples.to_vec(),
    })
}

/// Inputs of [`monitor_phi`] that come from the initial data and exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSetup {
    pub n: u32,
    /// Data constant `K`.
    pub k_const: f64,
    pub max_order: usize,
    pub sigma: f64,
    /// `σ_j` for `j = 0..=max_order`.
    pub sigma_ladder: Vec<f64>,
    /// Which exponent set `σ` came from.
    pub sigma_source: String,
}

impl MonitorSetup {
    pub fn new(n: u32, k_const: f64, max_order: usize, exps: &ExponentSet, sigma_source: impl Into<String>) -> Self {
        Self {
            n,
            k_const,
            max_order,
            sigma: exps.sigma,
            sigma_ladder: exps.sigma_ladder(max_order),
            sigma_source: sigma_source.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSample {
    /// v-time.
    pub s: f64,
    /// u-time.
    pub t: f64,
    pub l2: f64,
    pub linf_v: f64,
    pub linf_u: f64,
    pub phi1: f64,
    pub phi3: f64,
    pub phi4: f64,
    pub psi: f64,
    pub f_sup: f64,
    /// `max |v|^α / bound` of the pointwise decay inequality; `≤ 1` means it holds.
    pub decay_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub label: String,
    pub setup: MonitorSetup,
    pub samples: Vec<MonitorSample>,
    pub psi_nondecreasing: bool,
    pub psi_bounded: bool,
    pub psi_growth: f64,
    pub f_within_bound: bool,
    pub f_bound: f64,
    pub decay_v0_holds: bool,
    /// All flags hold: the run behaves as the large-`b` theory requires.
    pub compliant: bool,
}

/// Running-sup monitors `Φ₁, Φ₃, Φ₄, Ψ` at every snapshot, `‖f(t)‖_∞`, and the
/// pointwise decay inequality
/// `|v|^α ≤ (1 + (2-Nα)/(2α|Im λ|)) min{2K^α⟨x⟩^{-nα}, bG(t)}`.
pub fn monitor_phi(traj: &Trajectory, setup: &MonitorSetup) -> Result<MonitorReport, DiagnosticsError> {
    if traj.snapshots.is_empty() {
        return Err(DiagnosticsError::NoSnapshots);
    }
    let p = traj.params;
    let fs = extract_f_algebraic(traj)?;
    let grid = traj.snapshots[0].field.grid.clone();
    let spectral = Spectral::new(&grid);
    let betas = multi_indices(grid.dim(), setup.max_order);
    let n = setup.n as f64;
    let (alpha, gamma) = (p.alpha, p.gamma());
    let decay_pref = 1.0 + gamma / (alpha * p.lambda.im.abs());
    let data_bound: Vec<f64> = (0..grid.len())
        .map(|i| 2.0 * setup.k_const.powf(alpha) * (1.0 + grid.radius_sq(i)).powf(-n * alpha / 2.0))
        .collect();

    let (mut phi1, mut phi3, mut phi4) = (0.0f64, 0.0f64, 0.0f64);
    let mut samples = Vec::with_capacity(traj.snapshots.len());
    for (snap, f) in traj.snapshots.iter().zip(&fs) {
        let v = &snap.field;
        let s = v.time;
        let rem = 1.0 - p.b * s;
        let moduli = v.modulus();
        let mut by_order_w = vec![0.0f64; setup.max_order + 1];
        let mut by_order_log = vec![0.0f64; setup.max_order + 1];
        for beta in &betas {
            let order: usize = beta.iter().sum();
            let d = v.with_values(spectral.derivative_values(&v.values, beta));
            by_order_w[order] = by_order_w[order].max(weighted_sup_norm(&d, n));
            if order > 0 {
                let ratio = d
                    .values
                    .iter()
                    .zip(&moduli)
                    .fold(0.0f64, |m, (x, r)| m.max(x.norm() / r));
                by_order_log[order] = by_order_log[order].max(ratio);
            }
        }
        for j in 0..=setup.max_order {
            let w = rem.powf(setup.sigma_ladder[j]);
            phi1 = phi1.max(w * by_order_w[j]);
            if j > 0 {
                phi4 = phi4.max(w * by_order_log[j]);
            }
        }
        phi3 = phi3.max(rem.powf(gamma / alpha) / weighted_inf(v, n).value);

        let bg = p.b * g_function(s, &p);
        let decay_ratio = moduli
            .iter()
            .zip(&data_bound)
            .map(|(m, d)| m.powf(alpha) / (decay_pref * d.min(bg)))
            .fold(0.0, f64::max);

        let t = u_time(s, p.b);
        let linf_v = v.sup_norm();
        samples.push(MonitorSample {
            s,
            t,
            l2: v.l2_norm(),
            linf_v,
            linf_u: (1.0 + p.b * t).powf(-(p.dim as f64) / 2.0) * linf_v,
            phi1,
            phi3,
            phi4,
            psi: phi1.max(phi3).max(phi4),
            f_sup: f.sup(),
            decay_ratio,
        });
    }

    let psi_nondecreasing = samples.windows(2).all(|w| w[1].psi >= w[0].psi);
    let psi_bounded = samples.iter().all(|m| m.psi.is_finite());
    let psi_growth = samples.last().unwrap().psi / samples[0].psi;
    let f_within_bound = samples.iter().all(|m| m.f_sup <= F0_BOUND);
    let decay_v0_holds = samples.iter().all(|m| m.decay_ratio <= 1.0);
    Ok(MonitorReport {
        label: format!(
            "truncated monitors: derivative orders <= {}; Phi_2 omitted",
            setup.max_order
        ),
        setup: setup.clone(),
        samples,
        psi_nondecreasing,
        psi_bounded,
        psi_growth,
        f_within_bound,
        f_bound: F0_BOUND,
        decay_v0_holds,
        compliant: psi_bounded && f_within_bound && decay_v0_holds,
    })
}

/// Everything one verification run produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub params: PhysParams,
    pub exponents: Option<ExponentSet>,
    pub strict_exponents: Option<ExponentSet>,
    pub sup_limit: Option<SupLimitReport>,
    pub l2_envelope: Option<L2EnvelopeReport>,
    pub profile: Option<ProfileMeta>,
    pub profile_error: Option<ProfileErrorReport>,
    pub monitors: MonitorReport,
}

impl Report {
    pub fn new(params: PhysParams, monitors: MonitorReport) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            params,
            exponents: None,
            strict_exponents: None,
            sup_limit: None,
            l2_envelope: None,
            profile: None,
            profile_error: None,
            monitors,
        }
    }
}

/// Header of `monitors.csv`, one row per snapshot.
///
/// `s` v-time, `t` u-time, `l2` = `‖v(s)‖_2 = ‖u(t)‖_2`, `linf_v`, `linf_u`,
/// `comp_sup` = `t‖u‖_∞^α`, `comp_l2` = `(1+bt)^{e}‖u‖_2` with the predicted
/// L² exponent `e`, then the monitors and `‖f‖_∞`.
pub const MONITOR_CSV_HEADER: &str = "s,t,l2,linf_v,linf_u,comp_sup,comp_l2,phi1,phi3,phi4,psi,f_sup,decay_ratio";

/// Writes `report.json` and `monitors.csv` into `dir`.
pub fn emit_report(dir: &Path, report: &Report) -> Result<(), DiagnosticsError> {
    if report.monitors.samples.is_empty() {
        return Err(DiagnosticsError::NoSnapshots);
    }
    fs::create_dir_all(dir).map_err(FieldError::from)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| DiagnosticsError::Serialize(e.to_string()))?;
    fs::write(dir.join("report.json"), json).map_err(FieldError::from)?;
    fs::write(dir.join("monitors.csv"), monitor_csv(report)).map_err(FieldError::from)?;
    Ok(())
}

pub fn monitor_csv(report: &Report) -> String {
    let p = &report.params;
    let e = l2_target_exponent(p, report.monitors.setup.n);
    let mut out = String::from(MONITOR_CSV_HEADER);
    out.push('\n');
    for m in &report.monitors.samples {
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            m.s,
            m.t,
            m.l2,
            m.linf_v,
            m.linf_u,
            m.t * m.linf_u.powf(p.alpha),
            (1.0 + p.b * m.t).powf(e) * m.l2,
            m.phi1,
            m.phi3,
            m.phi4,
            m.psi,
            m.f_sup,
            m.decay_ratio
        );
    }
    out
}

pub fn read_report(path: &Path) -> Result<Report, DiagnosticsError> {
    let text = fs::read_to_string(path).map_err(FieldError::from)?;
    serde_json::from_str(&text).map_err(|e| DiagnosticsError::Serialize(e.to_string()))
}
