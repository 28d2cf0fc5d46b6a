//! Asymptotic profile: the correction `f`, its limit `f₀`, the limiting
//! amplitude `ω₀`, the evaluators `ψ`, `θ`, `z`, and the weighted profile
//! error.
//!
//! Along the v-frame flow the modulus satisfies
//!
//! ```text
//! |v₀|^α / |v|^α = 1 + f + κ|v₀|^α [(1-bt)^{-γ} - 1],   κ = 2α|Im λ| / (b(2-Nα)),
//! ```
//!
//! with `γ = (2-Nα)/2` and `f = -α|v₀|^α ∫₀ᵗ |v|^{-α-1} L`, `L = -Im(v̄Δv)/|v|`.
//! The first form gives [`extract_f_algebraic`], the second
//! [`extract_f_integral`]; their difference certifies the solver.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::{to_u_frame, v_time, ConformalError};
use crate::field::{read_snapshot, write_snapshot, Field, FieldError, Frame, Spectral};
use crate::params::PhysParams;
use crate::solver::{coupling_density_with, Trajectory};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error("expected a v-frame trajectory")]
    NotVFrame,
    #[error("trajectory must start at t = 0, starts at {0}")]
    NotFromZero(f64),
    #[error("|v| vanishes at t = {t}, grid index {index}")]
    VanishingModulus { t: f64, index: usize },
    #[error("f series is empty")]
    EmptySeries,
    #[error("f series ends at 1 - bt = {reached:.3e}, above the floor {floor:.3e}")]
    FloorNotReached { reached: f64, floor: f64 },
    #[error("1 + f₀ = {value} ≤ 0 at grid index {index} (b far too small or solver failure)")]
    NonPositiveDenominator { value: f64, index: usize },
    #[error("field grid does not match the co-moving profile grid")]
    GridMismatch,
    #[error(transparent)]
    Conformal(#[from] ConformalError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("profile metadata: {0}")]
    Metadata(String),
}

/// `G(t) = (1-bt)^γ / (1 - (1-bt)^γ)`; `+∞` at `t = 0`.
pub fn g_function(t: f64, params: &PhysParams) -> f64 {
    let r = (1.0 - params.b * t).powf(params.gamma());
    if r >= 1.0 {
        f64::INFINITY
    } else {
        r / (1.0 - r)
    }
}

/// Root of `bG(T_b) = 1` on `(0, 1/b)` by bisection to `1e-12`.
pub fn t_b(params: &PhysParams) -> f64 {
    let (mut lo, mut hi) = (0.0, params.horizon());
    // bG is decreasing: +∞ at 0, 0 at 1/b
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if params.b * g_function(mid, params) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `f(t, ·)` at one snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct FSnapshot {
    pub t: f64,
    pub f: Vec<f64>,
}

impl FSnapshot {
    pub fn sup(&self) -> f64 {
        self.f.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

fn check_v_traj(traj: &Trajectory) -> Result<&Field, AsymptoticsError> {
    if traj.frame != Frame::V {
        return Err(AsymptoticsError::NotVFrame);
    }
    let v0 = &traj.snapshots[0].field;
    if v0.time != 0.0 {
        return Err(AsymptoticsError::NotFromZero(v0.time));
    }
    Ok(v0)
}

fn nonvanishing(f: &Field) -> Result<(), AsymptoticsError> {
    match f.values.iter().position(|v| v.norm() == 0.0) {
        Some(index) => Err(AsymptoticsError::VanishingModulus { t: f.time, index }),
        None => Ok(()),
    }
}

fn bracket(params: &PhysParams, t: f64) -> f64 {
    (1.0 - params.b * t).powf(-params.gamma()) - 1.0
}

/// Pointwise inversion of the modulus identity at every snapshot.
pub fn extract_f_algebraic(traj: &Trajectory) -> Result<Vec<FSnapshot>, AsymptoticsError> {
    let v0 = check_v_traj(traj)?;
    let p = &traj.params;
    let (alpha, kappa) = (p.alpha, p.dissipation_coefficient());
    let v0a: Vec<f64> = v0.values.iter().map(|w| w.norm().powf(alpha)).collect();
    traj.snapshots
        .iter()
        .map(|s| {
            nonvanishing(&s.field)?;
            let br = bracket(p, s.field.time);
            let f = s
                .field
                .values
                .iter()
                .zip(&v0a)
                .map(|(v, &a0)| a0 / v.norm().powf(alpha) - 1.0 - kappa * a0 * br)
                .collect();
            Ok(FSnapshot { t: s.field.time, f })
        })
        .collect()
}

/// Points with `|v₀| ≥ RESOLVED_FRACTION · ‖v₀‖_∞` form the resolved region.
/// Outside it `Δv` is dominated by FFT roundoff and the periodic wrap, and
/// `|v|^{-α-1}` amplifies both.
pub const RESOLVED_FRACTION: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct IntegralExtraction {
    pub series: Vec<FSnapshot>,
    /// `‖f_integral - f_algebraic‖_∞` per snapshot over the whole grid.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// The same over the resolved region.
    pub resolved_residuals: Vec<f64>,
    pub max_resolved_residual: f64,
    pub resolved_points: usize,
    /// `"steps"` when the solver accumulated the integral, else `"snapshots"`.
    pub quadrature: &'static str,
}

/// `f = -α|v₀|^α ∫₀ᵗ |v|^{-α-1} L ds` by composite trapezoid, over the solver
/// steps when the trajectory recorded the coupling integral, else over the
/// snapshots.
pub fn extract_f_integral(traj: &Trajectory) -> Result<IntegralExtraction, AsymptoticsError> {
    let v0 = check_v_traj(traj)?;
    let alpha = traj.params.alpha;
    let scale: Vec<f64> = v0.values.iter().map(|w| -alpha * w.norm().powf(alpha)).collect();

    let from_steps = traj.snapshots.iter().all(|s| s.coupling.is_some());
    let integrals: Vec<Vec<f64>> = if from_steps {
        traj.snapshots.iter().map(|s| s.coupling.clone().unwrap()).collect()
    } else {
        let spectral = Spectral::new(&v0.grid);
        let mut acc = vec![0.0; v0.grid.len()];
        let mut out = Vec::with_capacity(traj.snapshots.len());
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for s in &traj.snapshots {
            nonvanishing(&s.field)?;
            let d = coupling_density_with(&spectral, &s.field.values, alpha);
            if let Some((tp, dp)) = &prev {
                let h = s.field.time - tp;
                acc.iter_mut()
                    .zip(dp)
                    .zip(&d)
                    .for_each(|((a, x), y)| *a += 0.5 * h * (x + y));
            }
            out.push(acc.clone());
            prev = Some((s.field.time, d));
        }
        out
    };

    let algebraic = extract_f_algebraic(traj)?;
    let cutoff = RESOLVED_FRACTION * v0.sup_norm();
    let resolved: Vec<bool> = v0.values.iter().map(|w| w.norm() >= cutoff).collect();
    let mut series = Vec::with_capacity(integrals.len());
    let mut residuals = Vec::with_capacity(integrals.len());
    let mut resolved_residuals = Vec::with_capacity(integrals.len());
    for (int, alg) in integrals.iter().zip(&algebraic) {
        let f: Vec<f64> = int.iter().zip(&scale).map(|(i, s)| s * i).collect();
        let (mut all, mut inner) = (0.0f64, 0.0f64);
        for ((a, b), &keep) in f.iter().zip(&alg.f).zip(&resolved) {
            let d = (a - b).abs();
            all = all.max(d);
            if keep {
                inner = inner.max(d);
            }
        }
        residuals.push(all);
        resolved_residuals.push(inner);
        series.push(FSnapshot { t: alg.t, f });
    }
    Ok(IntegralExtraction {
        max_residual: residuals.iter().copied().fold(0.0, f64::max),
        max_resolved_residual: resolved_residuals.iter().copied().fold(0.0, f64::max),
        resolved_residuals,
        resolved_points: resolved.iter().filter(|&&k| k).count(),
        series,
        residuals,
        quadrature: if from_steps { "steps" } else { "snapshots" },
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Require the series to reach `1 - bt ≤ floor`.
    pub floor: Option<f64>,
    /// Extrapolate `f₀` from the last two snapshots assuming
    /// `f(t) - f₀ ∝ (1-bt)^p` with this `p`.
    pub extrapolate_exponent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMeta {
    pub params: PhysParams,
    /// v-time of the snapshot `f₀` and the phase of `ω₀` were taken from.
    pub s_final: f64,
    pub extrapolated: bool,
    pub f0_sup: f64,
    /// `max |(|ω₀|^α (1+f₀) - |v₀|^α)| / |v₀|^α`.
    pub omega_identity_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ProfileData {
    pub f0: Vec<f64>,
    pub omega0: Field,
    pub v0: Field,
    pub meta: ProfileMeta,
}

pub const F0_BOUND: f64 = 0.25;

pub fn finalize_profile(
    traj: &Trajectory,
    f_series: &[FSnapshot],
    opts: &ProfileOptions,
) -> Result<ProfileData, AsymptoticsError> {
    let v0 = check_v_traj(traj)?.clone();
    let params = traj.params;
    let last = f_series.last().ok_or(AsymptoticsError::EmptySeries)?;
    let reached = 1.0 - params.b * last.t;
    if let Some(floor) = opts.floor {
        if reached > floor * (1.0 + 1e-9) {
            return Err(AsymptoticsError::FloorNotReached { reached, floor });
        }
    }
    let snap = traj
        .snapshots
        .iter()
        .rev()
        .find(|s| s.field.time == last.t)
        .ok_or(AsymptoticsError::EmptySeries)?;

    let (f0, extrapolated) = match (opts.extrapolate_exponent, f_series.len()) {
        (Some(p), n) if n >= 2 => {
            let prev = &f_series[n - 2];
            let r1 = (1.0 - params.b * prev.t).powf(p);
            let r2 = reached.powf(p);
            let f = prev
                .f
                .iter()
                .zip(&last.f)
                .map(|(a, b)| (b * r1 - a * r2) / (r1 - r2))
                .collect();
            (f, true)
        }
        _ => (last.f.clone(), false),
    };
    if let Some((index, &value)) = f0.iter().enumerate().find(|(_, x)| !(1.0 + **x > 0.0)) {
        return Err(AsymptoticsError::NonPositiveDenominator {
            value: 1.0 + value,
            index,
        });
    }

    let alpha = params.alpha;
    let mut warnings = Vec::new();
    let f0_sup = f0.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if f0_sup > F0_BOUND {
        warnings.push(format!(
            "‖f₀‖_∞ = {f0_sup:.4} exceeds {F0_BOUND}; b may be below the large-b regime"
        ));
    }

    let theta_f = theta_values(&params, &v0, &f0, snap.field.time);
    let omega_values: Vec<Complex64> = v0
        .values
        .iter()
        .zip(&f0)
        .zip(snap.field.values.iter().zip(&theta_f))
        .map(|((w0, f), (v, th))| {
            let modulus = (w0.norm().powf(alpha) / (1.0 + f)).powf(1.0 / alpha);
            Complex64::from_polar(modulus, v.arg() + th)
        })
        .collect();
    let omega0 = v0.with_values(omega_values);
    let omega_identity_residual = omega0
        .values
        .iter()
        .zip(&v0.values)
        .zip(&f0)
        .map(|((o, w), f)| {
            let a0 = w.norm().powf(alpha);
            (o.norm().powf(alpha) * (1.0 + f) - a0).abs() / a0
        })
        .fold(0.0, f64::max);

    Ok(ProfileData {
        f0,
        omega0,
        v0,
        meta: ProfileMeta {
            params,
            s_final: snap.field.time,
            extrapolated,
            f0_sup,
            omega_identity_residual,
            warnings,
        },
    })
}

fn psi_raw(params: &PhysParams, v0: &Field, f0: &[f64], s: f64) -> Vec<f64> {
    let (alpha, kappa, br) = (params.alpha, params.dissipation_coefficient(), bracket(params, s));
    v0.values
        .iter()
        .zip(f0)
        .map(|(w, f)| ((1.0 + f) / (1.0 + f + kappa * w.norm().powf(alpha) * br)).powf(1.0 / alpha))
        .collect()
}

fn theta_values(params: &PhysParams, v0: &Field, f0: &[f64], s: f64) -> Vec<f64> {
    let ratio = params.lambda.re / params.lambda.im;
    psi_raw(params, v0, f0, s).into_iter().map(|p| ratio * p.ln()).collect()
}

impl ProfileData {
    /// `ψ(s, ·)` on the v-grid.
    pub fn psi(&self, s: f64) -> Vec<f64> {
        psi_raw(&self.meta.params, &self.v0, &self.f0, s)
    }

    /// `θ(s, ·) = (Re λ / Im λ) log ψ(s, ·)`.
    pub fn theta(&self, s: f64) -> Vec<f64> {
        theta_values(&self.meta.params, &self.v0, &self.f0, s)
    }

    /// `ω₀ ψ(s) e^{-iθ(s)}`, the predicted v-frame solution.
    pub fn v_profile(&self, s: f64) -> Field {
        let values = self
            .omega0
            .values
            .iter()
            .zip(self.psi(s).iter().zip(self.theta(s)))
            .map(|(o, (p, th))| o * Complex64::from_polar(*p, -th))
            .collect();
        Field {
            time: s,
            ..self.omega0.with_values(values)
        }
    }

    /// `z(t, ·)` on the co-moving u-grid at u-time `t`.
    pub fn z_profile(&self, t: f64) -> Result<Field, AsymptoticsError> {
        Ok(to_u_frame(
            &self.v_profile(v_time(t, self.meta.params.b)),
            self.meta.params.b,
        )?)
    }

    /// `Z(s, ·) = (1-bs)^{-γ} |ω₀ ψ(s)|^α`; its sup tends to `b(2-Nα)/(2α|Im λ|)`.
    pub fn compensated_modulus(&self, s: f64) -> Vec<f64> {
        let p = &self.meta.params;
        let r = (1.0 - p.b * s).powf(-p.gamma());
        self.omega0
            .values
            .iter()
            .zip(self.psi(s))
            .map(|(o, ps)| r * (o.norm() * ps).powf(p.alpha))
            .collect()
    }

    /// Writes `f0`, `omega0`, `v0` snapshots and `profile.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<(), AsymptoticsError> {
        fs::create_dir_all(dir).map_err(FieldError::from)?;
        let f0 = self
            .v0
            .with_values(self.f0.iter().map(|&x| Complex64::new(x, 0.0)).collect());
        write_snapshot(&dir.join("f0"), &f0)?;
        write_snapshot(&dir.join("omega0"), &self.omega0)?;
        write_snapshot(&dir.join("v0"), &self.v0)?;
        let text = serde_json::to_string_pretty(&self.meta).map_err(|e| AsymptoticsError::Metadata(e.to_string()))?;
        fs::write(dir.join("profile.json"), text).map_err(FieldError::from)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, AsymptoticsError> {
        let text = fs::read_to_string(dir.join("profile.json")).map_err(FieldError::from)?;
        let meta: ProfileMeta = serde_json::from_str(&text).map_err(|e| AsymptoticsError::Metadata(e.to_string()))?;
        let f0 = read_snapshot(&dir.join("f0"))?.values.iter().map(|c| c.re).collect();
        Ok(Self {
            f0,
            omega0: read_snapshot(&dir.join("omega0"))?,
            v0: read_snapshot(&dir.join("v0"))?,
            meta,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetric {
    pub t: f64,
    /// `t^{1/α - N/2} ‖u - z‖_2`.
    pub e2: f64,
    /// `t^{1/α} ‖u - z‖_∞`.
    pub einf: f64,
}

/// Weighted profile error of a u-frame field on the co-moving grid. The
/// theorem's range is `t ≥ 1`.
pub fn error_metric(u: &Field, profile: &ProfileData) -> Result<ErrorMetric, AsymptoticsError> {
    let z = profile.z_profile(u.time)?;
    if !u.grid.matches(&z.grid, 1e-12) {
        return Err(AsymptoticsError::GridMismatch);
    }
    let diff = Field {
        grid: z.grid.clone(),
        values: u.values.iter().zip(&z.values).map(|(a, b)| a - b).collect(),
        frame: Frame::U,
        time: u.time,
    };
    let p = &profile.meta.params;
    let t = u.time;
    Ok(ErrorMetric {
        t,
        e2: t.powf(1.0 / p.alpha - p.dim as f64 / 2.0) * diff.l2_norm(),
        einf: t.powf(1.0 / p.alpha) * diff.sup_norm(),
    })
}

/// [`error_metric`] at every snapshot with u-time `≥ t_min`.
pub fn error_series(
    traj: &Trajectory,
    profile: &ProfileData,
    t_min: f64,
) -> Result<Vec<ErrorMetric>, AsymptoticsError> {
    let b = traj.params.b;
    traj.snapshots
        .iter()
        .filter(|s| crate::conformal::u_time(s.field.time, b) >= t_min)
        .map(|s| error_metric(&to_u_frame(&s.field, b)?, profile))
        .collect()
}
