//! Strang splitting for both frames.
//!
//! One step is `L(τ/2) ∘ N(τ) ∘ L(τ/2)` where `L` is the free Schrödinger
//! group, applied as a Fourier multiplier, and `N` is the pointwise flow of
//! `i∂ₜw = λ c(t)|w|^α w`, which is solved in closed form. In the u-frame
//! `c ≡ 1`; in the v-frame `c(t) = (1-bt)^{-(4-Nα)/2}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{weighted_sup_norm, Field, FieldError, Frame, Spectral};
use crate::params::PhysParams;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("initial field is in the {got:?} frame, config asks for {expected:?}")]
    FrameMismatch { expected: Frame, got: Frame },
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("substep [{t}, {t} + {tau}] reaches the conformal horizon 1/b = {horizon}")]
    HorizonReached { t: f64, tau: f64, horizon: f64 },
    #[error("step size {dt:.3e} at t = {t} fell below dt_min = {dt_min:.3e} (unresolved singularity)")]
    StepUnderflow { t: f64, dt: f64, dt_min: f64 },
    #[error("non-finite values at t = {t} (resolution too low)")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// When to keep full field copies. The initial and final states are always kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotSchedule {
    Times {
        times: Vec<f64>,
    },
    EverySteps {
        every: usize,
    },
    /// v-frame: `1 - bt = 10^{-j/per_decade}` for `j = 1, 2, …`.
    GeometricHorizon {
        per_decade: u32,
    },
    /// `t = t_first · 10^{j/per_decade}` for `j = 0, 1, …`.
    GeometricTime {
        t_first: f64,
        per_decade: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub frame: Frame,
    pub dt0: f64,
    /// v-frame steps are `min(dt0, c_adapt (1-bt)/b)`.
    pub c_adapt: f64,
    pub dt_min: f64,
    pub t_end: f64,
    pub schedule: SnapshotSchedule,
    /// Accumulate `∫|v|^{-α-1} L ds` with `L = -Im(v̄Δv)/|v|` over the steps.
    #[serde(default)]
    pub record_coupling: bool,
    /// `false` drops the dispersive substeps (pure pointwise flow).
    #[serde(default = "default_true")]
    pub linear_enabled: bool,
    /// Weight power of the per-step `sup ⟨x⟩^p |v|` record.
    #[serde(default)]
    pub norm_weight: f64,
}

fn default_true() -> bool {
    true
}

impl SolverConfig {
    /// A v-frame run stopping where `1 - bt` reaches `floor`.
    pub fn v_frame_to_floor(b: f64, floor: f64, dt0: f64, c_adapt: f64) -> Self {
        Self {
            frame: Frame::V,
            dt0,
            c_adapt,
            dt_min: 1e-14,
            t_end: (1.0 - floor) / b,
            schedule: SnapshotSchedule::GeometricHorizon { per_decade: 10 },
            record_coupling: false,
            linear_enabled: true,
            norm_weight: 0.0,
        }
    }

    pub fn u_frame(t_end: f64, dt0: f64) -> Self {
        Self {
            frame: Frame::U,
            dt0,
            c_adapt: 0.05,
            dt_min: 1e-14,
            t_end,
            schedule: SnapshotSchedule::EverySteps { every: 1 },
            record_coupling: false,
            linear_enabled: true,
            norm_weight: 0.0,
        }
    }

    pub fn validate(&self, params: &PhysParams) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.dt0 > 0.0 && self.dt0.is_finite()) {
            return bad(format!("dt0 = {} must be positive", self.dt0));
        }
        if !(self.dt_min > 0.0) {
            return bad(format!("dt_min = {} must be positive", self.dt_min));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end = {} must be positive", self.t_end));
        }
        if self.frame == Frame::V {
            if !(params.b > 0.0) {
                return bad(format!("v-frame runs need b > 0, got {}", params.b));
            }
            if self.t_end >= params.horizon() {
                return bad(format!(
                    "v-frame t_end = {} must lie below the horizon 1/b = {}",
                    self.t_end,
                    params.horizon()
                ));
            }
            if !(self.c_adapt > 0.0) {
                return bad(format!("c_adapt = {} must be positive", self.c_adapt));
            }
        }
        match &self.schedule {
            SnapshotSchedule::EverySteps { every: 0 } => bad("snapshot interval must be at least 1 step".into()),
            SnapshotSchedule::GeometricHorizon { per_decade: 0 }
            | SnapshotSchedule::GeometricTime { per_decade: 0, .. } => bad("per_decade must be at least 1".into()),
            SnapshotSchedule::GeometricHorizon { .. } if self.frame != Frame::V => {
                bad("geometric_horizon schedule needs the v-frame".into())
            }
            SnapshotSchedule::GeometricTime { t_first, .. } if !(*t_first > 0.0) => {
                bad("t_first must be positive".into())
            }
            _ => Ok(()),
        }
    }

    /// Snapshot times strictly inside `(0, t_end)`, increasing.
    fn scheduled_times(&self, params: &PhysParams) -> Vec<f64> {
        let mut times: Vec<f64> = match &self.schedule {
            SnapshotSchedule::Times { times } => times.clone(),
            SnapshotSchedule::EverySteps { .. } => Vec::new(),
            SnapshotSchedule::GeometricHorizon { per_decade } => {
                let tail = 1.0 - params.b * self.t_end;
                (1..)
                    .map(|j| 10f64.powf(-(j as f64) / *per_decade as f64))
                    .take_while(|&r| r > tail * (1.0 + 1e-9))
                    .map(|r| (1.0 - r) / params.b)
                    .collect()
            }
            SnapshotSchedule::GeometricTime { t_first, per_decade } => (0..)
                .map(|j| t_first * 10f64.powf(j as f64 / *per_decade as f64))
                .take_while(|&t| t < self.t_end * (1.0 - 1e-12))
                .collect(),
        };
        times.retain(|&t| t > 0.0 && t < self.t_end);
        times.sort_by(f64::total_cmp);
        times.dedup();
        times
    }
}

/// `∫_t^{t+τ} (1-bs)^{-(4-Nα)/2} ds`, `τ` when `b = 0`.
pub fn coefficient_integral(params: &PhysParams, t: f64, tau: f64) -> Result<f64, SolverError> {
    let b = params.b;
    if b == 0.0 {
        return Ok(tau);
    }
    let head = 1.0 - b * t;
    if !(head > 0.0) || !(1.0 - b * (t + tau) > 0.0) {
        return Err(SolverError::HorizonReached {
            t,
            tau,
            horizon: 1.0 / b,
        });
    }
    let gamma = params.gamma();
    // (1-bt)^{-γ}/(bγ) · [(1 - bτ/(1-bt))^{-γ} - 1], written to avoid cancellation for small τ
    Ok(head.powf(-gamma) / (b * gamma) * (-gamma * (-b * tau / head).ln_1p()).exp_m1())
}

/// Exact pointwise flow of `i∂ₜw = λ c(t)|w|^α w` over an interval with
/// `∫c = integral`.
pub fn nonlinear_update(w: Complex64, lambda: Complex64, alpha: f64, integral: f64) -> Complex64 {
    let rho = w.norm();
    if rho == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let ra = rho.powf(alpha);
    // s = -α Im λ > 0 in the dissipative case; q = s |w|^α ∫c
    let s = -alpha * lambda.im;
    let (scale, phase) = if s == 0.0 {
        (1.0, -lambda.re * ra * integral)
    } else {
        let l = (s * ra * integral).ln_1p();
        ((-l / alpha).exp(), -lambda.re / s * l)
    };
    w * scale * Complex64::from_polar(1.0, phase)
}

/// Free Schrödinger group `e^{iτΔ}` applied spectrally.
pub fn linear_substep(f: &Field, tau: f64) -> Field {
    let spectral = Spectral::new(&f.grid);
    let mut values = f.values.clone();
    apply_linear(&spectral, &mut values, tau);
    Field {
        time: f.time + tau,
        ..f.with_values(values)
    }
}

fn apply_linear(spectral: &Spectral, values: &mut [Complex64], tau: f64) {
    if tau == 0.0 {
        return;
    }
    let k_sq = spectral.k_sq();
    spectral.apply_multiplier(values, |i| Complex64::from_polar(1.0, -tau * k_sq[i]));
}

pub fn nonlinear_substep_u(f: &Field, tau: f64, lambda: Complex64, alpha: f64) -> Field {
    let values = f
        .values
        .iter()
        .map(|&w| nonlinear_update(w, lambda, alpha, tau))
        .collect();
    Field {
        time: f.time + tau,
        ..f.with_values(values)
    }
}

/// Pointwise flow of the v-frame nonlinearity over `[t, t + τ]`.
pub fn nonlinear_substep_v(f: &Field, t: f64, tau: f64, params: &PhysParams) -> Result<Field, SolverError> {
    let integral = coefficient_integral(params, t, tau)?;
    let values = f
        .values
        .iter()
        .map(|&w| nonlinear_update(w, params.lambda, params.alpha, integral))
        .collect();
    Ok(Field {
        time: t + tau,
        ..f.with_values(values)
    })
}

/// Reusable stepping context: FFT plans plus the physics.
pub struct Stepper {
    spectral: Spectral,
    params: PhysParams,
    frame: Frame,
    linear_enabled: bool,
}

impl Stepper {
    pub fn new(grid: &crate::field::Grid, params: PhysParams, frame: Frame) -> Self {
        Self {
            spectral: Spectral::new(grid),
            params,
            frame,
            linear_enabled: true,
        }
    }

    pub fn with_linear(mut self, enabled: bool) -> Self {
        self.linear_enabled = enabled;
        self
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// One Strang step from `t` to `t + dt`, in place.
    pub fn step(&self, values: &mut [Complex64], t: f64, dt: f64) -> Result<(), SolverError> {
        let integral = match self.frame {
            Frame::U => dt,
            Frame::V => coefficient_integral(&self.params, t, dt)?,
        };
        if self.linear_enabled {
            apply_linear(&self.spectral, values, dt / 2.0);
        }
        let (lambda, alpha) = (self.params.lambda, self.params.alpha);
        if lambda != Complex64::new(0.0, 0.0) {
            values
                .iter_mut()
                .for_each(|w| *w = nonlinear_update(*w, lambda, alpha, integral));
        }
        if self.linear_enabled {
            apply_linear(&self.spectral, values, dt / 2.0);
        }
        Ok(())
    }

    /// `|v|^{-α-1} L` with `L = -Im(v̄Δv)/|v|`, zero where `v = 0`.
    pub fn coupling_density(&self, values: &[Complex64]) -> Vec<f64> {
        coupling_density_with(&self.spectral, values, self.params.alpha)
    }
}

pub(crate) fn coupling_density_with(spectral: &Spectral, values: &[Complex64], alpha: f64) -> Vec<f64> {
    let lap = spectral.laplacian_values(values);
    values
        .iter()
        .zip(&lap)
        .map(|(v, d)| {
            let m = v.norm();
            if m == 0.0 {
                0.0
            } else {
                -(v.conj() * d).im / m * m.powf(-alpha - 1.0)
            }
        })
        .collect()
}

pub fn strang_step(f: &Field, t: f64, dt: f64, params: &PhysParams) -> Result<Field, SolverError> {
    let stepper = Stepper::new(&f.grid, *params, f.frame);
    let mut values = f.values.clone();
    stepper.step(&mut values, t, dt)?;
    Ok(Field {
        time: t + dt,
        ..f.with_values(values)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub l2: f64,
    pub linf: f64,
    /// `sup ⟨x⟩^p |v|` with `p = norm_weight`.
    pub weighted_sup: f64,
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: Field,
    /// Index into [`Trajectory::steps`] of the record at this time.
    pub step: usize,
    /// `∫₀ᵗ |v|^{-α-1} L ds`, when recorded.
    pub coupling: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub frame: Frame,
    pub params: PhysParams,
    pub snapshots: Vec<Snapshot>,
    /// One record per accepted step, the first at `t = 0` with `dt = 0`.
    pub steps: Vec<StepRecord>,
    /// Largest relative L² growth over a single step.
    pub max_mass_increase: f64,
}

/// Slack on the relative per-step L² growth for the mass-dissipation check.
pub const MASS_SLACK: f64 = 1e-12;

impl Trajectory {
    pub fn mass_monotone(&self) -> bool {
        self.max_mass_increase <= MASS_SLACK
    }

    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots
            .last()
            .expect("trajectory has at least the initial snapshot")
    }

    pub fn snapshot_times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.field.time).collect()
    }
}

fn record(f_vals: &[Complex64], field: &Field, t: f64, dt: f64, weight: f64) -> StepRecord {
    let tmp = Field {
        values: f_vals.to_vec(),
        time: t,
        ..field.clone()
    };
    StepRecord {
        t,
        dt,
        l2: tmp.l2_norm(),
        linf: tmp.sup_norm(),
        weighted_sup: if weight == 0.0 {
            tmp.sup_norm()
        } else {
            weighted_sup_norm(&tmp, weight)
        },
    }
}

/// Integrates from `initial.time` to `cfg.t_end`.
///
/// Admissibility of `params` is left to the caller so that oracle runs with
/// `λ = 0` remain possible.
pub fn run(initial: &Field, cfg: &SolverConfig, params: &PhysParams) -> Result<Trajectory, SolverError> {
    if initial.frame != cfg.frame {
        return Err(SolverError::FrameMismatch {
            expected: cfg.frame,
            got: initial.frame,
        });
    }
    cfg.validate(params)?;
    if !(initial.time >= 0.0 && initial.time < cfg.t_end) {
        return Err(SolverError::InvalidConfig(format!(
            "initial time {} must lie in [0, t_end = {})",
            initial.time, cfg.t_end
        )));
    }
    if !initial.is_finite() {
        return Err(SolverError::NonFinite { t: initial.time });
    }

    let stepper = Stepper::new(&initial.grid, *params, cfg.frame).with_linear(cfg.linear_enabled);
    let targets: Vec<f64> = cfg
        .scheduled_times(params)
        .into_iter()
        .filter(|&t| t > initial.time)
        .collect();
    let every = match cfg.schedule {
        SnapshotSchedule::EverySteps { every } => Some(every),
        _ => None,
    };

    let mut t = initial.time;
    let mut values = initial.values.clone();
    let mut steps = vec![record(&values, initial, t, 0.0, cfg.norm_weight)];
    let mut coupling = cfg.record_coupling.then(|| vec![0.0; values.len()]);
    let mut density = cfg.record_coupling.then(|| stepper.coupling_density(&values));
    let mut snapshots = vec![Snapshot {
        field: initial.clone(),
        step: 0,
        coupling: coupling.clone(),
    }];
    let mut next_target = 0;
    let mut max_mass_increase = f64::NEG_INFINITY;

    while t < cfg.t_end {
        let natural = match cfg.frame {
            Frame::U => cfg.dt0,
            Frame::V => cfg.dt0.min(cfg.c_adapt * (1.0 - params.b * t) / params.b),
        };
        if natural < cfg.dt_min {
            return Err(SolverError::StepUnderflow {
                t,
                dt: natural,
                dt_min: cfg.dt_min,
            });
        }
        let stop = targets.get(next_target).copied().unwrap_or(cfg.t_end);
        let (dt, hits_stop) = if t + natural >= stop * (1.0 - 1e-14) {
            (stop - t, true)
        } else {
            (natural, false)
        };

        stepper.step(&mut values, t, dt)?;
        t = if hits_stop { stop } else { t + dt };
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(SolverError::NonFinite { t });
        }

        let rec = record(&values, initial, t, dt, cfg.norm_weight);
        let prev = steps.last().expect("initial record").l2;
        if prev > 0.0 {
            max_mass_increase = max_mass_increase.max((rec.l2 - prev) / prev);
        }
        steps.push(rec);

        if let (Some(acc), Some(d_prev)) = (coupling.as_mut(), density.as_mut()) {
            let d_new = stepper.coupling_density(&values);
            for ((a, p), n) in acc.iter_mut().zip(d_prev.iter()).zip(&d_new) {
                *a += 0.5 * dt * (p + n);
            }
            *d_prev = d_new;
        }

        let scheduled = hits_stop && next_target < targets.len();
        if scheduled {
            next_target += 1;
        }
        let periodic = every.is_some_and(|k| (steps.len() - 1) % k == 0);
        let last = t >= cfg.t_end;
        if scheduled || periodic || last {
            snapshots.push(Snapshot {
                field: Field {
                    values: values.clone(),
                    time: t,
                    ..initial.clone()
                },
                step: steps.len() - 1,
                coupling: coupling.clone(),
            });
        }
    }

    Ok(Trajectory {
        frame: cfg.frame,
        params: *params,
        snapshots,
        steps,
        max_mass_increase: max_mass_increase.max(0.0),
    })
}
