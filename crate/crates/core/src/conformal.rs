//! The pseudo-conformal transformation between the u-frame and the v-frame.
//!
//! u-frame fields live on the co-moving grid `x = (1+bt) y`, where `y` are the
//! v-grid coordinates, so both directions are pointwise and interpolation
//! free.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{Field, FourierInterpolator, Frame, Grid};
use crate::solver::Trajectory;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("expected a {expected:?}-frame field, got {got:?}")]
    WrongFrame { expected: Frame, got: Frame },
    #[error("v-time {s} lies outside [0, 1/b = {horizon})")]
    OutsideHorizon { s: f64, horizon: f64 },
    #[error("u-time {t} must be nonnegative")]
    NegativeTime { t: f64 },
    #[error("u-grid is not the (1+bt) = {scale} scaling of the reference grid")]
    GridMismatch { scale: f64 },
}

/// `t = s/(1-bs)`.
pub fn u_time(s: f64, b: f64) -> f64 {
    s / (1.0 - b * s)
}

/// `s = t/(1+bt)`.
pub fn v_time(t: f64, b: f64) -> f64 {
    t / (1.0 + b * t)
}

/// Maps `v(s)` to `u(t)`, `t = s/(1-bs)`, on the grid scaled by `1+bt`.
pub fn to_u_frame(v: &Field, b: f64) -> Result<Field, ConformalError> {
    if v.frame != Frame::V {
        return Err(ConformalError::WrongFrame {
            expected: Frame::V,
            got: v.frame,
        });
    }
    let s = v.time;
    if !(s >= 0.0 && b * s < 1.0) {
        return Err(ConformalError::OutsideHorizon { s, horizon: 1.0 / b });
    }
    let t = u_time(s, b);
    let scale = 1.0 + b * t;
    let grid = v.grid.scaled(scale);
    let amp = scale.powf(-(grid.dim() as f64) / 2.0);
    let values = v
        .values
        .iter()
        .enumerate()
        .map(|(i, w)| w * Complex64::from_polar(amp, b * grid.radius_sq(i) / (4.0 * scale)))
        .collect();
    Ok(Field {
        grid,
        values,
        frame: Frame::U,
        time: t,
    })
}

/// Inverse of [`to_u_frame`]. With `reference`, the recovered v-grid must
/// match it to relative `1e-12`.
pub fn to_v_frame(u: &Field, b: f64, reference: Option<&Grid>) -> Result<Field, ConformalError> {
    if u.frame != Frame::U {
        return Err(ConformalError::WrongFrame {
            expected: Frame::U,
            got: u.frame,
        });
    }
    let t = u.time;
    if !(t >= 0.0) {
        return Err(ConformalError::NegativeTime { t });
    }
    let scale = 1.0 + b * t;
    let grid = u.grid.scaled(1.0 / scale);
    if let Some(r) = reference {
        if !grid.matches(r, 1e-12) {
            return Err(ConformalError::GridMismatch { scale });
        }
    }
    let amp = scale.powf(grid.dim() as f64 / 2.0);
    let values = u
        .values
        .iter()
        .enumerate()
        .map(|(i, w)| w * Complex64::from_polar(amp, -b * u.grid.radius_sq(i) / (4.0 * scale)))
        .collect();
    Ok(Field {
        grid: reference.cloned().unwrap_or(grid),
        values,
        frame: Frame::V,
        time: v_time(t, b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeRecord {
    /// v-time.
    pub s: f64,
    /// u-time.
    pub t: f64,
    pub l2: f64,
    pub linf: f64,
}

/// u-frame norm series of a v-frame trajectory without building u fields:
/// `‖u(t)‖_2 = ‖v(s)‖_2` and `‖u(t)‖_∞ = (1+bt)^{-N/2} ‖v(s)‖_∞`.
pub fn norm_bridge(traj: &Trajectory) -> Result<Vec<BridgeRecord>, ConformalError> {
    if traj.frame != Frame::V {
        return Err(ConformalError::WrongFrame {
            expected: Frame::V,
            got: traj.frame,
        });
    }
    let b = traj.params.b;
    let half_dim = traj.params.dim as f64 / 2.0;
    Ok(traj
        .steps
        .iter()
        .map(|r| {
            let t = u_time(r.t, b);
            BridgeRecord {
                s: r.t,
                t,
                l2: r.l2,
                linf: (1.0 + b * t).powf(-half_dim) * r.linf,
            }
        })
        .collect())
}

/// Samples `f` at the points of `target` by trigonometric interpolation.
/// Target points outside the source box get `0`.
pub fn resample(f: &Field, target: &Grid) -> Field {
    let interp = FourierInterpolator::new(f);
    let axes = f.grid.axes();
    let values = (0..target.len())
        .map(|i| {
            let x = target.point(i);
            let inside = axes.iter().enumerate().all(|(d, a)| x[d].abs() <= a.half_extent);
            if inside {
                interp.eval(x)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    Field {
        grid: target.clone(),
        values,
        frame: f.frame,
        time: f.time,
    }
}
