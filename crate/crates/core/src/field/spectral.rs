use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, FieldError, Grid};

/// Guards applied by the checked derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeOptions {
    pub max_order: usize,
    /// Largest admissible ratio `max_boundary |f| / max |f|`.
    pub boundary_tol: f64,
}

impl Default for DerivativeOptions {
    fn default() -> Self {
        Self {
            max_order: 4,
            boundary_tol: 1e-8,
        }
    }
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    points: usize,
}

/// FFT plans and wavenumber tables for one grid.
pub struct Spectral {
    grid: Grid,
    axes: Vec<AxisPlan>,
    k_sq: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

fn wavenumbers(points: usize, half_extent: f64) -> Vec<f64> {
    let dk = PI / half_extent;
    (0..points)
        .map(|i| {
            let k = if i < points / 2 {
                i as f64
            } else {
                i as f64 - points as f64
            };
            k * dk
        })
        .collect()
}

impl Spectral {
    pub fn new(grid: &Grid) -> Self {
        let mut planner = FftPlanner::new();
        let axes: Vec<AxisPlan> = grid
            .axes()
            .iter()
            .map(|a| AxisPlan {
                forward: planner.plan_fft_forward(a.points),
                inverse: planner.plan_fft_inverse(a.points),
                wavenumbers: wavenumbers(a.points, a.half_extent),
                points: a.points,
            })
            .collect();
        let k_sq = (0..grid.len())
            .map(|i| {
                let ij = grid.unravel(i);
                axes.iter().enumerate().map(|(d, a)| a.wavenumbers[ij[d]].powi(2)).sum()
            })
            .collect();
        Self {
            grid: grid.clone(),
            axes,
            k_sq,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn wavenumbers(&self, axis: usize) -> &[f64] {
        &self.axes[axis].wavenumbers
    }

    /// `|ξ|²` per flat spectral index.
    pub fn k_sq(&self) -> &[f64] {
        &self.k_sq
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let plan = |a: &AxisPlan| {
            if inverse {
                a.inverse.clone()
            } else {
                a.forward.clone()
            }
        };
        match self.axes.len() {
            1 => plan(&self.axes[0]).process(data),
            _ => {
                let (rows, cols) = (self.axes[0].points, self.axes[1].points);
                plan(&self.axes[1]).process(data);
                let mut column = vec![Complex64::new(0.0, 0.0); rows];
                let fft = plan(&self.axes[0]);
                for c in 0..cols {
                    for r in 0..rows {
                        column[r] = data[r * cols + c];
                    }
                    fft.process(&mut column);
                    for r in 0..rows {
                        data[r * cols + c] = column[r];
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// Inverse DFT in place, normalized so that `inverse ∘ forward = id`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Multiplies the spectrum of `values` by `symbol(flat spectral index)`.
    pub fn apply_multiplier(&self, values: &mut [Complex64], symbol: impl Fn(usize) -> Complex64) {
        self.forward(values);
        for (i, v) in values.iter_mut().enumerate() {
            *v *= symbol(i);
        }
        self.inverse(values);
    }

    /// Fourier-collocation `D^β` without the order and boundary guards.
    pub fn derivative_values(&self, values: &[Complex64], beta: &[usize]) -> Vec<Complex64> {
        let mut out = values.to_vec();
        if beta.iter().all(|&b| b == 0) {
            return out;
        }
        let symbols: Vec<Vec<Complex64>> = self
            .axes
            .iter()
            .zip(beta)
            .map(|(a, &order)| {
                a.wavenumbers
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| {
                        // the Nyquist mode has no consistent odd derivative
                        if order % 2 == 1 && i == a.points / 2 {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new(0.0, k).powu(order as u32)
                        }
                    })
                    .collect()
            })
            .collect();
        let grid = &self.grid;
        self.apply_multiplier(&mut out, |i| {
            let ij = grid.unravel(i);
            symbols.iter().enumerate().map(|(d, s)| s[ij[d]]).product()
        });
        out
    }

    pub fn laplacian_values(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = values.to_vec();
        let k_sq = &self.k_sq;
        self.apply_multiplier(&mut out, |i| Complex64::new(-k_sq[i], 0.0));
        out
    }

    /// L² norm computed on the spectral side (Parseval).
    pub fn spectral_l2(&self, values: &[Complex64]) -> f64 {
        let mut hat = values.to_vec();
        self.forward(&mut hat);
        let s: f64 = hat.iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.cell_volume() / values.len() as f64).sqrt()
    }

    /// Checked `D^β f`: rejects orders above `opts.max_order` and fields that
    /// have not decayed at the box boundary.
    pub fn derivative(&self, f: &Field, beta: &[usize], opts: &DerivativeOptions) -> Result<Field, FieldError> {
        if beta.len() != self.grid.dim() {
            return Err(FieldError::IndexDimension {
                index: beta.to_vec(),
                len: beta.len(),
                dim: self.grid.dim(),
            });
        }
        let order: usize = beta.iter().sum();
        if order > opts.max_order {
            return Err(FieldError::OrderTooHigh {
                order,
                max: opts.max_order,
            });
        }
        check_boundary_decay(f, opts.boundary_tol)?;
        Ok(f.with_values(self.derivative_values(&f.values, beta)))
    }
}

/// Fails when `max_boundary |f| ≥ tol · max |f|`.
pub(crate) fn check_boundary_decay(f: &Field, tol: f64) -> Result<(), FieldError> {
    let peak = f.max_abs();
    if peak == 0.0 {
        return Ok(());
    }
    let edge = f
        .grid
        .boundary_indices()
        .into_iter()
        .fold(0.0f64, |m, i| m.max(f.values[i].norm()));
    let ratio = edge / peak;
    if ratio >= tol {
        return Err(FieldError::BoundaryNotDecayed { ratio, tol });
    }
    Ok(())
}

/// Evaluates the trigonometric interpolant of a periodic field at arbitrary
/// points. Cost is one full spectral sum per point, so this is meant for
/// verification, not for time stepping.
pub struct FourierInterpolator {
    grid: Grid,
    coeffs: Vec<Complex64>,
    wavenumbers: Vec<Vec<f64>>,
}

impl FourierInterpolator {
    pub fn new(f: &Field) -> Self {
        let spectral = Spectral::new(&f.grid);
        let mut coeffs = f.values.clone();
        spectral.forward(&mut coeffs);
        let scale = 1.0 / coeffs.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        let wavenumbers = (0..f.grid.dim()).map(|d| spectral.wavenumbers(d).to_vec()).collect();
        Self {
            grid: f.grid.clone(),
            coeffs,
            wavenumbers,
        }
    }

    fn basis(&self, axis: usize, x: f64) -> Vec<Complex64> {
        let a = self.grid.axes()[axis];
        let shifted = x + a.half_extent;
        self.wavenumbers[axis]
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i == a.points / 2 {
                    // split the Nyquist mode symmetrically to keep real data real
                    Complex64::new((k * shifted).cos(), 0.0)
                } else {
                    Complex64::from_polar(1.0, k * shifted)
                }
            })
            .collect()
    }

    pub fn eval(&self, x: [f64; 2]) -> Complex64 {
        match self.grid.dim() {
            1 => {
                let e = self.basis(0, x[0]);
                self.coeffs.iter().zip(&e).map(|(c, e)| c * e).sum()
            }
            _ => {
                let e0 = self.basis(0, x[0]);
                let e1 = self.basis(1, x[1]);
                let cols = e1.len();
                e0.iter()
                    .enumerate()
                    .map(|(r, a)| {
                        let row: Complex64 = self.coeffs[r * cols..(r + 1) * cols]
                            .iter()
                            .zip(&e1)
                            .map(|(c, e)| c * e)
                            .sum();
                        a * row
                    })
                    .sum()
            }
        }
    }
}
