use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::spectral::{DerivativeOptions, Spectral};
use super::{multi_indices, weighted_inf, weighted_sup_norm, Field, FieldError, Frame, Grid};

/// The smooth perturbation `φ` added to `c⟨x⟩^{-n}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bump {
    None,
    /// `a · exp(-|x - x₀|² / w²)`
    Gaussian {
        amplitude: Complex64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
    },
    /// A sum of `count` Gaussians with amplitudes, phases, widths and centers
    /// drawn from a seeded generator; the sum is rescaled so that
    /// `sup ⟨x⟩^n |φ| = fraction · |c|`.
    RandomGaussians {
        count: usize,
        fraction: f64,
        seed: u64,
    },
}

impl Bump {
    fn sample(&self, grid: &Grid, c_abs: f64, n: u32) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        match self {
            Bump::None => vec![zero; grid.len()],
            Bump::Gaussian {
                amplitude,
                width,
                center,
            } => (0..grid.len())
                .map(|i| {
                    let x = grid.point(i);
                    let r2: f64 = (0..grid.dim())
                        .map(|d| (x[d] - center.get(d).copied().unwrap_or(0.0)).powi(2))
                        .sum();
                    amplitude * (-r2 / (width * width)).exp()
                })
                .collect(),
            Bump::RandomGaussians { count, fraction, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let mut phi = vec![zero; grid.len()];
                for _ in 0..*count {
                    let amp = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
                    let width = rng.gen_range(0.5..2.0);
                    let center: Vec<f64> = (0..grid.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    for (i, p) in phi.iter_mut().enumerate() {
                        let x = grid.point(i);
                        let r2: f64 = (0..grid.dim()).map(|d| (x[d] - center[d]).powi(2)).sum();
                        *p += amp * (-r2 / (width * width)).exp();
                    }
                }
                let probe = Field {
                    grid: grid.clone(),
                    values: phi.clone(),
                    frame: Frame::V,
                    time: 0.0,
                };
                let sup = weighted_sup_norm(&probe, n as f64);
                if sup > 0.0 {
                    let s = fraction * c_abs / sup;
                    phi.iter_mut().for_each(|p| *p *= s);
                }
                phi
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub field: Field,
    pub n: u32,
    /// `inf ⟨x⟩^n |v₀|` on the grid.
    pub inf_weighted: f64,
    /// `sup_{|β| ≤ max_order} ‖⟨x⟩^n D^β v₀‖_∞`, the truncated X norm.
    pub x_norm: f64,
    /// `K = ‖v₀‖_X + (inf ⟨x⟩^n |v₀|)^{-1}` at truncated order.
    pub k_const: f64,
    pub max_order: usize,
    /// `max_boundary |v₀| / max |v₀|`.
    pub boundary_ratio: f64,
    /// `sup ⟨x⟩^n |φ|`. Below `|c|` the lower bound is guaranteed a priori;
    /// above it only the computed infimum certifies the data. NaN when the
    /// split into `c⟨x⟩^{-n} + φ` is unknown.
    pub bump_weighted_sup: f64,
}

impl InitialData {
    pub fn bump_dominated(&self, c_abs: f64) -> bool {
        self.bump_weighted_sup < c_abs
    }
}

/// Builds `v₀ = c⟨x⟩^{-n} + φ` at `t = 0` in the v-frame and evaluates the
/// data constant `K` at truncated derivative order.
///
/// Fails unless `inf ⟨x⟩^n |v₀| > 0` on the grid. `sup ⟨x⟩^n |φ| < |c|` is
/// sufficient for that but not required; it is reported in
/// [`InitialData::bump_weighted_sup`].
pub fn build_initial_data(
    grid: &Grid,
    c: Complex64,
    n: u32,
    bump: &Bump,
    opts: &DerivativeOptions,
) -> Result<InitialData, FieldError> {
    let c_abs = c.norm();
    if !(c_abs > 0.0 && c_abs.is_finite()) {
        return Err(FieldError::InitialData(format!(
            "amplitude c = {c} must be nonzero (the data must stay bounded below)"
        )));
    }
    let phi = bump.sample(grid, c_abs, n);
    let phi_field = Field {
        grid: grid.clone(),
        values: phi,
        frame: Frame::V,
        time: 0.0,
    };
    let phi_sup = weighted_sup_norm(&phi_field, n as f64);
    let values = phi_field
        .values
        .iter()
        .enumerate()
        .map(|(i, p)| c * (1.0 + grid.radius_sq(i)).powf(-(n as f64) / 2.0) + p)
        .collect();
    let field = Field {
        grid: grid.clone(),
        values,
        frame: Frame::V,
        time: 0.0,
    };

    let mut data = assess_initial_data(field, n, opts)?;
    data.bump_weighted_sup = phi_sup;
    Ok(data)
}

/// Checks `inf ⟨x⟩^n |v₀| > 0` for arbitrary v-frame data and evaluates `K`.
pub fn assess_initial_data(field: Field, n: u32, opts: &DerivativeOptions) -> Result<InitialData, FieldError> {
    if field.frame != Frame::V || field.time != 0.0 {
        return Err(FieldError::InitialData(format!(
            "initial data must be a v-frame field at t = 0, got {:?} at t = {}",
            field.frame, field.time
        )));
    }
    let grid = field.grid.clone();
    let inf = weighted_inf(&field, n as f64);
    if !(inf.value > 0.0) {
        return Err(FieldError::InitialData(format!(
            "inf ⟨x⟩^n |v₀| vanishes at x = {:?}",
            &inf.location[..grid.dim()]
        )));
    }

    let spectral = Spectral::new(&grid);
    let x_norm = multi_indices(grid.dim(), opts.max_order)
        .iter()
        .map(|beta| {
            let d = field.with_values(spectral.derivative_values(&field.values, beta));
            weighted_sup_norm(&d, n as f64)
        })
        .fold(0.0, f64::max);
    let peak = field.max_abs();
    let boundary_ratio = grid
        .boundary_indices()
        .into_iter()
        .fold(0.0f64, |m, i| m.max(field.values[i].norm()))
        / peak;

    Ok(InitialData {
        n,
        inf_weighted: inf.value,
        x_norm,
        k_const: x_norm + 1.0 / inf.value,
        max_order: opts.max_order,
        boundary_ratio,
        bump_weighted_sup: f64::NAN,
        field,
    })
}
