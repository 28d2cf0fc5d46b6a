//! Uniform periodic grids and complex fields on them.
//!
//! A [`Grid`] samples the box `[-L₀, L₀) × … × [-L_{N-1}, L_{N-1})` with an even
//! number of points per axis. Values are stored row-major, the last axis
//! contiguous.

mod initial;
mod snapshot;
mod spectral;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use initial::{assess_initial_data, build_initial_data, Bump, InitialData};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotDescriptor, SNAPSHOT_FORMAT_VERSION};
pub use spectral::{DerivativeOptions, FourierInterpolator, Spectral};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid supports N = 1 or 2, got N = {0}")]
    UnsupportedDimension(usize),
    #[error("axis {axis}: point count {points} must be a positive even integer")]
    OddPointCount { axis: usize, points: usize },
    #[error("axis {axis}: half extent {half_extent} must be positive")]
    BadExtent { axis: usize, half_extent: f64 },
    #[error("value count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("multi-index {index:?} has length {len}, grid dimension is {dim}")]
    IndexDimension { index: Vec<usize>, len: usize, dim: usize },
    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("field is not decayed at the boundary: boundary/max ratio {ratio:.3e} ≥ {tol:.1e} (domain too small)")]
    BoundaryNotDecayed { ratio: f64, tol: f64 },
    #[error("initial data: {0}")]
    InitialData(String),
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which equation a field solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Physical variables, `i∂ₜu + Δu = λ|u|^α u`.
    U,
    /// Pseudo-conformal variables, `i∂ₜv + Δv = λ(1-bt)^{-(4-Nα)/2}|v|^α v`.
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub half_extent: f64,
    pub points: usize,
}

impl Axis {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_extent / self.points as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_extent + i as f64 * self.spacing()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self, FieldError> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(FieldError::UnsupportedDimension(axes.len()));
        }
        for (axis, a) in axes.iter().enumerate() {
            if a.points == 0 || a.points % 2 != 0 {
                return Err(FieldError::OddPointCount { axis, points: a.points });
            }
            if !(a.half_extent > 0.0 && a.half_extent.is_finite()) {
                return Err(FieldError::BadExtent {
                    axis,
                    half_extent: a.half_extent,
                });
            }
        }
        Ok(Self { axes })
    }

    pub fn line(half_extent: f64, points: usize) -> Result<Self, FieldError> {
        Self::new(vec![Axis { half_extent, points }])
    }

    /// The same extent and resolution on every axis.
    pub fn cube(dim: usize, half_extent: f64, points: usize) -> Result<Self, FieldError> {
        Self::new(vec![Axis { half_extent, points }; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element `h₀ ⋯ h_{N-1}` of the rectangle rule.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }

    /// Grid stretched by `factor` about the origin (same point counts).
    pub fn scaled(&self, factor: f64) -> Grid {
        Grid {
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    half_extent: a.half_extent * factor,
                    points: a.points,
                })
                .collect(),
        }
    }

    /// Whether `other` has the same shape and extents up to relative `tol`.
    pub fn matches(&self, other: &Grid, tol: f64) -> bool {
        self.dim() == other.dim()
            && self.axes.iter().zip(&other.axes).all(|(a, b)| {
                a.points == b.points && (a.half_extent - b.half_extent).abs() <= tol * a.half_extent.max(b.half_extent)
            })
    }

    /// Per-axis indices of the flat index `idx`.
    pub fn unravel(&self, idx: usize) -> [usize; 2] {
        match self.axes.len() {
            1 => [idx, 0],
            _ => [idx / self.axes[1].points, idx % self.axes[1].points],
        }
    }

    /// Coordinates of grid point `idx` (unused trailing entries are zero).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let ij = self.unravel(idx);
        let mut x = [0.0; 2];
        for (d, a) in self.axes.iter().enumerate() {
            x[d] = a.coord(ij[d]);
        }
        x
    }

    /// `|x|²` at grid point `idx`.
    pub fn radius_sq(&self, idx: usize) -> f64 {
        let x = self.point(idx);
        x[0] * x[0] + x[1] * x[1]
    }

    /// `⟨x⟩ = (1 + |x|²)^{1/2}` at every grid point.
    pub fn bracket_weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| (1.0 + self.radius_sq(i)).sqrt()).collect()
    }

    /// Flat indices of points on the low or high edge of some axis.
    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| {
                let ij = self.unravel(i);
                self.axes
                    .iter()
                    .enumerate()
                    .any(|(d, a)| ij[d] == 0 || ij[d] == a.points - 1)
            })
            .collect()
    }

    /// Index of the grid point closest to the origin.
    pub fn origin_index(&self) -> usize {
        match self.axes.len() {
            1 => self.axes[0].points / 2,
            _ => (self.axes[0].points / 2) * self.axes[1].points + self.axes[1].points / 2,
        }
    }
}

/// A complex function sampled on a grid, stamped with its frame and time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub frame: Frame,
    pub time: f64,
}

impl Field {
    pub fn new(grid: Grid, values: Vec<Complex64>, frame: Frame, time: f64) -> Result<Self, FieldError> {
        if values.len() != grid.len() {
            return Err(FieldError::SizeMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            frame,
            time,
        })
    }

    pub fn from_fn(grid: Grid, frame: Frame, time: f64, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self {
            grid,
            values,
            frame,
            time,
        }
    }

    pub fn zeros(grid: Grid, frame: Frame, time: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            frame,
            time,
        }
    }

    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            grid: self.grid.clone(),
            values,
            frame: self.frame,
            time: self.time,
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    pub fn sub(&self, other: &Field) -> Result<Field, FieldError> {
        if other.values.len() != self.values.len() {
            return Err(FieldError::SizeMismatch {
                expected: self.values.len(),
                got: other.values.len(),
            });
        }
        Ok(self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect()))
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn l2_norm(&self) -> f64 {
        weighted_l2_norm(self, 0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.max_abs()
    }
}

/// `sup_x ⟨x⟩^p |f(x)|` over the grid.
pub fn weighted_sup_norm(f: &Field, p: f64) -> f64 {
    f.values
        .iter()
        .enumerate()
        .fold(0.0, |m, (i, v)| m.max(bracket_pow(&f.grid, i, p) * v.norm()))
}

/// `(∫ ⟨x⟩^{2p} |f|²)^{1/2}` by the rectangle rule (spectrally accurate for
/// periodic, decayed data).
pub fn weighted_l2_norm(f: &Field, p: f64) -> f64 {
    let s: f64 = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| bracket_pow(&f.grid, i, 2.0 * p) * v.norm_sqr())
        .sum();
    (s * f.grid.cell_volume()).sqrt()
}

/// Location and value of `inf_x ⟨x⟩^p |f(x)|` over the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedInf {
    pub value: f64,
    pub index: usize,
    pub location: [f64; 2],
}

pub fn weighted_inf(f: &Field, p: f64) -> WeightedInf {
    let (index, value) = f
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (i, bracket_pow(&f.grid, i, p) * v.norm()))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    WeightedInf {
        value,
        index,
        location: f.grid.point(index),
    }
}

/// All multi-indices `β` of length `dim` with `|β| ≤ max_order`, ordered by
/// total order.
pub fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for order in 0..=max_order {
        match dim {
            1 => out.push(vec![order]),
            _ => {
                for first in (0..=order).rev() {
                    out.push(vec![first, order - first]);
                }
            }
        }
    }
    out
}

fn bracket_pow(grid: &Grid, idx: usize, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else {
        (1.0 + grid.radius_sq(idx)).powf(0.5 * p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn grid_invariants() {
        assert!(matches!(Grid::line(1.0, 7), Err(FieldError::OddPointCount { .. })));
        assert!(matches!(Grid::line(-1.0, 8), Err(FieldError::BadExtent { .. })));
        assert!(matches!(
            Grid::cube(3, 1.0, 8),
            Err(FieldError::UnsupportedDimension(3))
        ));
        let g = Grid::line(12.0, 256).unwrap();
        let w = g.bracket_weights();
        assert!(w.iter().all(|&x| x >= 1.0));
        assert_eq!(w[g.origin_index()], 1.0);
        assert_eq!(g.point(0)[0], -12.0);
        assert!((g.axes()[0].spacing() - 24.0 / 256.0).abs() < 1e-15);
        let g2 = Grid::cube(2, 3.0, 8).unwrap();
        assert_eq!(g2.point(g2.origin_index()), [0.0, 0.0]);
        assert_eq!(g2.boundary_indices().len(), 8 * 8 - 6 * 6);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(1, 2), vec![vec![0], vec![1], vec![2]]);
        let two = multi_indices(2, 2);
        assert_eq!(two.len(), 6);
        assert!(two.iter().all(|b| b.iter().sum::<usize>() <= 2));
    }

    #[test]
    fn sup_norm_examples() {
        let g = Grid::line(10.0, 64).unwrap();
        assert_eq!(weighted_sup_norm(&Field::zeros(g.clone(), Frame::V, 0.0), 3.0), 0.0);
        let p = 3.0;
        let f = Field::from_fn(g.clone(), Frame::V, 0.0, |x| c((1.0 + x[0] * x[0]).powf(-p / 2.0)));
        assert!((weighted_sup_norm(&f, p) - 1.0).abs() < 1e-14);
        let gauss = Field::from_fn(g, Frame::V, 0.0, |x| c((-x[0] * x[0]).exp()));
        assert_eq!(weighted_sup_norm(&gauss, 0.0), 1.0);
    }

    #[test]
    fn l2_norm_of_gaussian_matches_closed_form() {
        // ∫ e^{-2(x/w)²} dx = w √(π/2)
        let w = 0.3;
        let g = Grid::line(12.0, 1024).unwrap();
        let f = Field::from_fn(g, Frame::U, 0.0, |x| c((-(x[0] / w).powi(2)).exp()));
        let exact = (w * (std::f64::consts::PI / 2.0).sqrt()).sqrt();
        assert!((f.l2_norm() - exact).abs() < 1e-8);
        assert_eq!(weighted_l2_norm(&Field::zeros(f.grid.clone(), Frame::U, 0.0), 2.0), 0.0);
        let scaled = f.scale(Complex64::new(-3.0, 4.0));
        assert!((scaled.l2_norm() - 5.0 * f.l2_norm()).abs() < 1e-12);
    }

    #[test]
    fn inf_examples() {
        let g = Grid::line(10.0, 64).unwrap();
        let p = 5.0;
        let f = Field::from_fn(g.clone(), Frame::V, 0.0, |x| c((1.0 + x[0] * x[0]).powf(-p / 2.0)));
        let inf = weighted_inf(&f, p);
        assert!((inf.value - 1.0).abs() < 1e-12);

        // c⟨x⟩^{-p} + φ with |φ| ≤ (|c| - ε)⟨x⟩^{-p}
        let eps = 0.2;
        let f = Field::from_fn(g.clone(), Frame::V, 0.0, |x| {
            let w = (1.0 + x[0] * x[0]).powf(-p / 2.0);
            c(w) - (1.0 - eps) * w * Complex64::new(0.0, x[0]).exp()
        });
        assert!(weighted_inf(&f, p).value >= eps - 1e-12);

        let mut zero = f.clone();
        zero.values[17] = c(0.0);
        let inf = weighted_inf(&zero, p);
        assert_eq!(inf.value, 0.0);
        assert_eq!(inf.index, 17);
        assert_eq!(inf.location[0], g.point(17)[0]);
    }

    proptest! {
        #[test]
        fn weighted_norms_monotone_in_power(p in 0.0f64..4.0, dq in 0.0f64..4.0, w in 0.2f64..3.0) {
            let g = Grid::line(8.0, 64).unwrap();
            let f = Field::from_fn(g, Frame::V, 0.0, |x| Complex64::new((-(x[0] / w).powi(2)).exp(), x[0].sin()));
            prop_assert!(weighted_sup_norm(&f, p) <= weighted_sup_norm(&f, p + dq) * (1.0 + 1e-15));
            prop_assert!(weighted_l2_norm(&f, p) <= weighted_l2_norm(&f, p + dq) * (1.0 + 1e-15));
        }
    }
}
