//! Problem parameters `(N, α, λ, b)` and the integer exponent bookkeeping
//! `(k, n, m, J, σ, σ_j, M̄)` that the a priori theory is phrased in.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical parameters of `i∂ₜu + Δu = λ|u|^α u` together with the conformal
/// speed `b` of the pseudo-conformal transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysParams {
    pub dim: usize,
    pub alpha: f64,
    pub lambda: Complex64,
    pub b: f64,
}

impl PhysParams {
    pub fn new(dim: usize, alpha: f64, lambda: Complex64, b: f64) -> Self {
        Self { dim, alpha, lambda, b }
    }

    /// `(2 - Nα)/2`, the exponent that governs everything near the horizon.
    pub fn gamma(&self) -> f64 {
        (2.0 - self.dim as f64 * self.alpha) / 2.0
    }

    /// `2α|Im λ| / (b(2 - Nα))`, the coefficient of the dissipative bracket.
    pub fn dissipation_coefficient(&self) -> f64 {
        2.0 * self.alpha * self.lambda.im.abs() / (self.b * (2.0 - self.dim as f64 * self.alpha))
    }

    /// Open interval `(2/(N+2), 2/N)` the exponent must lie in.
    pub fn alpha_window(&self) -> (f64, f64) {
        let n = self.dim as f64;
        (2.0 / (n + 2.0), 2.0 / n)
    }

    /// Conformal horizon `1/b`.
    pub fn horizon(&self) -> f64 {
        1.0 / self.b
    }
}

/// One violated admissibility condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    UnsupportedDimension { dim: usize },
    NotDissipative { im_lambda: f64 },
    AlphaBelowWindow { alpha: f64, lower: f64 },
    AlphaAboveWindow { alpha: f64, upper: f64 },
    NonPositiveB { b: f64 },
    NonFinite,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::UnsupportedDimension { dim } => {
                write!(f, "dimension N = {dim} is not supported (expected N ≥ 1)")
            }
            Violation::NotDissipative { im_lambda } => {
                write!(f, "Im λ = {im_lambda} must be strictly negative")
            }
            Violation::AlphaBelowWindow { alpha, lower } => {
                write!(f, "alpha = {alpha} must exceed 2/(N+2) = {lower}")
            }
            Violation::AlphaAboveWindow { alpha, upper } => {
                write!(f, "alpha = {alpha} must be below 2/N = {upper}")
            }
            Violation::NonPositiveB { b } => write!(f, "b = {b} must be positive"),
            Violation::NonFinite => write!(f, "parameters must be finite"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

/// Checks `Im λ < 0`, `2/(N+2) < α < 2/N` and `b > 0`.
pub fn validate_phys(params: &PhysParams) -> ValidationReport {
    let mut violations = Vec::new();
    if params.dim == 0 {
        violations.push(Violation::UnsupportedDimension { dim: params.dim });
        return ValidationReport { violations };
    }
    if !(params.alpha.is_finite()
        && params.lambda.re.is_finite()
        && params.lambda.im.is_finite()
        && params.b.is_finite())
    {
        violations.push(Violation::NonFinite);
        return ValidationReport { violations };
    }
    if params.lambda.im >= 0.0 {
        violations.push(Violation::NotDissipative {
            im_lambda: params.lambda.im,
        });
    }
    let (lower, upper) = params.alpha_window();
    if params.alpha <= lower {
        violations.push(Violation::AlphaBelowWindow {
            alpha: params.alpha,
            lower,
        });
    }
    if params.alpha >= upper {
        violations.push(Violation::AlphaAboveWindow {
            alpha: params.alpha,
            upper,
        });
    }
    if params.b <= 0.0 {
        violations.push(Violation::NonPositiveB { b: params.b });
    }
    ValidationReport { violations }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("invalid physical parameters: {0}")]
    Invalid(ValidationReport),
    #[error("sigma window ({lower}, {upper}) is empty for k = {k}, n = {n}")]
    EmptySigmaWindow { k: u32, n: u32, lower: f64, upper: f64 },
    #[error("relaxed synthesis requires a weight exponent n ≥ 1")]
    MissingWeight,
}

/// A strict condition that a relaxed exponent set fails.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictShortfall {
    pub condition: String,
    pub value: f64,
    pub bound: f64,
}

/// The three derived inequalities that follow from a valid `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedInequalities {
    /// `nασ/(2 - Nα) > N`
    pub weight_sigma: bool,
    /// `0 < 1 - 2σ/(2 - Nα) < 1`
    pub decay_fraction: bool,
    /// `1 - (2 - Nα)/2 - 5σ > 0`
    pub integrability: bool,
}

impl DerivedInequalities {
    pub fn all(&self) -> bool {
        self.weight_sigma && self.decay_fraction && self.integrability
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSet {
    pub k: u32,
    pub n: u32,
    pub m: u32,
    /// Top derivative order `J = 2m + 2 + k + n`.
    pub j_top: u32,
    pub sigma: f64,
    /// Open window `σ` was chosen from.
    pub sigma_window: (f64, f64),
    pub strict: bool,
    /// Strict conditions the set does not meet (always empty when `strict`).
    pub shortfalls: Vec<StrictShortfall>,
    pub dim: usize,
    pub alpha: f64,
}

impl ExponentSet {
    /// The growth ladder `σ_j`.
    pub fn sigma_j(&self, j: u32) -> f64 {
        let two_m = 2 * self.m;
        let jf = j as f64;
        let shift = if j <= two_m {
            0.0
        } else if j == two_m + 1 {
            1.0
        } else if j + 2 <= self.j_top {
            2.0
        } else if j + 1 == self.j_top {
            3.0
        } else {
            4.0
        };
        (jf + shift) * self.sigma
    }

    /// The nonincreasing weight profile `M̄(p)` on `0..=J`.
    pub fn mbar(&self, p: u32) -> u32 {
        if p + self.n <= self.j_top {
            self.n
        } else {
            self.j_top.saturating_sub(p)
        }
    }

    pub fn derived_inequalities(&self) -> DerivedInequalities {
        let dim = self.dim as f64;
        let gap = 2.0 - dim * self.alpha;
        let frac = 1.0 - 2.0 * self.sigma / gap;
        DerivedInequalities {
            weight_sigma: self.n as f64 * self.alpha * self.sigma / gap > dim,
            decay_fraction: frac > 0.0 && frac < 1.0,
            integrability: 1.0 - gap / 2.0 - 5.0 * self.sigma > 0.0,
        }
    }

    /// `σ_j` for `j = 0..=max_order`.
    pub fn sigma_ladder(&self, max_order: usize) -> Vec<f64> {
        (0..=max_order as u32).map(|j| self.sigma_j(j)).collect()
    }
}

/// Smallest integer strictly greater than `bound`. Bounds that are integers up
/// to rounding are treated as exact.
fn strictly_above(bound: f64) -> u32 {
    let nearest = bound.round();
    let base = if (bound - nearest).abs() <= 1e-9 * bound.abs().max(1.0) {
        nearest
    } else {
        bound.floor()
    };
    (base.max(0.0) + 1.0) as u32
}

fn k_bound(p: &PhysParams) -> f64 {
    p.dim as f64 / 2.0 + 4.0
}

fn n_bound(p: &PhysParams, k: u32) -> f64 {
    let dim = p.dim as f64;
    let a = p.alpha;
    let gap = 2.0 - dim * a;
    let kf = k as f64;
    let b1 = 20.0 / (a * a);
    let b2 = dim * gap * (kf + 4.0) / a;
    let b3 = 2.0 * dim * (kf + 2.0) * gap / ((dim + 2.0) * a - 2.0);
    b1.max(b2).max(b3)
}

fn m_bound(p: &PhysParams, k: u32, n: u32) -> f64 {
    let dim = p.dim as f64;
    let a = p.alpha;
    let im = p.lambda.im.abs();
    let first = (k as f64 + n as f64 + 1.0) / 2.0;
    let second = 5.0 * n as f64 * a * p.lambda.norm() * (1.0 + a * im) / (dim * (2.0 - dim * a) * im);
    first.max(second)
}

fn sigma_window(p: &PhysParams, k: u32, n: u32) -> (f64, f64) {
    let dim = p.dim as f64;
    let a = p.alpha;
    let gap = 2.0 - dim * a;
    let kf = k as f64;
    let lower = dim * gap / (n as f64 * a);
    let upper = (dim * a / 10.0)
        .min(gap / 2.0)
        .min(1.0 / (kf + 4.0))
        .min(((dim + 2.0) * a - 2.0) / (2.0 * a * (kf + 2.0)));
    (lower, upper)
}

/// Builds the exponent set.
///
/// With `strict` the minimal `k`, then `n`, then `m` satisfying the strict
/// inequalities are returned and `relaxed_n` is ignored. Without it the
/// caller's `n` is used (minimal `k` and `m` are still computed) and the unmet
/// strict conditions are listed in [`ExponentSet::shortfalls`].
pub fn synthesize_exponents(
    params: &PhysParams,
    strict: bool,
    relaxed_n: Option<u32>,
) -> Result<ExponentSet, ParamsError> {
    let report = validate_phys(params);
    if !report.is_ok() {
        return Err(ParamsError::Invalid(report));
    }
    let k = strictly_above(k_bound(params));
    let n_min = strictly_above(n_bound(params, k));
    let n = if strict {
        n_min
    } else {
        match relaxed_n {
            Some(n) if n >= 1 => n,
            _ => return Err(ParamsError::MissingWeight),
        }
    };
    let m_min = strictly_above(m_bound(params, k, n));
    let m = m_min;
    let j_top = 2 * m + 2 + k + n;

    let mut shortfalls = Vec::new();
    let nb = n_bound(params, k);
    if (n as f64) <= nb {
        shortfalls.push(StrictShortfall {
            condition: "n above weight bound".into(),
            value: n as f64,
            bound: nb,
        });
    }

    let (lower, upper) = sigma_window(params, k, n);
    if lower >= upper {
        return Err(ParamsError::EmptySigmaWindow { k, n, lower, upper });
    }
    Ok(ExponentSet {
        k,
        n,
        m,
        j_top,
        sigma: 0.5 * (lower + upper),
        sigma_window: (lower, upper),
        strict,
        shortfalls,
        dim: params.dim,
        alpha: params.alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PhysParams {
        PhysParams::new(1, 1.0, Complex64::new(0.0, -1.0), 4.0)
    }

    #[test]
    fn validate_examples() {
        assert!(validate_phys(&reference()).is_ok());

        let r = validate_phys(&PhysParams::new(1, 2.5, Complex64::new(0.0, -1.0), 1.0));
        assert_eq!(
            r.violations,
            vec![Violation::AlphaAboveWindow { alpha: 2.5, upper: 2.0 }]
        );

        // 2/4 = 0.5 < 0.8 < 1
        assert!(validate_phys(&PhysParams::new(2, 0.8, Complex64::new(1.0, -0.5), 2.0)).is_ok());
    }

    #[test]
    fn validate_collects_every_violation() {
        let r = validate_phys(&PhysParams::new(1, 0.5, Complex64::new(0.0, 1.0), 0.0));
        assert_eq!(r.violations.len(), 3);
        assert!(r.to_string().contains("Im λ"));
        // boundary of the window is excluded
        let r = validate_phys(&PhysParams::new(1, 2.0 / 3.0, Complex64::new(0.0, -1.0), 1.0));
        assert!(matches!(r.violations[0], Violation::AlphaBelowWindow { .. }));
    }

    #[test]
    fn strict_reference_exponents() {
        let e = synthesize_exponents(&reference(), true, None).unwrap();
        assert_eq!((e.k, e.n, e.m, e.j_top), (5, 21, 211, 450));
        assert!((e.sigma_window.0 - 1.0 / 21.0).abs() < 1e-15);
        assert!((e.sigma_window.1 - 1.0 / 14.0).abs() < 1e-15);
        assert!((e.sigma - 5.0 / 84.0).abs() < 1e-15);
        assert!(e.shortfalls.is_empty());
        assert!(e.derived_inequalities().all());
    }

    #[test]
    fn ladder_and_weight_profile() {
        let e = synthesize_exponents(&reference(), true, None).unwrap();
        assert_eq!(e.mbar(0), e.n);
        assert_eq!(e.mbar(e.j_top), 0);
        assert_eq!(e.mbar(e.j_top - e.n), e.n);
        assert_eq!(e.j_top - e.n, 2 * e.m + 2 + e.k);
        for p in 1..=e.j_top {
            assert!(e.mbar(p) <= e.mbar(p - 1));
        }
        let two_m = 2 * e.m;
        assert!((e.sigma_j(two_m) - two_m as f64 * e.sigma).abs() < 1e-12);
        assert!((e.sigma_j(two_m + 1) - (two_m + 2) as f64 * e.sigma).abs() < 1e-12);
        assert!((e.sigma_j(e.j_top - 1) - (e.j_top + 2) as f64 * e.sigma).abs() < 1e-12);
        assert!((e.sigma_j(e.j_top) - (e.j_top + 4) as f64 * e.sigma).abs() < 1e-12);
        for j in 1..=e.j_top {
            assert!(e.sigma_j(j) > e.sigma_j(j - 1));
        }
    }

    #[test]
    fn relaxed_weight_with_empty_window_is_rejected() {
        let err = synthesize_exponents(&reference(), false, Some(5)).unwrap_err();
        assert!(matches!(err, ParamsError::EmptySigmaWindow { n: 5, .. }));
    }

    #[test]
    fn relaxed_weight_reports_shortfall() {
        let e = synthesize_exponents(&reference(), false, Some(18)).unwrap();
        assert_eq!(e.n, 18);
        assert!(!e.strict);
        assert_eq!(e.shortfalls.len(), 1);
        assert_eq!(e.j_top, 2 * e.m + 2 + e.k + e.n);
    }

    #[test]
    fn strict_synthesis_in_two_dimensions() {
        let p = PhysParams::new(2, 0.8, Complex64::new(1.0, -0.5), 2.0);
        let e = synthesize_exponents(&p, true, None).unwrap();
        assert_eq!(e.k, 6);
        assert!(e.derived_inequalities().all());
        assert!(e.sigma > e.sigma_window.0 && e.sigma < e.sigma_window.1);
    }

    #[test]
    fn invalid_params_do_not_synthesize() {
        let p = PhysParams::new(1, 1.0, Complex64::new(0.0, 1.0), 4.0);
        assert!(matches!(
            synthesize_exponents(&p, true, None),
            Err(ParamsError::Invalid(_))
        ));
    }

    #[test]
    fn strictly_above_handles_integer_bounds() {
        assert_eq!(strictly_above(20.0), 21);
        assert_eq!(strictly_above(4.5), 5);
        assert_eq!(strictly_above(13.999_999_999_999_998), 15);
        assert_eq!(strictly_above(210.000_000_000_001), 211);
    }
}
