//! Run and sweep configuration files (JSON).
//!
//! Every physical quantity is an explicit field; complex numbers are written
//! as `[re, im]`.

use std::fs;
use std::path::{Path, PathBuf};

use dnls_core::field::{
    assess_initial_data, build_initial_data, read_snapshot, Bump, DerivativeOptions, Field, Frame, Grid, InitialData,
};
use dnls_core::params::{synthesize_exponents, validate_phys, ExponentSet, Violation};
use dnls_core::solver::SolverConfig;
use dnls_core::{Complex64, PhysParams};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Environment variable naming the root that relative output paths resolve
/// against.
pub const OUTPUT_ROOT_ENV: &str = "DNLS_OUT";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentInputs {
    #[serde(default)]
    pub strict: bool,
    /// Weight power for relaxed runs; defaults to the initial-data `n`.
    #[serde(default)]
    pub relaxed_n: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Half extent `L` of every axis.
    pub half_extent: f64,
    /// Points `M` per axis.
    pub points: usize,
    #[serde(default = "default_boundary_tol")]
    pub boundary_tol: f64,
}

fn default_boundary_tol() -> f64 {
    DerivativeOptions::default().boundary_tol
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `v₀ = c⟨x⟩^{-n} + φ`, v-frame only.
    Power {
        c: Complex64,
        n: u32,
        #[serde(default = "no_bump")]
        bump: Bump,
    },
    /// `a · exp(-|x|² / (2w²))` in the run's frame at its start time.
    Gaussian { amplitude: Complex64, width: f64 },
    /// A snapshot stem written by `simulate` (`<stem>.bin` + `<stem>.json`),
    /// relative to the config file.
    Snapshot { path: PathBuf, n: u32 },
}

fn no_bump() -> Bump {
    Bump::None
}

/// Tolerances of `verify-theorem`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySpec {
    /// Norm checks use the part of the run with `1 - bs ≥ analysis_floor`;
    /// the profile comes from the end of the run. Defaults to
    /// `min(100 r, √r)` for the run's floor `r`.
    pub analysis_floor: Option<f64>,
    pub sup_latest: usize,
    pub sup_rel_tol: f64,
    pub l2_rel_tol: f64,
    pub l2_ratio_max: f64,
    pub profile_jitter: f64,
    /// Fitted error slopes must not exceed this (`-δ`).
    pub profile_slope_max: f64,
    pub omega_identity_tol: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            analysis_floor: None,
            sup_latest: 5,
            sup_rel_tol: 0.05,
            l2_rel_tol: 0.10,
            l2_ratio_max: 2.0,
            profile_jitter: 0.05,
            profile_slope_max: 0.0,
            omega_identity_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysParams,
    #[serde(default)]
    pub exponents: ExponentInputs,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub initial: InitialSpec,
    /// Output directory, relative to the output root.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Replaces the seed of a `random_gaussians` bump.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// Strictness of the physical-parameter check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypotheses {
    /// Everything the theorem assumes.
    Theorem,
    /// Only what the solver needs: `Im λ ≤ 0`, a supported dimension, finite
    /// values and `α > 0`. Other violations are reported, not rejected.
    Simulation,
}

/// Initial state plus, for v-frame data, its assessment.
pub struct Prepared {
    pub field: Field,
    pub data: Option<InitialData>,
    pub n: u32,
    pub c_abs: Option<f64>,
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, &e))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: RunConfig = parse_json(path)?;
        if let InitialSpec::Snapshot { path: p, .. } = &mut cfg.initial {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn initial_n(&self) -> Option<u32> {
        match self.initial {
            InitialSpec::Power { n, .. } | InitialSpec::Snapshot { n, .. } => Some(n),
            InitialSpec::Gaussian { .. } => None,
        }
    }

    /// `1 - b t_end` of a v-frame run.
    pub fn run_floor(&self) -> f64 {
        1.0 - self.physics.b * self.solver.t_end
    }

    pub fn analysis_floor(&self) -> f64 {
        let r = self.run_floor();
        self.verify.analysis_floor.unwrap_or((100.0 * r).min(r.sqrt()))
    }

    /// Physical-parameter violations that `level` tolerates.
    pub fn validate(&self, level: Hypotheses) -> Result<Vec<Violation>> {
        let report = validate_phys(&self.physics);
        let mut tolerated = Vec::new();
        for v in report.violations {
            let soft = match &v {
                Violation::NotDissipative { im_lambda } => *im_lambda == 0.0,
                Violation::AlphaBelowWindow { .. } | Violation::AlphaAboveWindow { .. } => self.physics.alpha > 0.0,
                Violation::NonPositiveB { .. } => self.solver.frame == Frame::U,
                _ => false,
            };
            if level == Hypotheses::Theorem || !soft {
                return Err(CliError::Config(format!("physics: {v}")));
            }
            tolerated.push(v);
        }
        self.solver
            .validate(&self.physics)
            .map_err(|e| CliError::Config(format!("solver: {e}")))?;
        self.grid()?;
        let g = &self.grid;
        if !(g.boundary_tol > 0.0) {
            return Err(CliError::Config(format!(
                "grid: boundary_tol = {} must be positive",
                g.boundary_tol
            )));
        }
        match &self.initial {
            InitialSpec::Power { .. } | InitialSpec::Snapshot { .. } if self.solver.frame != Frame::V => {
                return Err(CliError::Config(
                    "initial: power-law and snapshot data start v-frame runs".into(),
                ));
            }
            InitialSpec::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(CliError::Config(format!("initial: width = {width} must be positive")));
            }
            _ => {}
        }
        if let (Some(m), Some(n)) = (self.exponents.relaxed_n, self.initial_n()) {
            if m != n && !self.exponents.strict {
                return Err(CliError::Config(format!(
                    "exponents: relaxed_n = {m} does not match the initial-data weight n = {n}"
                )));
            }
        }
        if level == Hypotheses::Theorem {
            if self.solver.frame != Frame::V {
                return Err(CliError::Config("solver: verification needs a v-frame run".into()));
            }
            let Some(n) = self.initial_n() else {
                return Err(CliError::Config(
                    "initial: verification needs power-law or snapshot data".into(),
                ));
            };
            if self.exponents.strict {
                let strict =
                    synthesize_exponents(&self.physics, true, None).map_err(|e| CliError::Config(e.to_string()))?;
                if strict.n != n {
                    return Err(CliError::Config(format!(
                        "exponents: strict runs need n = {}, initial data has n = {n}",
                        strict.n
                    )));
                }
            }
            let (floor, run_floor) = (self.analysis_floor(), self.run_floor());
            if !(floor >= run_floor && floor < 1.0) {
                return Err(CliError::Config(format!(
                    "verify: analysis_floor = {floor:e} must lie in [{run_floor:e}, 1)"
                )));
            }
        }
        Ok(tolerated)
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::cube(self.physics.dim, self.grid.half_extent, self.grid.points)
            .map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn derivative_options(&self, max_order: usize) -> DerivativeOptions {
        DerivativeOptions {
            max_order,
            boundary_tol: self.grid.boundary_tol,
        }
    }

    pub fn prepare(&self, max_order: usize) -> Result<Prepared> {
        let grid = self.grid()?;
        let opts = self.derivative_options(max_order);
        let config_err = |e: dnls_core::field::FieldError| CliError::Config(format!("initial: {e}"));
        match &self.initial {
            InitialSpec::Power { c, n, bump } => {
                let bump = match (bump, self.seed) {
                    (Bump::RandomGaussians { count, fraction, .. }, Some(seed)) => Bump::RandomGaussians {
                        count: *count,
                        fraction: *fraction,
                        seed,
                    },
                    (b, _) => b.clone(),
                };
                let data = build_initial_data(&grid, *c, *n, &bump, &opts).map_err(config_err)?;
                Ok(Prepared {
                    field: data.field.clone(),
                    n: *n,
                    c_abs: Some(c.norm()),
                    data: Some(data),
                })
            }
            InitialSpec::Snapshot { path, n } => {
                let field = read_snapshot(path)?;
                if !field.grid.matches(&grid, 1e-12) {
                    return Err(CliError::Config(format!(
                        "initial: snapshot {} does not match the configured grid",
                        path.display()
                    )));
                }
                let data = assess_initial_data(field, *n, &opts).map_err(config_err)?;
                Ok(Prepared {
                    field: data.field.clone(),
                    n: *n,
                    c_abs: None,
                    data: Some(data),
                })
            }
            InitialSpec::Gaussian { amplitude, width } => {
                let field = Field::from_fn(grid, self.solver.frame, 0.0, |x| {
                    let r2: f64 = x.iter().map(|v| v * v).sum();
                    amplitude * (-r2 / (2.0 * width * width)).exp()
                });
                Ok(Prepared {
                    field,
                    data: None,
                    n: 0,
                    c_abs: None,
                })
            }
        }
    }

    /// Strict exponents, plus the relaxed set unless the run is strict.
    pub fn exponents(&self, n: u32) -> Result<Exponents> {
        let strict = synthesize_exponents(&self.physics, true, None).map_err(|e| CliError::Config(e.to_string()))?;
        let relaxed = if self.exponents.strict {
            None
        } else {
            // an empty σ window is common for desk-scale n; monitors then borrow σ
            synthesize_exponents(&self.physics, false, Some(self.exponents.relaxed_n.unwrap_or(n))).ok()
        };
        Ok(Exponents { strict, relaxed })
    }
}

pub struct Exponents {
    pub strict: ExponentSet,
    pub relaxed: Option<ExponentSet>,
}

impl Exponents {
    /// The set monitors normalize with and its label.
    pub fn for_monitors(&self) -> (&ExponentSet, &'static str) {
        match &self.relaxed {
            Some(r) => (r, "relaxed"),
            None => (&self.strict, "strict"),
        }
    }
}

/// `--out` if given, else the config's `output` (default: the config file
/// stem) under `$DNLS_OUT` or the working directory.
pub fn resolve_output(flag: Option<&Path>, configured: Option<&Path>, config_path: &Path) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    let rel = configured.map(Path::to_path_buf).unwrap_or_else(|| {
        PathBuf::from(
            config_path
                .file_stem()
                .map(|s| s.to_os_string())
                .unwrap_or_else(|| "run".into()),
        )
    });
    if rel.is_absolute() {
        return rel;
    }
    match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) if !root.is_empty() => PathBuf::from(root).join(rel),
        _ => rel,
    }
}

/// Axes of a sweep. Missing axes keep the base value; a present axis must not
/// be empty.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxes {
    pub alpha: Option<Vec<f64>>,
    pub lambda: Option<Vec<Complex64>>,
    pub b: Option<Vec<f64>>,
    pub n: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunConfig,
    pub axes: SweepAxes,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// One point of a sweep grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub alpha: f64,
    pub lambda: Complex64,
    pub b: f64,
    pub n: Option<u32>,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: SweepConfig = parse_json(path)?;
        if let InitialSpec::Snapshot { path: p, .. } = &mut cfg.base.initial {
            if p.is_relative() {
                *p = path.parent().unwrap_or(Path::new(".")).join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Cartesian product in the order alpha, lambda, b, n (n fastest).
    pub fn points(&self) -> Result<Vec<SweepPoint>> {
        let a = &self.axes;
        if a.alpha.is_none() && a.lambda.is_none() && a.b.is_none() && a.n.is_none() {
            return Err(CliError::Config("sweep: no axes given".into()));
        }
        let base = &self.base.physics;
        let alphas = a.alpha.clone().unwrap_or_else(|| vec![base.alpha]);
        let lambdas = a.lambda.clone().unwrap_or_else(|| vec![base.lambda]);
        let bs = a.b.clone().unwrap_or_else(|| vec![base.b]);
        let ns: Vec<Option<u32>> = match &a.n {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &lambda in &lambdas {
                for &b in &bs {
                    for &n in &ns {
                        out.push(SweepPoint { alpha, lambda, b, n });
                    }
                }
            }
        }
        if out.is_empty() {
            return Err(CliError::Config("sweep: the sweep grid is empty".into()));
        }
        Ok(out)
    }

    /// The base config moved to `point`. A v-frame run keeps its floor
    /// `1 - b t_end` when `b` changes.
    pub fn instantiate(&self, point: &SweepPoint) -> RunConfig {
        let mut cfg = self.base.clone();
        let floor = cfg.run_floor();
        cfg.physics.alpha = point.alpha;
        cfg.physics.lambda = point.lambda;
        cfg.physics.b = point.b;
        if cfg.solver.frame == Frame::V && point.b > 0.0 {
            cfg.solver.t_end = (1.0 - floor) / point.b;
        }
        if let Some(n) = point.n {
            match &mut cfg.initial {
                InitialSpec::Power { n: m, .. } | InitialSpec::Snapshot { n: m, .. } => *m = n,
                InitialSpec::Gaussian { .. } => {}
            }
            if cfg.exponents.relaxed_n.is_some() {
                cfg.exponents.relaxed_n = Some(n);
            }
            cfg.solver.norm_weight = n as f64;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
      "physics": { "dim": 1, "alpha": 1.0, "lambda": [0.0, -1.0], "b": 16.0 },
      "grid": { "half_extent": 30.0, "points": 256 },
      "solver": { "frame": "v", "dt0": 1e-3, "c_adapt": 0.05, "dt_min": 1e-14, "t_end": 0.06,
                  "schedule": { "kind": "geometric_horizon", "per_decade": 4 } },
      "initial": { "kind": "power", "c": [16.0, 0.0], "n": 5 }
    }"#;

    fn base() -> RunConfig {
        serde_json::from_str(BASE).unwrap()
    }

    fn config_msg(r: Result<Vec<Violation>>) -> String {
        match r {
            Err(CliError::Config(m)) => m,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn base_config_parses_with_defaults() {
        let c = base();
        assert_eq!(c.exponents, ExponentInputs::default());
        assert_eq!(c.grid.boundary_tol, DerivativeOptions::default().boundary_tol);
        assert_eq!(c.verify, VerifySpec::default());
        assert!(c.validate(Hypotheses::Theorem).unwrap().is_empty());
        assert!((c.run_floor() - 0.04).abs() < 1e-15);
        assert!((c.analysis_floor() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = BASE.replacen("\"grid\"", "\"gird\": 1, \"grid\"", 1);
        assert!(serde_json::from_str::<RunConfig>(&text).is_err());
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.json");
        fs::write(&path, "{\n  \"physics\": {\n    \"dim\": 1,,\n").unwrap();
        let err = RunConfig::load(&path).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let msg = err.to_string();
        assert!(msg.contains(&format!("{}:3:", path.display())), "{msg}");
    }

    #[test]
    fn growing_lambda_is_rejected_even_for_plain_simulation() {
        let mut c = base();
        c.physics.lambda = Complex64::new(0.0, 0.5);
        assert!(config_msg(c.validate(Hypotheses::Simulation)).contains("Im λ"));
        assert!(config_msg(c.validate(Hypotheses::Theorem)).contains("Im λ"));
    }

    #[test]
    fn conservative_lambda_is_tolerated_only_for_simulation() {
        let mut c = base();
        c.physics.lambda = Complex64::new(1.0, 0.0);
        let tolerated = c.validate(Hypotheses::Simulation).unwrap();
        assert_eq!(tolerated, vec![Violation::NotDissipative { im_lambda: 0.0 }]);
        assert!(c.validate(Hypotheses::Theorem).is_err());
    }

    #[test]
    fn v_frame_end_past_horizon_is_rejected() {
        let mut c = base();
        c.solver.t_end = 1.0 / 16.0;
        assert!(config_msg(c.validate(Hypotheses::Simulation)).contains("horizon"));
    }

    #[test]
    fn relaxed_n_must_match_initial_weight() {
        let mut c = base();
        c.exponents.relaxed_n = Some(6);
        assert!(config_msg(c.validate(Hypotheses::Simulation)).contains("relaxed_n"));
    }

    #[test]
    fn strict_runs_need_the_strict_weight() {
        let mut c = base();
        c.exponents.strict = true;
        assert!(config_msg(c.validate(Hypotheses::Theorem)).contains("n = 21"));
    }

    #[test]
    fn analysis_floor_below_run_floor_is_rejected() {
        let mut c = base();
        c.verify.analysis_floor = Some(1e-3);
        assert!(config_msg(c.validate(Hypotheses::Theorem)).contains("analysis_floor"));
    }

    #[test]
    fn power_data_needs_the_v_frame() {
        let mut c = base();
        c.solver.frame = Frame::U;
        c.solver.schedule = dnls_core::solver::SnapshotSchedule::EverySteps { every: 1 };
        assert!(config_msg(c.validate(Hypotheses::Simulation)).contains("v-frame"));
    }

    #[test]
    fn relaxed_desk_weight_borrows_strict_sigma() {
        let c = base();
        let e = c.exponents(5).unwrap();
        assert!(e.relaxed.is_none());
        let (set, source) = e.for_monitors();
        assert_eq!(source, "strict");
        assert_eq!(set.n, 21);
    }

    #[test]
    fn seed_replaces_the_bump_seed() {
        let mut c = base();
        c.initial = InitialSpec::Power {
            c: Complex64::new(16.0, 0.0),
            n: 5,
            bump: Bump::RandomGaussians {
                count: 3,
                fraction: 0.5,
                seed: 1,
            },
        };
        let a = c.prepare(2).unwrap().field;
        c.seed = Some(1);
        let same = c.prepare(2).unwrap().field;
        c.seed = Some(2);
        let other = c.prepare(2).unwrap().field;
        assert_eq!(a.values, same.values);
        assert_ne!(a.values, other.values);
    }

    #[test]
    fn output_resolution_prefers_the_flag() {
        let cfg = Path::new("/etc/x/run_a.json");
        assert_eq!(
            resolve_output(Some(Path::new("/o")), Some(Path::new("c")), cfg),
            PathBuf::from("/o")
        );
        assert_eq!(
            resolve_output(None, Some(Path::new("/abs")), cfg),
            PathBuf::from("/abs")
        );
    }

    fn sweep_with(axes: SweepAxes) -> SweepConfig {
        SweepConfig {
            base: base(),
            axes,
            output: None,
        }
    }

    #[test]
    fn empty_sweep_grids_are_errors() {
        assert!(sweep_with(SweepAxes::default()).points().is_err());
        let empty = SweepAxes {
            b: Some(vec![]),
            ..Default::default()
        };
        assert!(sweep_with(empty).points().is_err());
    }

    #[test]
    fn sweep_points_run_n_fastest() {
        let axes = SweepAxes {
            b: Some(vec![8.0, 16.0]),
            n: Some(vec![4, 5, 6]),
            ..Default::default()
        };
        let pts = sweep_with(axes).points().unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].b, pts[0].n), (8.0, Some(4)));
        assert_eq!((pts[2].b, pts[2].n), (8.0, Some(6)));
        assert_eq!((pts[3].b, pts[3].n), (16.0, Some(4)));
        assert!(pts
            .iter()
            .all(|p| p.alpha == 1.0 && p.lambda == Complex64::new(0.0, -1.0)));
    }

    #[test]
    fn instantiate_keeps_the_floor_and_weights() {
        let axes = SweepAxes {
            b: Some(vec![8.0]),
            n: Some(vec![6]),
            ..Default::default()
        };
        let sw = sweep_with(axes);
        let run = sw.instantiate(&sw.points().unwrap()[0]);
        assert!((run.run_floor() - sw.base.run_floor()).abs() < 1e-15);
        assert_eq!(run.initial_n(), Some(6));
        assert_eq!(run.solver.norm_weight, 6.0);
        assert!(run.validate(Hypotheses::Theorem).is_ok());
    }
}
