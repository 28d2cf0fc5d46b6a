//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Every tolerance is pinned below.

use std::process::ExitCode;
use std::time::Instant;

use dnls_core::asymptotics::{
    error_series, extract_f_algebraic, extract_f_integral, finalize_profile, ProfileData, ProfileOptions,
};
use dnls_core::conformal::{norm_bridge, to_u_frame, to_v_frame, u_time, BridgeRecord};
use dnls_core::diagnostics::{check_l2_envelope, check_profile_error, check_sup_limit, monitor_phi, MonitorSetup};
use dnls_core::field::{build_initial_data, Bump, DerivativeOptions, Field, Frame, Grid, InitialData};
use dnls_core::params::{synthesize_exponents, ExponentSet, PhysParams};
use dnls_core::solver::{coefficient_integral, nonlinear_update, run, SnapshotSchedule, SolverConfig, Trajectory};
use dnls_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// 1
const SUBSTEP_SAMPLES: usize = 1000;
const SUBSTEP_TOL: f64 = 1e-10;
// 2
const FREE_REL_TOL: f64 = 1e-7;
// 3
const SPLIT_ORDER: f64 = 2.0;
const SPLIT_ORDER_TOL: f64 = 0.2;
const STUDY_FLOOR: f64 = 1e-2;
// 4
const RESIDUAL_ORDER_MIN: f64 = 2.0 * 0.85;
const RESIDUAL_TOL: f64 = 1e-4;
// 5
const BRIDGE_L2_TOL: f64 = 1e-12;
const ROUND_TRIP_TOL: f64 = 1e-13;
// 6
const SUP_LATEST: usize = 5;
const SUP_REL_TOL: f64 = 0.05;
// 7
const L2_EXPONENT_REL_TOL: f64 = 0.10;
const L2_RATIO_MAX: f64 = 2.0;
// 8
const PROFILE_JITTER: f64 = 0.05;
const PROFILE_SLOPE_MAX: f64 = -0.05;
// 9
const OMEGA_IDENTITY_TOL: f64 = 1e-12;
const PSI_LIMIT_REL_TOL: f64 = 0.02;
// 10
const MASS_SLACK: f64 = 1e-12;
const F_BOUND: f64 = 0.25;

// Reference desk-scale configuration.
const REF_B: f64 = 16.0;
const REF_C: f64 = 16.0;
const REF_N: u32 = 5;
const REF_L: f64 = 30.0;
const REF_M: usize = 2048;
const REF_DT0: f64 = 1e-3;
const REF_C_ADAPT: f64 = 0.05;
const REF_FLOOR: f64 = 1e-4;
/// The profile comes from a run this much deeper than the analysis floor.
const PROFILE_FLOOR: f64 = 1e-6;
const PER_DECADE: u32 = 16;
const MAX_ORDER: usize = 4;

struct Gate {
    lines: Vec<(bool, String)>,
}

impl Gate {
    fn record(&mut self, id: u32, name: &str, pass: bool, detail: String) {
        let line = format!("{} [{id:>2}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push((pass, line));
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ref_params(lambda: Complex64) -> PhysParams {
    PhysParams::new(1, 1.0, lambda, REF_B)
}

fn ref_data() -> InitialData {
    let grid = Grid::line(REF_L, REF_M).unwrap();
    let opts = DerivativeOptions {
        max_order: MAX_ORDER,
        boundary_tol: 1e-7,
    };
    build_initial_data(&grid, c(REF_C, 0.0), REF_N, &Bump::None, &opts).unwrap()
}

fn ref_config(floor: f64, dt0: f64, c_adapt: f64) -> SolverConfig {
    let mut cfg = SolverConfig::v_frame_to_floor(REF_B, floor, dt0, c_adapt);
    cfg.schedule = SnapshotSchedule::GeometricHorizon { per_decade: PER_DECADE };
    cfg.record_coupling = true;
    cfg.norm_weight = REF_N as f64;
    cfg
}

/// Bridge records with `1 - bs ≥ floor`.
fn bridge_to_floor(traj: &Trajectory, floor: f64) -> Vec<BridgeRecord> {
    let b = traj.params.b;
    norm_bridge(traj)
        .unwrap()
        .into_iter()
        .filter(|r| 1.0 - b * r.s >= floor * (1.0 - 1e-9))
        .collect()
}

/// Classical RK4 on `i w' = λ (1-bt)^{-(4-Nα)/2} |w|^α w`.
fn rk4_oracle(w0: Complex64, params: &PhysParams, t0: f64, tau: f64, steps: usize) -> Complex64 {
    let expo = -(4.0 - params.dim as f64 * params.alpha) / 2.0;
    let rhs = |t: f64, w: Complex64| {
        let coef = if params.b == 0.0 {
            1.0
        } else {
            (1.0 - params.b * t).powf(expo)
        };
        -Complex64::i() * params.lambda * coef * w.norm().powf(params.alpha) * w
    };
    let h = tau / steps as f64;
    let mut w = w0;
    for i in 0..steps {
        let t = t0 + i as f64 * h;
        let k1 = rhs(t, w);
        let k2 = rhs(t + h / 2.0, w + k1 * (h / 2.0));
        let k3 = rhs(t + h / 2.0, w + k2 * (h / 2.0));
        let k4 = rhs(t + h, w + k3 * h);
        w += (k1 + 2.0 * k2 + 2.0 * k3 + k4) * (h / 6.0);
    }
    w
}

fn criterion_1(gate: &mut Gate) {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let mut worst = 0.0f64;
    for i in 0..SUBSTEP_SAMPLES {
        let alpha = rng.gen_range(0.3..1.9);
        let lambda = c(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..-0.05));
        let w0 = c(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
        let mut tau: f64 = rng.gen_range(0.0..0.5);
        // odd samples carry the singular v-frame coefficient
        let (params, t0) = if i % 2 == 0 {
            (PhysParams::new(1, alpha, lambda, 0.0), 0.0)
        } else {
            let b: f64 = rng.gen_range(0.5..8.0);
            let t0 = rng.gen_range(0.0..0.5) / b;
            tau = tau.min(0.9 * (1.0 / b - t0));
            (PhysParams::new(1, alpha, lambda, b), t0)
        };
        let exact = nonlinear_update(w0, lambda, alpha, coefficient_integral(&params, t0, tau).unwrap());
        let oracle = rk4_oracle(w0, &params, t0, tau, 4000);
        worst = worst.max((exact - oracle).norm());
    }
    gate.record(
        1,
        "nonlinear substep exactness",
        worst <= SUBSTEP_TOL,
        format!("max |closed form - RK4| = {worst:.2e} over {SUBSTEP_SAMPLES} samples (tol {SUBSTEP_TOL:.0e})"),
    );
}

fn criterion_2(gate: &mut Gate) {
    let grid = Grid::line(20.0, 512).unwrap();
    let exact = |t: f64, x: f64| {
        let s = c(1.0, 2.0 * t);
        (-(x * x) / (2.0 * s)).exp() / s.sqrt()
    };
    let u0 = Field::from_fn(grid, Frame::U, 0.0, |x| exact(0.0, x[0]));
    let params = PhysParams::new(1, 1.0, c(0.0, 0.0), 1.0);
    let mut cfg = SolverConfig::u_frame(1.0, 0.05);
    cfg.schedule = SnapshotSchedule::EverySteps { every: 2 };
    let traj = run(&u0, &cfg, &params).unwrap();
    let worst = traj
        .snapshots
        .iter()
        .map(|s| {
            let f = &s.field;
            let e = (0..f.grid.len())
                .map(|i| (f.values[i] - exact(f.time, f.grid.point(i)[0])).norm())
                .fold(0.0, f64::max);
            let peak = (0..f.grid.len())
                .map(|i| exact(f.time, f.grid.point(i)[0]).norm())
                .fold(0.0, f64::max);
            e / peak
        })
        .fold(0.0, f64::max);
    gate.record(
        2,
        "free evolution oracle",
        worst <= FREE_REL_TOL,
        format!(
            "max relative L∞ error {worst:.2e} over {} snapshots, M = 512, L = 20 (tol {FREE_REL_TOL:.0e})",
            traj.snapshots.len()
        ),
    );
}

/// Three runs at `(dt0, c_adapt)`, halved twice, ending at `STUDY_FLOOR`.
fn refinement_runs(data: &InitialData, params: &PhysParams) -> Vec<Trajectory> {
    (0..3)
        .map(|k| {
            let h = 0.5f64.powi(k);
            let mut cfg = ref_config(STUDY_FLOOR, 2.0 * REF_DT0 * h, 2.0 * REF_C_ADAPT * h);
            cfg.schedule = SnapshotSchedule::Times { times: vec![] };
            run(&data.field, &cfg, params).unwrap()
        })
        .collect()
}

fn criteria_3_4(gate: &mut Gate, data: &InitialData, params: &PhysParams, reference: &Trajectory) {
    let runs = refinement_runs(data, params);
    let finals: Vec<&Field> = runs.iter().map(|t| &t.final_snapshot().field).collect();
    let e1 = finals[0].sub(finals[1]).unwrap().sup_norm();
    let e2 = finals[1].sub(finals[2]).unwrap().sup_norm();
    let order = (e1 / e2).log2();
    gate.record(
        3,
        "splitting order",
        (order - SPLIT_ORDER).abs() <= SPLIT_ORDER_TOL,
        format!(
            "self-convergence order {order:.3} (differences {e1:.2e}, {e2:.2e}) to 1-bt = {STUDY_FLOOR:.0e} (want {SPLIT_ORDER} ± {SPLIT_ORDER_TOL})"
        ),
    );

    // measured where |v₀| ≥ RESOLVED_FRACTION ‖v₀‖_∞; the full-grid value is printed alongside
    let ext: Vec<_> = runs.iter().map(|t| extract_f_integral(t).unwrap()).collect();
    let res: Vec<f64> = ext.iter().map(|e| e.max_resolved_residual).collect();
    let res_order = (res[0] / res[1]).log2().min((res[1] / res[2]).log2());
    let at_ref = extract_f_integral(reference).unwrap();
    let pass = res_order >= RESIDUAL_ORDER_MIN && at_ref.max_resolved_residual <= RESIDUAL_TOL;
    gate.record(
        4,
        "modulus-identity residual",
        pass,
        format!(
            "resolved-region residuals {:.2e}, {:.2e}, {:.2e} give order {res_order:.3} (min {RESIDUAL_ORDER_MIN:.2}); reference residual {:.2e} on {} of {} points via {} quadrature (tol {RESIDUAL_TOL:.0e}); full grid incl. boundary layer {:.2e}",
            res[0],
            res[1],
            res[2],
            at_ref.max_resolved_residual,
            at_ref.resolved_points,
            reference.snapshots[0].field.grid.len(),
            at_ref.quadrature,
            at_ref.max_residual
        ),
    );
}

fn criterion_5(gate: &mut Gate, traj: &Trajectory) {
    let b = traj.params.b;
    let (mut l2_worst, mut trip_worst) = (0.0f64, 0.0f64);
    for s in &traj.snapshots {
        let u = to_u_frame(&s.field, b).unwrap();
        l2_worst = l2_worst.max((u.l2_norm() - s.field.l2_norm()).abs());
        let back = to_v_frame(&u, b, Some(&s.field.grid)).unwrap();
        let d = back
            .values
            .iter()
            .zip(&s.field.values)
            .map(|(a, c)| (a - c).norm())
            .fold(0.0, f64::max);
        trip_worst = trip_worst.max(d);
    }
    gate.record(
        5,
        "conformal bridge exactness",
        l2_worst <= BRIDGE_L2_TOL && trip_worst <= ROUND_TRIP_TOL,
        format!(
            "max |‖u‖₂ - ‖v‖₂| = {l2_worst:.2e} (tol {BRIDGE_L2_TOL:.0e}), round trip {trip_worst:.2e} (tol {ROUND_TRIP_TOL:.0e}) over {} snapshots",
            traj.snapshots.len()
        ),
    );
}

fn criterion_6(gate: &mut Gate, traj: &Trajectory, traj_re: &Trajectory) {
    let rep = check_sup_limit(&bridge_to_floor(traj, REF_FLOOR), &traj.params, SUP_LATEST);
    let rep_re = check_sup_limit(&bridge_to_floor(traj_re, REF_FLOOR), &traj_re.params, SUP_LATEST);
    let same_target = (rep.target_u - rep_re.target_u).abs() <= SUP_REL_TOL * rep.target_u;
    let pass = rep.max_rel_dev_u <= SUP_REL_TOL && rep_re.max_rel_dev_u <= SUP_REL_TOL && same_target;
    let last = |r: &dnls_core::diagnostics::SupLimitReport| r.latest_u.last().map(|p| p.1).unwrap_or(f64::NAN);
    gate.record(
        6,
        "sup-norm limit",
        pass,
        format!(
            "t‖u‖∞ → {:.4} (λ=-i, dev {:.2}%), {:.4} (λ=2-i, dev {:.2}%), target {} over {:.1} decades (tol {:.0}%)",
            last(&rep),
            100.0 * rep.max_rel_dev_u,
            last(&rep_re),
            100.0 * rep_re.max_rel_dev_u,
            rep.target_u,
            rep.decades,
            100.0 * SUP_REL_TOL
        ),
    );
}

fn criterion_7(gate: &mut Gate, traj: &Trajectory) {
    let rep = check_l2_envelope(&bridge_to_floor(traj, REF_FLOOR), &traj.params, REF_N, None).unwrap();
    gate.record(
        7,
        "L² envelope",
        rep.rel_dev <= L2_EXPONENT_REL_TOL && rep.ratio <= L2_RATIO_MAX,
        format!(
            "fitted exponent {:.4} vs -{:.4} (dev {:.2}%, tol {:.0}%) over t ∈ [{:.1}, {:.1}], A/a = {:.4} (max {L2_RATIO_MAX})",
            rep.fit.exponent,
            rep.target_exponent,
            100.0 * rep.rel_dev,
            100.0 * L2_EXPONENT_REL_TOL,
            rep.fit.t_lo,
            rep.fit.t_hi,
            rep.ratio
        ),
    );
}

fn criterion_8(gate: &mut Gate, deep: &Trajectory, profile: &ProfileData) {
    let t_max = u_time((1.0 - REF_FLOOR) / REF_B, REF_B);
    let series: Vec<_> = error_series(deep, profile, t_max / 10.0 * (1.0 - 1e-9))
        .unwrap()
        .into_iter()
        .filter(|m| m.t <= t_max * (1.0 + 1e-9))
        .collect();
    match check_profile_error(&series, PROFILE_JITTER) {
        Ok(rep) => {
            let pass = rep.decreasing_e2
                && rep.decreasing_einf
                && rep.fit_e2.exponent <= PROFILE_SLOPE_MAX
                && rep.fit_einf.exponent <= PROFILE_SLOPE_MAX;
            gate.record(
                8,
                "profile convergence",
                pass,
                format!(
                    "{} samples on t ∈ [{:.1}, {:.1}]: e₂ slope {:.3}, e∞ slope {:.3} (max {PROFILE_SLOPE_MAX}), decreasing within {:.0}%: {}/{}",
                    rep.samples.len(),
                    rep.fit_e2.t_lo,
                    rep.fit_e2.t_hi,
                    rep.fit_e2.exponent,
                    rep.fit_einf.exponent,
                    100.0 * PROFILE_JITTER,
                    rep.decreasing_e2,
                    rep.decreasing_einf
                ),
            );
        }
        Err(e) => gate.record(8, "profile convergence", false, e.to_string()),
    }
}

fn criterion_9(gate: &mut Gate, deep: &Trajectory, profile: &ProfileData) {
    let identity = profile.meta.omega_identity_residual;
    let mut psi_ok = true;
    let mut psi_evals = 0usize;
    for s in &deep.snapshots {
        let psi = profile.psi(s.field.time);
        psi_evals += psi.len();
        psi_ok &= psi.iter().all(|&p| p > 0.0 && p <= 1.0);
    }
    let p = profile.meta.params;
    let s = (1.0 - REF_FLOOR) / p.b;
    let z_sup = profile.compensated_modulus(s).into_iter().fold(0.0, f64::max);
    let target = p.b * (2.0 - p.dim as f64 * p.alpha) / (2.0 * p.alpha * p.lambda.im.abs());
    let dev = (z_sup - target).abs() / target;
    gate.record(
        9,
        "profile identities",
        identity <= OMEGA_IDENTITY_TOL && psi_ok && dev <= PSI_LIMIT_REL_TOL,
        format!(
            "|ω₀|^α(1+f₀) vs |v₀|^α residual {identity:.1e} (tol {OMEGA_IDENTITY_TOL:.0e}); 0 < ψ ≤ 1 at {psi_evals} points: {psi_ok}; ψ-limit {z_sup:.4} vs {target} at 1-bt = {REF_FLOOR:.0e} (dev {:.2}%, tol {:.0}%)",
            100.0 * dev,
            100.0 * PSI_LIMIT_REL_TOL
        ),
    );
}

fn criterion_10(gate: &mut Gate, traj: &Trajectory, traj_re: &Trajectory, data: &InitialData, exps: &ExponentSet) {
    let setup = MonitorSetup::new(REF_N, data.k_const, MAX_ORDER, exps, "strict");
    let rep = monitor_phi(traj, &setup).unwrap();
    let mass = traj.max_mass_increase.max(traj_re.max_mass_increase);
    let pass = mass <= MASS_SLACK
        && rep.decay_v0_holds
        && rep.samples.iter().all(|m| m.f_sup <= F_BOUND)
        && rep.psi_bounded
        && rep.psi_nondecreasing;
    let f_max = rep.samples.iter().map(|m| m.f_sup).fold(0.0, f64::max);
    let decay_max = rep.samples.iter().map(|m| m.decay_ratio).fold(0.0, f64::max);
    gate.record(
        10,
        "monitors",
        pass,
        format!(
            "max step mass growth {mass:.1e} over {} steps (slack {MASS_SLACK:.0e}); decay bound ratio ≤ {decay_max:.3}; max ‖f‖∞ {f_max:.4} (≤ {F_BOUND}); Ψ final/initial {:.3} ({})",
            traj.steps.len() + traj_re.steps.len(),
            rep.psi_growth,
            rep.label
        ),
    );
}

fn criterion_11(gate: &mut Gate) {
    let p = PhysParams::new(1, 1.0, c(0.0, -1.0), 4.0);
    let e = synthesize_exponents(&p, true, None).unwrap();
    let d = e.derived_inequalities();
    let (lo, hi) = e.sigma_window;
    let window_ok = (lo - 1.0 / 21.0).abs() < 1e-15 && (hi - 1.0 / 14.0).abs() < 1e-15 && lo < hi;
    let pass = (e.k, e.n, e.m, e.j_top) == (5, 21, 211, 450) && window_ok && d.all();
    gate.record(
        11,
        "exponent synthesis",
        pass,
        format!(
            "k={}, n={}, m={}, J={}, σ ∈ ({lo:.6}, {hi:.6}), σ = {:.6}; derived inequalities {}/{}/{}",
            e.k, e.n, e.m, e.j_top, e.sigma, d.weight_sigma, d.decay_fraction, d.integrability
        ),
    );
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut gate = Gate { lines: Vec::new() };
    criterion_1(&mut gate);
    criterion_2(&mut gate);

    let data = ref_data();
    let params = ref_params(c(0.0, -1.0));
    let params_re = ref_params(c(2.0, -1.0));
    let strict = synthesize_exponents(&params, true, None).unwrap();

    // the deep run continues the reference run past its floor; everything up
    // to REF_FLOOR coincides with a run stopped there
    let deep = run(&data.field, &ref_config(PROFILE_FLOOR, REF_DT0, REF_C_ADAPT), &params).unwrap();
    let reference = run(&data.field, &ref_config(REF_FLOOR, REF_DT0, REF_C_ADAPT), &params).unwrap();
    let reference_re = run(&data.field, &ref_config(REF_FLOOR, REF_DT0, REF_C_ADAPT), &params_re).unwrap();
    let f_deep = extract_f_algebraic(&deep).unwrap();
    let profile = finalize_profile(
        &deep,
        &f_deep,
        &ProfileOptions {
            floor: Some(PROFILE_FLOOR),
            ..Default::default()
        },
    )
    .unwrap();

    criteria_3_4(&mut gate, &data, &params, &reference);
    criterion_5(&mut gate, &reference);
    criterion_6(&mut gate, &reference, &reference_re);
    criterion_7(&mut gate, &reference);
    criterion_8(&mut gate, &deep, &profile);
    criterion_9(&mut gate, &deep, &profile);
    criterion_10(&mut gate, &reference, &reference_re, &data, &strict);
    criterion_11(&mut gate);

    let failed = gate.lines.iter().filter(|l| !l.0).count();
    println!(
        "acceptance: {} passed, {failed} failed in {:.1}s",
        gate.lines.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
