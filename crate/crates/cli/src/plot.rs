//! `plot-data`: long-format CSV tables from a run directory.
//!
//! | file | columns |
//! |---|---|
//! | `compensated_norms.csv` | `series,s,t,value`; series `comp_sup` = `t‖u‖_∞^α`, `comp_l2` = `(1+bt)^e ‖u‖_2` |
//! | `error_metric.csv` | `metric,t,value`; metric `e2` or `einf` |
//! | `psi_profile.csv` | `one_minus_bs,x1[,x2],psi,compensated` |
//!
//! `psi_profile.csv` needs the `profile/` directory of `verify-theorem`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use dnls_core::asymptotics::ProfileData;
use dnls_core::diagnostics::{l2_target_exponent, read_report};

use crate::error::{CliError, Result};
use crate::io;

pub const COMPENSATED_HEADER: &str = "series,s,t,value";
pub const ERROR_HEADER: &str = "metric,t,value";

pub fn psi_header(dim: usize) -> String {
    let xs: Vec<String> = (1..=dim).map(|d| format!("x{d}")).collect();
    format!("one_minus_bs,{},psi,compensated", xs.join(","))
}

/// `1 - bs = 10^{-k}` for `k = 1, 2, …` down to `reached`, then `reached`.
fn slices(reached: f64) -> Vec<f64> {
    let mut out: Vec<f64> = (1..)
        .map(|k| 10f64.powi(-k))
        .take_while(|&r| r > reached * (1.0 + 1e-9))
        .collect();
    out.push(reached);
    out
}

pub fn plot_data(run_dir: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let report_path = run_dir.join("report.json");
    if !report_path.is_file() {
        return Err(CliError::Io(format!("{}: missing artifact", report_path.display())));
    }
    let report = read_report(&report_path)?;
    let p = report.params;
    io::ensure_dir(out)?;
    let mut written = Vec::new();

    let e = l2_target_exponent(&p, report.monitors.setup.n);
    let mut comp = format!("{COMPENSATED_HEADER}\n");
    for m in &report.monitors.samples {
        let _ = writeln!(comp, "comp_sup,{:e},{:e},{:e}", m.s, m.t, m.t * m.linf_u.powf(p.alpha));
    }
    for m in &report.monitors.samples {
        let _ = writeln!(
            comp,
            "comp_l2,{:e},{:e},{:e}",
            m.s,
            m.t,
            (1.0 + p.b * m.t).powf(e) * m.l2
        );
    }
    let path = out.join("compensated_norms.csv");
    io::write(&path, comp)?;
    written.push(path);

    let mut err = format!("{ERROR_HEADER}\n");
    if let Some(pe) = &report.profile_error {
        for m in &pe.samples {
            let _ = writeln!(err, "e2,{:e},{:e}", m.t, m.e2);
        }
        for m in &pe.samples {
            let _ = writeln!(err, "einf,{:e},{:e}", m.t, m.einf);
        }
    }
    let path = out.join("error_metric.csv");
    io::write(&path, err)?;
    written.push(path);

    let profile_dir = run_dir.join("profile");
    if profile_dir.is_dir() {
        let prof = ProfileData::load(&profile_dir).map_err(|e| CliError::Io(e.to_string()))?;
        let grid = &prof.v0.grid;
        let reached = 1.0 - p.b * prof.meta.s_final;
        let mut text = format!("{}\n", psi_header(grid.dim()));
        for r in slices(reached) {
            let s = (1.0 - r) / p.b;
            let psi = prof.psi(s);
            let z = prof.compensated_modulus(s);
            for i in 0..grid.len() {
                let x = grid.point(i);
                let _ = write!(text, "{r:e}");
                for xd in &x[..grid.dim()] {
                    let _ = write!(text, ",{xd:e}");
                }
                let _ = writeln!(text, ",{:e},{:e}", psi[i], z[i]);
            }
        }
        let path = out.join("psi_profile.csv");
        io::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
