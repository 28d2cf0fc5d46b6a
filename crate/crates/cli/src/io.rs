use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dnls_core::conformal::BridgeRecord;
use dnls_core::Trajectory;
use serde::Serialize;

use crate::error::{CliError, Result};

/// Header of `norms.csv`, one row per solver step (plus the initial state).
/// `weighted_sup` is `sup ⟨x⟩^p |·|` with the solver's `norm_weight`.
pub const NORMS_HEADER: &str = "t,dt,l2,linf,weighted_sup";
/// Header of `bridge.csv`: v-time `s`, u-time `t` and the u-frame norms.
pub const BRIDGE_HEADER: &str = "s,t,l2,linf";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write(path, text)
}

pub fn norms_csv(traj: &Trajectory) -> String {
    let mut out = format!("{NORMS_HEADER}\n");
    for r in &traj.steps {
        let _ = writeln!(out, "{:e},{:e},{:e},{:e},{:e}", r.t, r.dt, r.l2, r.linf, r.weighted_sup);
    }
    out
}

pub fn bridge_csv(bridge: &[BridgeRecord]) -> String {
    let mut out = format!("{BRIDGE_HEADER}\n");
    for r in bridge {
        let _ = writeln!(out, "{:e},{:e},{:e},{:e}", r.s, r.t, r.l2, r.linf);
    }
    out
}

/// `{:e}` for present values, empty otherwise.
pub fn opt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Quotes a CSV field when it needs it.
pub fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
