//! `sweep`: independent verification runs over a parameter grid.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::config::{SweepConfig, SweepPoint};
use crate::error::{CliError, Result};
use crate::io::{self, csv_text, opt};
use crate::verify::{verify, VerdictReport};

pub const SWEEP_HEADER: &str = "index,alpha,lambda_re,lambda_im,b,n,verdict,sup_target,sup_last,sup_rel_dev,l2_exponent,l2_target,delta_e2,delta_einf,compliant,psi_bounded,f_within_bound,error";

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub point: SweepPoint,
    pub n: Option<u32>,
    /// `Err` holds the message of a run that did not produce a verdict.
    pub outcome: std::result::Result<VerdictReport, String>,
}

impl SweepRow {
    fn csv(&self) -> String {
        let p = &self.point;
        let n = self.n.map(|n| n.to_string()).unwrap_or_default();
        let head = format!(
            "{},{:e},{:e},{:e},{:e},{n}",
            self.index, p.alpha, p.lambda.re, p.lambda.im, p.b
        );
        match &self.outcome {
            Ok(v) => {
                let e = &v.empirical;
                format!(
                    "{head},{},{:e},{},{},{},{},{},{},{},{},{},",
                    v.verdict.as_str(),
                    e.sup_target,
                    opt(e.sup_last),
                    opt(e.sup_rel_dev),
                    opt(e.l2_exponent),
                    opt(e.l2_target),
                    opt(e.delta_e2),
                    opt(e.delta_einf),
                    v.monitors.compliant,
                    v.monitors.psi_bounded,
                    v.monitors.f_within_bound
                )
            }
            Err(msg) => format!("{head},error,,,,,,,,,,,{}", csv_text(msg)),
        }
    }
}

/// Runs every grid point into `out/run_NNN` with at most `jobs` concurrent
/// runs and writes `out/sweep.csv` in grid order.
pub fn sweep(cfg: &SweepConfig, out: &Path, jobs: usize, max_order: usize) -> Result<Vec<SweepRow>> {
    if jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let points = cfg.points()?;
    io::ensure_dir(out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Numeric(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(index, point)| {
                let run_cfg = cfg.instantiate(point);
                let dir = out.join(format!("run_{index:03}"));
                SweepRow {
                    index,
                    point: *point,
                    n: run_cfg.initial_n(),
                    outcome: verify(&run_cfg, &dir, max_order).map_err(|e| e.to_string()),
                }
            })
            .collect()
    });
    let mut text = format!("{SWEEP_HEADER}\n");
    for r in &rows {
        let _ = writeln!(text, "{}", r.csv());
    }
    io::write(&out.join("sweep.csv"), text)?;
    Ok(rows)
}
