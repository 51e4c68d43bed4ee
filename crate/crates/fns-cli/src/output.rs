//! Result persistence: atomic file writes, the overwrite guard, and the
//! CSV/plot formats shared by the subcommands.

use crate::failure::{io_failure, Failure};
use crate::manifest::Manifest;
use fns_core::fit::RateFitResult;
use fns_core::lab::ErrorTable;
use fns_core::solver::SolveRecord;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Creates the output directory; refuses to reuse one that already holds a
/// manifest unless `force` is set.
pub fn prepare_dir(out: &Path, force: bool) -> Result<(), Failure> {
    std::fs::create_dir_all(out).map_err(|e| io_failure(out, &e))?;
    let manifest = out.join(MANIFEST_FILE);
    if manifest.exists() && !force {
        return Err(Failure::io(format!(
            "{} already holds results (manifest.txt present); pass --force to overwrite",
            out.display()
        )));
    }
    Ok(())
}

/// Writes bytes atomically: temp file in the same directory, then rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_failure(dir, &e))?;
    tmp.write_all(bytes).map_err(|e| io_failure(&path, &e))?;
    tmp.persist(&path)
        .map_err(|e| io_failure(&path, &e.error))?;
    Ok(path)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), Failure> {
    write_atomic(dir, MANIFEST_FILE, manifest.to_text().as_bytes())?;
    Ok(())
}

/// Full-precision float for CSV cells (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// results.csv: one row per (exponent, norm); the beta column appears only
/// for coupled sweeps.
pub fn error_table_csv(table: &ErrorTable, with_beta: bool) -> String {
    let mut s = String::new();
    if with_beta {
        s.push_str("alpha,beta,kappa,norm_kind,error,excluded\n");
    } else {
        s.push_str("alpha,kappa,norm_kind,error,excluded\n");
    }
    for row in &table.rows {
        if with_beta {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                fmt_f64(row.alpha),
                fmt_f64(row.beta.unwrap_or(f64::NAN)),
                fmt_f64(row.kappa),
                row.norm_label,
                fmt_f64(row.error),
                row.excluded
            );
        } else {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                fmt_f64(row.alpha),
                fmt_f64(row.kappa),
                row.norm_label,
                fmt_f64(row.error),
                row.excluded
            );
        }
    }
    s
}

/// Plot-ready companion series: natural logs of the gap and the error,
/// non-excluded points only.
pub fn plot_csv(table: &ErrorTable, norm_label: &str) -> String {
    let mut s = String::from("log2ma,logerr\n");
    let (alphas, errors) = table.series(norm_label);
    for (a, e) in alphas.iter().zip(&errors) {
        let _ = writeln!(s, "{},{}", fmt_f64((2.0 - a).ln()), fmt_f64(e.ln()));
    }
    s
}

/// Per-step diagnostics of one run.
pub fn diagnostics_csv(rec: &SolveRecord) -> String {
    let mut s = String::from("t,energy_kin,energy_mag,div_residual,picard_iters\n");
    for d in &rec.diagnostics {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_f64(d.t),
            fmt_f64(d.energy_kin),
            fmt_f64(d.energy_mag),
            fmt_f64(d.div_residual),
            d.picard_iters
        );
    }
    s
}

/// fit.json payload: every fitted norm plus its pass verdict.
#[derive(Debug, serde::Serialize, serde::Deserialize)]
pub struct FitReport {
    pub tolerance: f64,
    pub fits: Vec<RateFitResult>,
    pub passes: Vec<bool>,
}

pub fn fit_json(report: &FitReport) -> Result<String, Failure> {
    serde_json::to_string_pretty(report)
        .map_err(|e| Failure::io(format!("cannot encode fit report: {e}")))
}
