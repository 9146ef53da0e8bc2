//! Run artifacts: trajectory CSV, JSON report and lock, all written
//! atomically (temporary file in the target directory, then rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ScenarioConfig;
use super::pipeline::{run_scenario, ScenarioError, ScenarioOutcome};
use crate::operator::OperatorMatrix;
use crate::scalar::Cx;
use crate::trajectory::Trajectory;

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const REPORT_FILE: &str = "report.json";
pub const LOCK_FILE: &str = "scenario.lock.json";
pub const SUMMARY_FILE: &str = "summary.csv";

const DIAGNOSTIC_COLUMNS: [&str; 19] = [
    "hermiticity_gap",
    "trace_gap",
    "moment_gap",
    "spectrum_gap",
    "min_eig",
    "phi_norm",
    "overlap_ratio",
    "idempotency",
    "projector_trace_gap",
    "form_gap",
    "bridge_gap",
    "unitarity_gap",
    "lax_residual",
    "covariance_eigen",
    "covariance_time",
    "explicit_gap",
    "f_re",
    "f_im",
    "p_dot_norm",
];

/// 17 significant digits, enough to round-trip every `f64`.
pub fn format_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_f64).unwrap_or_default()
}

pub fn trajectory_csv(traj: &Trajectory<f64>) -> String {
    let dim = traj.spec().dim();
    let mut header = vec!["t".to_string()];
    for i in 0..dim {
        for j in 0..dim {
            header.push(format!("re_{i}_{j}"));
            header.push(format!("im_{i}_{j}"));
        }
    }
    header.extend(DIAGNOSTIC_COLUMNS.iter().map(|s| s.to_string()));
    let mut out = header.join(",");
    out.push('\n');
    let dressing = traj.dressing();
    for (k, (&t, state)) in traj.times().iter().zip(traj.states()).enumerate() {
        let mut row = vec![format_f64(t)];
        for z in state.data() {
            row.push(format_f64(z.re));
            row.push(format_f64(z.im));
        }
        let d = &traj.diagnostics()[k];
        row.push(format_f64(d.hermiticity_gap));
        row.push(format_f64(d.trace_gap));
        row.push(format_f64(d.moment_gap));
        row.push(opt(d.spectrum_gap));
        row.push(opt(d.min_eig));
        match dressing.map(|all| &all[k]) {
            Some(x) => {
                row.push(format_f64(x.phi_norm));
                row.push(format_f64(x.overlap_ratio));
                row.push(format_f64(x.idempotency));
                row.push(format_f64(x.projector_trace_gap));
                row.push(format_f64(x.form_gap));
                row.push(format_f64(x.bridge_gap));
                row.push(opt(x.unitarity_gap));
                row.push(format_f64(x.lax_residual.max(x.lax_left_residual)));
                row.push(opt(x.covariance_eigen));
                row.push(opt(x.covariance_time));
                row.push(opt(x.explicit_gap));
                row.push(opt(x.f_value.map(|f| f[0])));
                row.push(opt(x.f_value.map(|f| f[1])));
                row.push(format_f64(x.p_dot_norm));
            }
            None => row.extend(std::iter::repeat_n(String::new(), 14)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Times and matrices back from [`trajectory_csv`] output.
pub fn parse_trajectory_csv(text: &str) -> Result<(Vec<f64>, Vec<OperatorMatrix<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty csv")?.split(',').collect();
    let entries = header.iter().filter(|h| h.starts_with("re_")).count();
    let dim = (entries as f64).sqrt().round() as usize;
    if dim * dim != entries || dim == 0 {
        return Err(format!("{entries} matrix entries is not a square"));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (k, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(format!("row {}: {} cells for {} columns", k + 1, cells.len(), header.len()));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| format!("row {}: {e}", k + 1));
        times.push(num(cells[0])?);
        let data = (0..entries)
            .map(|e| Ok(Cx::new(num(cells[1 + 2 * e])?, num(cells[2 + 2 * e])?)))
            .collect::<Result<Vec<_>, String>>()?;
        states.push(OperatorMatrix::new(dim, data).map_err(|e| e.to_string())?);
    }
    Ok((times, states))
}

/// Writes via a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Outcome of one run as seen by the CLI and the sweep summary.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub id: String,
    pub out_dir: PathBuf,
    pub exit_code: i32,
    pub overall: bool,
    pub singular_at: Option<f64>,
    pub worst_residual: Option<f64>,
    /// Worst of the spectrum or trace-moment check.
    pub worst_spectral: Option<f64>,
    pub failed_checks: Vec<String>,
}

pub fn write_outcome(out_dir: &Path, outcome: &ScenarioOutcome) -> std::io::Result<()> {
    fs::create_dir_all(out_dir)?;
    write_atomic(&out_dir.join(TRAJECTORY_FILE), trajectory_csv(&outcome.trajectory).as_bytes())?;
    write_json(&out_dir.join(REPORT_FILE), &outcome.report)?;
    write_json(&out_dir.join(LOCK_FILE), &outcome.lock)?;
    Ok(())
}

/// Runs a scenario and writes its artifacts into `out_dir`.
pub fn run_to_dir(
    config: &ScenarioConfig,
    out_dir: &Path,
    tol_scale: f64,
) -> Result<RunSummary, ScenarioError> {
    let outcome = run_scenario(config, tol_scale)?;
    write_outcome(out_dir, &outcome).map_err(|e| ScenarioError::Io(format!("{}: {e}", out_dir.display())))?;
    let report = &outcome.report;
    Ok(RunSummary {
        id: config.id.clone(),
        out_dir: out_dir.to_path_buf(),
        exit_code: outcome.exit_code(),
        overall: report.overall,
        singular_at: outcome.trajectory.singular_at().map(|(t, _)| t),
        worst_residual: report.check("residual").map(|c| c.worst_value),
        worst_spectral: report.check("spectrum").or_else(|| report.check("moments")).map(|c| c.worst_value),
        failed_checks: report.failed().into_iter().map(String::from).collect(),
    })
}
