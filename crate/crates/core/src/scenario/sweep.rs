//! Parameter sweeps: one isolated run per value, in parallel up to a job
//! bound, aggregated into `summary.csv`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{Scalar, ScenarioConfig, SeedConfig};
use super::output::{format_f64, run_to_dir, write_atomic, RunSummary, SUMMARY_FILE};
use super::pipeline::ScenarioError;
use crate::scalar::Cx;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Mu,
    TMax,
    A,
}

impl FromStr for SweepParam {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mu" => Ok(SweepParam::Mu),
            "t_max" => Ok(SweepParam::TMax),
            "a" => Ok(SweepParam::A),
            other => Err(format!("unknown sweep parameter '{other}' (mu, t_max, a)")),
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Mu => "mu",
            SweepParam::TMax => "t_max",
            SweepParam::A => "a",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Complex(Cx<f64>),
    Real(f64),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Real(x) => write!(f, "{x}"),
            SweepValue::Complex(z) => write!(f, "{}{:+}i", z.re, z.im),
        }
    }
}

/// `3`, `-2.5i`, `i`, `1+i`, `0.5-2e-1i`.
pub fn parse_complex(text: &str) -> Result<Cx<f64>, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let err = || format!("cannot parse '{text}' as a complex number");
    if s.is_empty() {
        return Err(err());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s.parse::<f64>().map(|x| Cx::new(x, 0.0)).map_err(|_| err());
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("", body),
    };
    let re = if re.is_empty() { 0.0 } else { re.parse::<f64>().map_err(|_| err())? };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().map_err(|_| err())?,
    };
    Ok(Cx::new(re, im))
}

/// A comma-separated list, or a JSON array (`[re, im]` pairs allowed for `mu`).
pub fn parse_values(param: SweepParam, text: &str) -> Result<Vec<SweepValue>, String> {
    let trimmed = text.trim();
    let values = if trimmed.starts_with('[') {
        let items: Vec<Scalar> =
            serde_json::from_str(trimmed).map_err(|e| format!("--values: {e}"))?;
        items
            .into_iter()
            .map(|s| match (param, s) {
                (SweepParam::Mu, s) => Ok(SweepValue::Complex(s.to_c64())),
                (_, Scalar::Real(x)) => Ok(SweepValue::Real(x)),
                (_, Scalar::Pair(_)) => Err(format!("--values: {param} takes real values")),
            })
            .collect::<Result<Vec<_>, _>>()?
    } else if trimmed.is_empty() {
        Vec::new()
    } else {
        trimmed
            .split(',')
            .map(|item| match param {
                SweepParam::Mu => parse_complex(item).map(SweepValue::Complex),
                _ => item
                    .trim()
                    .parse::<f64>()
                    .map(SweepValue::Real)
                    .map_err(|_| format!("--values: cannot parse '{item}' as a number")),
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("--values: empty list".into());
    }
    Ok(values)
}

/// The base configuration with `param` replaced.
pub fn apply_value(
    config: &ScenarioConfig,
    param: SweepParam,
    value: SweepValue,
) -> Result<ScenarioConfig, String> {
    let mut out = config.clone();
    match (param, value) {
        (SweepParam::Mu, SweepValue::Complex(z)) => out.darboux.mu = Scalar::complex(z),
        (SweepParam::TMax, SweepValue::Real(x)) => out.times.t_max = x,
        (SweepParam::A, SweepValue::Real(x)) => match &mut out.seed {
            SeedConfig::DeltaCommuting { a, .. } => *a = x,
            _ => return Err("sweeping 'a' needs a delta_commuting seed".into()),
        },
        _ => return Err(format!("value {value} does not fit parameter {param}")),
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub index: usize,
    pub value: SweepValue,
    pub out_dir: PathBuf,
    pub result: Result<RunSummary, String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
}

impl SweepOutcome {
    /// 0 when every point passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().all(|r| r.exit_code == 0) { 0 } else { 1 }
    }
}

pub fn run_sweep(
    config: &ScenarioConfig,
    param: SweepParam,
    values: &[SweepValue],
    out_dir: &Path,
    jobs: usize,
    tol_scale: f64,
) -> Result<SweepOutcome, ScenarioError> {
    if values.is_empty() {
        return Err(ScenarioError::Schema("sweep needs at least one value".into()));
    }
    if jobs == 0 {
        return Err(ScenarioError::Schema("--jobs must be >= 1".into()));
    }
    // an unusable base config is rejected before any point runs
    super::pipeline::prepare_seed(config, &super::pipeline::effective_tolerances(config, tol_scale)?)?;
    for &v in values {
        apply_value(config, param, v).map_err(ScenarioError::Schema)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| ScenarioError::Io(e.to_string()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ScenarioError::Io(e.to_string()))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(index, &value)| {
                let dir = out_dir.join(format!("point_{index:03}"));
                let mut point = apply_value(config, param, value).expect("validated above");
                point.id = format!("{}/{param}={value}", config.id);
                let result = run_to_dir(&point, &dir, tol_scale);
                let exit_code = match &result {
                    Ok(s) => s.exit_code,
                    Err(e) => e.exit_code(),
                };
                SweepRow { index, value, out_dir: dir, result: result.map_err(|e| e.to_string()), exit_code }
            })
            .collect()
    });
    let outcome = SweepOutcome { rows };
    write_atomic(&out_dir.join(SUMMARY_FILE), summary_csv(param, &outcome).as_bytes())
        .map_err(|e| ScenarioError::Io(e.to_string()))?;
    Ok(outcome)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn summary_csv(param: SweepParam, outcome: &SweepOutcome) -> String {
    let mut out = String::from(
        "index,param,value,dir,exit_code,overall,worst_residual,worst_spectral,singular_t,failed_checks,error\n",
    );
    for row in &outcome.rows {
        let dir = row.out_dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let (overall, residual, spectral, singular, failed, error) = match &row.result {
            Ok(s) => (
                s.overall.to_string(),
                s.worst_residual.map(format_f64).unwrap_or_default(),
                s.worst_spectral.map(format_f64).unwrap_or_default(),
                s.singular_at.map(format_f64).unwrap_or_default(),
                s.failed_checks.join(";"),
                String::new(),
            ),
            Err(e) => ("false".into(), String::new(), String::new(), String::new(), String::new(), e.clone()),
        };
        let fields = [
            row.index.to_string(),
            param.to_string(),
            row.value.to_string(),
            dir,
            row.exit_code.to_string(),
            overall,
            residual,
            spectral,
            singular,
            failed,
            error,
        ];
        out.push_str(&fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        let cases = [
            ("i", (0.0, 1.0)),
            ("-i", (0.0, -1.0)),
            ("2i", (0.0, 2.0)),
            ("1+i", (1.0, 1.0)),
            ("0.5-2e-1i", (0.5, -0.2)),
            ("1e-3+1e+2i", (1e-3, 100.0)),
            ("-3", (-3.0, 0.0)),
            (" 1 - 2i ", (1.0, -2.0)),
        ];
        for (text, (re, im)) in cases {
            assert_eq!(parse_complex(text).unwrap(), Cx::new(re, im), "{text}");
        }
        for bad in ["", "x", "1+", "ii", "1+2j"] {
            assert!(parse_complex(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values(SweepParam::Mu, "i,2i,1+i").unwrap().len(), 3);
        assert_eq!(
            parse_values(SweepParam::Mu, "[[0,1], 2]").unwrap(),
            vec![SweepValue::Complex(Cx::new(0.0, 1.0)), SweepValue::Complex(Cx::new(2.0, 0.0))]
        );
        assert_eq!(parse_values(SweepParam::TMax, "1,2.5").unwrap()[1], SweepValue::Real(2.5));
        assert!(parse_values(SweepParam::TMax, "[[1,2]]").is_err());
        assert!(parse_values(SweepParam::A, "").is_err());
        assert!(parse_values(SweepParam::A, "[]").is_err());
        assert!("beta".parse::<SweepParam>().is_err());
    }
}
