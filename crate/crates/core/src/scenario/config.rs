//! Scenario configuration schema.
//!
//! Complex numbers are `[re, im]` pairs (a bare number is accepted for a
//! real value); matrices are nested row arrays of such entries.

use serde::{Deserialize, Serialize};

use crate::operator::{OperatorMatrix, StateVector};
use crate::scalar::Cx;
use crate::tolerances::Tolerances;
use crate::verify::{CheckToggles, SymmetryClosure};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Real(f64),
    Pair([f64; 2]),
}

impl Scalar {
    pub fn complex(z: Cx<f64>) -> Self {
        Scalar::Pair([z.re, z.im])
    }

    pub fn to_c64(self) -> Cx<f64> {
        match self {
            Scalar::Real(x) => Cx::new(x, 0.0),
            Scalar::Pair([re, im]) => Cx::new(re, im),
        }
    }
}

pub type MatrixSpec = Vec<Vec<Scalar>>;

pub fn matrix_from_spec(rows: &MatrixSpec) -> std::result::Result<OperatorMatrix<f64>, String> {
    let rows: Vec<Vec<Cx<f64>>> =
        rows.iter().map(|r| r.iter().map(|s| s.to_c64()).collect()).collect();
    OperatorMatrix::from_rows(&rows).map_err(|e| e.to_string())
}

pub fn matrix_to_spec(m: &OperatorMatrix<f64>) -> MatrixSpec {
    (0..m.dim()).map(|i| m.row(i).iter().map(|&z| Scalar::complex(z)).collect()).collect()
}

pub fn vector_from_spec(v: &[Scalar]) -> std::result::Result<StateVector<f64>, String> {
    StateVector::new(v.iter().map(|s| s.to_c64()).collect()).map_err(|e| e.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: String,
    pub model: ModelConfig,
    pub seed: SeedConfig,
    pub darboux: DarbouxConfig,
    pub times: TimesConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetries: Option<SymmetryConfig>,
    #[serde(default)]
    pub checks: CheckToggles,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Finite-difference step of the residual check; default from the model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_step: Option<f64>,
    /// Written into lock files; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    /// Required for pure-state and commuting seeds; block seeds derive `A`
    /// and, if given, it must match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<OperatorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Diag(Vec<f64>),
    Matrix(MatrixSpec),
}

impl OperatorSpec {
    pub fn to_matrix(&self) -> std::result::Result<OperatorMatrix<f64>, String> {
        match self {
            OperatorSpec::Diag(d) => {
                if d.is_empty() {
                    return Err("model.operator.diag is empty".into());
                }
                Ok(OperatorMatrix::from_real_diag(d))
            }
            OperatorSpec::Matrix(rows) => matrix_from_spec(rows),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedConfig {
    Anticommuting { alphas: Vec<f64>, couplings: Vec<f64> },
    /// Blocks `[omega, kappa]`.
    DeltaCommuting { blocks: Vec<[f64; 2]>, a: f64 },
    PureState { psi0: Vec<Scalar> },
    Commuting { rho0: MatrixSpec },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NuMode {
    #[default]
    Conjugate,
    Explicit(Scalar),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_mu: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_nu: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_lambda: Option<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DarbouxConfig {
    pub mu: Scalar,
    #[serde(default)]
    pub nu: NuMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<PinConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl TimesConfig {
    /// Uniform grid including both ends.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.samples;
        let span = self.t_max - self.t_min;
        (0..n)
            .map(|k| {
                if k + 1 == n {
                    self.t_max
                } else {
                    self.t_min + span * (k as f64) / ((n - 1) as f64)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformOrder {
    /// Transform the seed, then dress it.
    #[default]
    ShiftThenDress,
    /// Dress the seed, then transform the dressed solution.
    DressThenShift,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetryConfig {
    /// `X = Lambda I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rescale: Option<f64>,
    #[serde(default)]
    pub order: TransformOrder,
    /// Choose `Lambda`, `Y` so that the seed becomes a density matrix.
    #[serde(default)]
    pub normalize: bool,
    #[serde(default)]
    pub margin: f64,
    /// Extra shifts and rescalings whose images must pass the residual check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closure: Option<SymmetryClosure>,
}

/// Parses a configuration document; messages carry line and column.
pub fn parse_config(text: &str) -> std::result::Result<ScenarioConfig, String> {
    serde_json::from_str(text).map_err(|e| format!("config: {e}"))
}
