//! Config -> seed -> Lax -> dressing -> symmetries -> verification.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error as ThisError;

use super::config::{
    matrix_from_spec, matrix_to_spec, vector_from_spec, NuMode, PinConfig, Scalar, ScenarioConfig,
    SeedConfig, TransformOrder,
};
use crate::darboux::{trajectory_of, DressedSolution};
use crate::error::Error;
use crate::lax::{DarbouxParams, LaxSolution, ZPins};
use crate::model::ModelSpec;
use crate::operator::eig_hermitian;
use crate::scalar::Cx;
use crate::seed::{
    make_anticommuting_seed, make_commuting_seed, make_delta_commuting_seed, make_pure_state_seed,
    SeedFamily, SeedSolution,
};
use crate::symmetry::{normalize_to_density, shifted_evaluator, rescaled_evaluator, ShiftSpec};
use crate::tolerances::Tolerances;
use crate::trajectory::{Evaluator, Trajectory};
use crate::verify::{run_suite, CheckResult, SuiteOptions, VerificationReport};

/// Failure of a scenario run, with its process exit code.
#[derive(Debug, ThisError)]
pub enum ScenarioError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("singular Darboux transformation at t = {t}: |<chi|phi>| = {overlap:e}")]
    Singular { t: f64, overlap: f64 },
    #[error("numerical failure: {0}")]
    Numerical(Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl ScenarioError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Schema(_) => 2,
            ScenarioError::Singular { .. } => 3,
            ScenarioError::Numerical(_) | ScenarioError::Io(_) => 1,
        }
    }
}

fn schema(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema(msg.into())
}

/// Errors from seed and parameter construction are configuration errors.
fn setup(e: Error) -> ScenarioError {
    match e {
        Error::InvalidParameter(_)
        | Error::InvariantViolation { .. }
        | Error::NotHermitian { .. }
        | Error::DimensionMismatch { .. }
        | Error::BadShape { .. }
        | Error::DimensionCap { .. }
        | Error::Unnormalizable
        | Error::Unsupported(_)
        | Error::ZeroVector => ScenarioError::Schema(e.to_string()),
        other => runtime(other),
    }
}

fn runtime(e: Error) -> ScenarioError {
    match e {
        Error::SingularDarboux { overlap, t } => ScenarioError::Singular { t: t.unwrap_or(0.0), overlap },
        other => ScenarioError::Numerical(other),
    }
}

/// Resolved quantities recorded in the lock file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub family: SeedFamily,
    pub dim: usize,
    pub n: usize,
    pub hermitian_mode: bool,
    pub z_mu: Scalar,
    pub z_nu: Scalar,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_lambda: Option<Scalar>,
    pub operator: Vec<Vec<Scalar>>,
    pub rho0_seed: Vec<Vec<Scalar>>,
    pub rho0_dressed: Vec<Vec<Scalar>>,
    pub shift: f64,
    pub rescale: f64,
    pub order: TransformOrder,
}

#[derive(Debug, Clone)]
pub struct ScenarioOutcome {
    pub report: VerificationReport,
    pub trajectory: Trajectory<f64>,
    /// The input with effective tolerances, chosen eigenvalue pins and the
    /// `resolved` record; running it reproduces this outcome.
    pub lock: ScenarioConfig,
    pub resolved: Resolved,
}

impl ScenarioOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.trajectory.singular_at().is_some() {
            3
        } else if self.report.overall {
            0
        } else {
            1
        }
    }
}

/// Built seed before any dressing, with the transformation to apply.
pub struct PreparedSeed {
    pub base: SeedSolution<f64>,
    pub shift: f64,
    pub rescale: f64,
    pub order: TransformOrder,
}

pub fn effective_tolerances(config: &ScenarioConfig, tol_scale: f64) -> Result<Tolerances, ScenarioError> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(schema("--tol-scale must be a positive number"));
    }
    Ok(if tol_scale == 1.0 { config.tolerances } else { config.tolerances.scaled(tol_scale) })
}

/// Seed construction and symmetry resolution; shared with `--seed-dump`.
pub fn prepare_seed(config: &ScenarioConfig, tol: &Tolerances) -> Result<PreparedSeed, ScenarioError> {
    let n = config.model.n;
    let operator = match &config.model.operator {
        Some(spec) => Some(spec.to_matrix().map_err(|e| schema(format!("model.operator: {e}")))?),
        None => None,
    };
    let require_operator = || {
        operator.clone().ok_or_else(|| schema("model.operator is required for this seed family"))
    };
    let base = match &config.seed {
        SeedConfig::Anticommuting { alphas, couplings } => {
            make_anticommuting_seed(n, alphas, couplings, tol).map_err(setup)?
        }
        SeedConfig::DeltaCommuting { blocks, a } => {
            if n != 1 {
                return Err(schema("delta_commuting seeds require model.n = 1"));
            }
            let blocks: Vec<(f64, f64)> = blocks.iter().map(|b| (b[0], b[1])).collect();
            make_delta_commuting_seed(&blocks, *a, tol).map_err(setup)?
        }
        SeedConfig::PureState { psi0 } => {
            let spec = ModelSpec::with_tolerances(n, require_operator()?, tol).map_err(setup)?;
            let psi = vector_from_spec(psi0).map_err(|e| schema(format!("seed.psi0: {e}")))?;
            make_pure_state_seed(&spec, &psi, tol).map_err(setup)?
        }
        SeedConfig::Commuting { rho0 } => {
            let spec = ModelSpec::with_tolerances(n, require_operator()?, tol).map_err(setup)?;
            let rho = matrix_from_spec(rho0).map_err(|e| schema(format!("seed.rho0: {e}")))?;
            make_commuting_seed(&spec, &rho, tol).map_err(setup)?
        }
    };
    if let (Some(given), SeedConfig::Anticommuting { .. } | SeedConfig::DeltaCommuting { .. }) =
        (&operator, &config.seed)
    {
        if given.dim() != base.dim() || given.distance(base.spec().a()) > 0.0 {
            return Err(schema("model.operator does not match the operator implied by the seed blocks"));
        }
    }

    let sym = config.symmetries.clone().unwrap_or_default();
    let (shift, rescale) = if sym.normalize {
        if sym.shift.is_some() || sym.rescale.is_some() {
            return Err(schema("symmetries.normalize excludes explicit shift and rescale"));
        }
        let norm = normalize_to_density(&base.rho0(), sym.margin, tol).map_err(setup)?;
        (norm.lambda, norm.y)
    } else {
        (sym.shift.unwrap_or(0.0), sym.rescale.unwrap_or(1.0))
    };
    if !shift.is_finite() {
        return Err(schema("symmetries.shift must be finite"));
    }
    if !(rescale.is_finite() && rescale != 0.0) {
        return Err(schema("symmetries.rescale must be finite and nonzero"));
    }
    Ok(PreparedSeed { base, shift, rescale, order: sym.order })
}

fn complex_param(name: &str, s: Scalar) -> Result<Cx<f64>, ScenarioError> {
    let z = s.to_c64();
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(schema(format!("darboux.{name} must be finite")));
    }
    if z == Cx::new(0.0, 0.0) {
        return Err(schema(format!("darboux.{name} must be nonzero")));
    }
    Ok(z)
}

fn build_params(config: &ScenarioConfig) -> Result<DarbouxParams<f64>, ScenarioError> {
    let d = &config.darboux;
    let mu = complex_param("mu", d.mu)?;
    let nu = match d.nu {
        NuMode::Conjugate => mu.conj(),
        NuMode::Explicit(s) => complex_param("nu", s)?,
    };
    if nu == mu {
        return Err(schema("darboux: nu = mu gives the identity transformation"));
    }
    let mut params = if nu == mu.conj() {
        DarbouxParams::hermitian(mu).map_err(setup)?
    } else {
        DarbouxParams::general(mu, nu).map_err(setup)?
    };
    if let Some(l) = d.lambda {
        let lambda = complex_param("lambda", l)?;
        params = params.with_lambda(lambda).map_err(setup)?;
    }
    let pin = d.pin.unwrap_or_default();
    Ok(params.with_pins(ZPins {
        z_mu: pin.z_mu.map(Scalar::to_c64),
        z_nu: pin.z_nu.map(Scalar::to_c64),
        z_lambda: pin.z_lambda.map(Scalar::to_c64),
    }))
}

fn validate_times(config: &ScenarioConfig) -> Result<Vec<f64>, ScenarioError> {
    let t = &config.times;
    if t.samples < 2 {
        return Err(schema("times.samples must be >= 2"));
    }
    if !(t.t_min.is_finite() && t.t_max.is_finite() && t.t_min < t.t_max) {
        return Err(schema("times: need finite t_min < t_max"));
    }
    let grid = t.grid();
    if grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(schema("times: grid is not strictly increasing at this resolution"));
    }
    Ok(grid)
}

pub fn run_scenario(config: &ScenarioConfig, tol_scale: f64) -> Result<ScenarioOutcome, ScenarioError> {
    if config.id.trim().is_empty() {
        return Err(schema("id must be a non-empty string"));
    }
    let tol = effective_tolerances(config, tol_scale)?;
    let times = validate_times(config)?;
    if let Some(h) = config.residual_step {
        if !(h > 0.0 && h.is_finite()) {
            return Err(schema("residual_step must be > 0"));
        }
    }
    let params = build_params(config)?;
    let prepared = prepare_seed(config, &tol)?;
    let transformed = prepared.shift != 0.0 || prepared.rescale != 1.0;
    let shifted_seed = prepared
        .base
        .with_shift(prepared.shift)
        .and_then(|s| s.with_rescale(prepared.rescale))
        .map_err(setup)?;

    let mut extra_checks = Vec::new();
    let mut notes = Vec::new();
    let (trajectory, solution) = match prepared.order {
        TransformOrder::ShiftThenDress => {
            let solution = Arc::new(DressedSolution::new(&shifted_seed, params, &tol).map_err(runtime)?);
            (trajectory_of(Arc::clone(&solution), &times).map_err(runtime)?, solution)
        }
        TransformOrder::DressThenShift => {
            // eigenvalue choices are made on the transformed seed; a negative
            // rescaling reverses their order on the base seed
            let probe = LaxSolution::new(&shifted_seed, params, &tol).map_err(setup)?;
            let chosen = params.with_pins(ZPins {
                z_mu: Some(probe.z_mu()),
                z_nu: if probe.is_conjugate_pair() { params.pins.z_nu } else { Some(probe.z_nu()) },
                z_lambda: probe.z_lambda(),
            });
            let base_params = params_for_base(&chosen, prepared.rescale, prepared.shift)?;
            let solution =
                Arc::new(DressedSolution::new(&prepared.base, base_params, &tol).map_err(runtime)?);
            let traj = dress_then_shift(&solution, &shifted_seed, &prepared, &times)?;
            if transformed && traj.singular_at().is_none() {
                extra_checks.push(order_commutation(&traj, &shifted_seed, params, &tol)?);
            }
            (traj, solution)
        }
    };
    if trajectory.hermitian_mode() {
        let min = eig_hermitian(&shifted_seed.rho0().hermitian_part())
            .map_err(runtime)?
            .min_value();
        if min < -tol.positivity {
            notes.push(format!(
                "seed is not positive semidefinite (smallest eigenvalue {min:e}); positivity not checked"
            ));
        }
    }

    let mut opts = SuiteOptions::new(config.id.clone(), &tol);
    opts.checks = config.checks;
    opts.residual_step = config.residual_step;
    opts.closure = config.symmetries.as_ref().and_then(|s| s.closure.clone());
    let mut report = run_suite(&trajectory, &opts);
    report.checks.extend(extra_checks);
    report.notes.extend(notes);
    if transformed {
        report.notes.push(format!(
            "symmetries applied: shift {} rescale {} order {}",
            prepared.shift,
            prepared.rescale,
            match prepared.order {
                TransformOrder::ShiftThenDress => "shift_then_dress",
                TransformOrder::DressThenShift => "dress_then_shift",
            }
        ));
    }
    let report = VerificationReport::new(report.scenario_id, report.checks, report.notes);

    let lax = solution.lax();
    // eigenvalues of the transformed seed; the base solution of
    // dress_then_shift carries z_b = z / Y - Lambda
    let lift = |z: Cx<f64>| match prepared.order {
        TransformOrder::ShiftThenDress => z,
        TransformOrder::DressThenShift => (z + prepared.shift) * prepared.rescale,
    };
    let resolved = Resolved {
        family: prepared.base.family(),
        dim: prepared.base.dim(),
        n: prepared.base.spec().n(),
        hermitian_mode: params.hermitian_mode(),
        z_mu: Scalar::complex(lift(lax.z_mu())),
        z_nu: Scalar::complex(lift(lax.z_nu())),
        z_lambda: lax.z_lambda().map(|z| Scalar::complex(lift(z))),
        operator: matrix_to_spec(prepared.base.spec().a()),
        rho0_seed: matrix_to_spec(&prepared.base.rho0()),
        rho0_dressed: matrix_to_spec(&shifted_seed.rho0()),
        shift: prepared.shift,
        rescale: prepared.rescale,
        order: prepared.order,
    };
    let mut lock = config.clone();
    lock.tolerances = tol;
    lock.darboux.pin = Some(PinConfig {
        z_mu: Some(resolved.z_mu),
        z_nu: if lax.is_conjugate_pair() { config.darboux.pin.and_then(|p| p.z_nu) } else { Some(resolved.z_nu) },
        z_lambda: resolved.z_lambda,
    });
    lock.resolved = Some(serde_json::to_value(&resolved).expect("resolved record serializes"));
    Ok(ScenarioOutcome { report, trajectory, lock, resolved })
}

/// Parameters of the untransformed seed whose dressing, shifted and
/// rescaled, equals the dressing of the transformed seed: `mu_b = mu / Y`,
/// pins mapped by `z_b = z / Y - Lambda`.
fn params_for_base(
    params: &DarbouxParams<f64>,
    y: f64,
    lambda: f64,
) -> Result<DarbouxParams<f64>, ScenarioError> {
    let scale = |z: Cx<f64>| z / y;
    let pin = |z: Option<Cx<f64>>| z.map(|z| z / y - lambda);
    let base = if params.hermitian_mode() {
        DarbouxParams::hermitian(scale(params.mu()))
    } else {
        DarbouxParams::general(scale(params.mu()), scale(params.nu()))
    }
    .map_err(setup)?;
    let base = match params.lambda() {
        Some(l) => base.with_lambda(scale(l)).map_err(setup)?,
        None => base,
    };
    Ok(base.with_pins(ZPins {
        z_mu: pin(params.pins.z_mu),
        z_nu: pin(params.pins.z_nu),
        z_lambda: pin(params.pins.z_lambda),
    }))
}

/// Dresses the untransformed seed at times `Y t`, then maps the dressed
/// solution through the shift and rescaling.
fn dress_then_shift(
    solution: &Arc<DressedSolution<f64>>,
    shifted_seed: &SeedSolution<f64>,
    prepared: &PreparedSeed,
    times: &[f64],
) -> Result<Trajectory<f64>, ScenarioError> {
    let y = prepared.rescale;
    let spec = prepared.base.spec().clone();
    let mut base_times: Vec<f64> = times.iter().map(|t| y * t).collect();
    if y < 0.0 {
        base_times.reverse();
    }
    let base = trajectory_of(Arc::clone(solution), &base_times).map_err(runtime)?;
    let mut dressing = base.dressing().map(|d| d.to_vec()).unwrap_or_default();
    if y < 0.0 {
        dressing.reverse();
    }
    let kept = dressing.len();
    let (kept_times, singular) = if y > 0.0 {
        (times[..kept].to_vec(), base.singular_at().map(|(t, o)| (t / y, o)))
    } else {
        (times[times.len() - kept..].to_vec(), base.singular_at().map(|(t, o)| (t / y, o)))
    };
    let inner: Evaluator<f64> = solution.evaluator();
    let shifted = shifted_evaluator(&spec, inner, ShiftSpec::scalar(prepared.shift, spec.dim()));
    let evaluator = rescaled_evaluator(shifted, y).map_err(setup)?;
    let states = kept_times.iter().map(|&t| evaluator(t)).collect::<Result<Vec<_>, _>>().map_err(runtime)?;
    let mut traj = Trajectory::new(
        spec,
        kept_times,
        states,
        shifted_seed.rho0(),
        solution.params().hermitian_mode(),
    )
    .map_err(runtime)?
    .with_dressing(dressing)
    .map_err(runtime)?
    .with_evaluator(evaluator)
    .with_solution(Arc::clone(solution));
    if let Some((t, o)) = singular {
        traj = traj.with_singular(t, o);
    }
    Ok(traj)
}

/// `|dress_then_shift - shift_then_dress|_F` over the samples, relative to
/// `max(1, |rho|_F)`.
fn order_commutation(
    traj: &Trajectory<f64>,
    shifted_seed: &SeedSolution<f64>,
    params: DarbouxParams<f64>,
    tol: &Tolerances,
) -> Result<CheckResult, ScenarioError> {
    let other = DressedSolution::new(shifted_seed, params, tol).map_err(runtime)?;
    let mut worst = 0.0f64;
    let mut at = None;
    for (&t, state) in traj.times().iter().zip(traj.states()) {
        let alt = other.rho1_at(t).map_err(runtime)?;
        let gap = alt.distance(state) / state.frobenius_norm().max(1.0);
        if gap > worst || at.is_none() {
            worst = gap;
            at = Some(t);
        }
    }
    Ok(CheckResult {
        name: "order_commutation".into(),
        pass: worst <= tol.shift_commutation,
        worst_value: worst,
        tolerance: tol.shift_commutation,
        location: at,
        note: None,
    })
}

/// `A` and the seed's `rho(0)` (before and after symmetries).
pub fn seed_dump(config: &ScenarioConfig, tol_scale: f64) -> Result<SeedDump, ScenarioError> {
    let tol = effective_tolerances(config, tol_scale)?;
    let prepared = prepare_seed(config, &tol)?;
    let transformed = prepared
        .base
        .with_shift(prepared.shift)
        .and_then(|s| s.with_rescale(prepared.rescale))
        .map_err(setup)?;
    Ok(SeedDump {
        family: prepared.base.family(),
        operator: matrix_to_spec(prepared.base.spec().a()),
        rho0: matrix_to_spec(&prepared.base.rho0()),
        rho0_transformed: matrix_to_spec(&transformed.rho0()),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedDump {
    pub family: SeedFamily,
    pub operator: Vec<Vec<Scalar>>,
    pub rho0: Vec<Vec<Scalar>>,
    pub rho0_transformed: Vec<Vec<Scalar>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::config::parse_config;

    fn sigma_x(extra: &str) -> ScenarioConfig {
        let text = format!(
            r#"{{
  "id": "sx",
  "model": {{ "n": 2, "operator": {{ "diag": [1.0, -1.0] }} }},
  "seed": {{ "family": "anticommuting", "alphas": [1.0], "couplings": [1.0] }},
  "darboux": {{ "mu": [0.3, 1.1] }},
  "times": {{ "t_min": -1.0, "t_max": 1.0, "samples": 11 }}{extra}
}}"#
        );
        parse_config(&text).unwrap()
    }

    fn schema_error(c: &ScenarioConfig) -> String {
        match run_scenario(c, 1.0) {
            Err(ScenarioError::Schema(m)) => m,
            other => panic!("expected schema error, got {:?}", other.map(|o| o.report.overall)),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_config(r#"{"id": "x", "modle": {}}"#).unwrap_err();
        assert!(err.contains("modle") && err.contains("line 1"), "{err}");
    }

    #[test]
    fn parameter_guards() {
        let mut c = sigma_x("");
        c.darboux.nu = NuMode::Explicit(c.darboux.mu);
        assert!(schema_error(&c).contains("identity"));
        let mut c = sigma_x("");
        c.darboux.nu = NuMode::Explicit(Scalar::Real(0.0));
        assert!(schema_error(&c).contains("nu"));
        let mut c = sigma_x("");
        c.times.samples = 1;
        assert!(schema_error(&c).contains("samples"));
        let mut c = sigma_x("");
        c.times.t_max = c.times.t_min;
        assert!(schema_error(&c).contains("t_min"));
        let mut c = sigma_x("");
        c.model.operator = Some(super::super::config::OperatorSpec::Diag(vec![2.0, -1.0]));
        assert!(schema_error(&c).contains("operator"));
        let c = sigma_x(r#", "symmetries": { "normalize": true, "shift": 1.0 }"#);
        assert!(schema_error(&c).contains("normalize"));
        assert!(matches!(run_scenario(&sigma_x(""), 0.0), Err(ScenarioError::Schema(_))));
    }

    #[test]
    fn both_orders_agree() {
        for order in ["shift_then_dress", "dress_then_shift"] {
            let c = sigma_x(&format!(
                r#", "symmetries": {{ "shift": 0.5, "rescale": -2.0, "order": "{order}" }}"#
            ));
            let out = run_scenario(&c, 1.0).unwrap();
            assert!(out.report.overall, "{order}: {:?}", out.report.failed());
            if order == "dress_then_shift" {
                assert!(out.report.check("order_commutation").unwrap().pass);
            }
            assert_eq!(out.trajectory.len(), 11);
        }
    }

    #[test]
    fn lock_pins_reproduce_run() {
        let c = sigma_x("");
        let first = run_scenario(&c, 1.0).unwrap();
        let text = serde_json::to_string(&first.lock).unwrap();
        let second = run_scenario(&parse_config(&text).unwrap(), 1.0).unwrap();
        assert_eq!(first.resolved, second.resolved);
        for (a, b) in first.trajectory.states().iter().zip(second.trajectory.states()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn disabled_checks_are_absent() {
        let c = sigma_x(r#", "checks": { "residual": false, "covariance": false }"#);
        let out = run_scenario(&c, 1.0).unwrap();
        assert!(out.report.check("residual").is_none());
        assert!(out.report.check("covariance_eigen").is_none());
        assert!(out.report.check("form_gap").is_some());
    }
}
