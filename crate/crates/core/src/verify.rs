//! The verification suite: every structural claim about a trajectory as a
//! named pass/fail check with its worst value, tolerance and location.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{default_step, residual, residual_tolerance, rhs};
use crate::operator::eig_hermitian;
use crate::scalar::Real;
use crate::symmetry::{rescaled_evaluator, shifted_evaluator, ShiftSpec};
use crate::tolerances::Tolerances;
use crate::trajectory::{Evaluator, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Non-finite values are written as `null` and read back as NaN.
    #[serde(with = "finite_or_null")]
    pub worst_value: f64,
    pub tolerance: f64,
    /// Sample time of the worst value.
    pub location: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario_id: String,
    pub checks: Vec<CheckResult>,
    pub overall: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(scenario_id: impl Into<String>, checks: Vec<CheckResult>, notes: Vec<String>) -> Self {
        let overall = checks.iter().all(|c| c.pass);
        Self { scenario_id: scenario_id.into(), checks, overall, notes }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }

    /// Worst value among checks whose name starts with `prefix`.
    pub fn worst(&self, prefix: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.name.starts_with(prefix))
            .map(|c| c.worst_value)
            .reduce(f64::max)
    }
}

/// Enable flags for the named checks; all on by default. A check whose
/// data are absent for a trajectory is skipped regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckToggles {
    pub residual: bool,
    pub spectrum: bool,
    pub hermiticity: bool,
    pub trace: bool,
    pub positivity: bool,
    pub idempotency: bool,
    pub form_gap: bool,
    pub bridge: bool,
    pub unitarity: bool,
    pub lax_eigen: bool,
    pub covariance: bool,
    pub explicit_formula: bool,
    pub symmetry_closure: bool,
    pub params_consistency: bool,
}

impl Default for CheckToggles {
    fn default() -> Self {
        Self {
            residual: true,
            spectrum: true,
            hermiticity: true,
            trace: true,
            positivity: true,
            idempotency: true,
            form_gap: true,
            bridge: true,
            unitarity: true,
            lax_eigen: true,
            covariance: true,
            explicit_formula: true,
            symmetry_closure: true,
            params_consistency: true,
        }
    }
}

/// Shifts `X = Lambda I` and rescalings `Y` whose images must also pass the
/// residual check.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymmetryClosure {
    pub shifts: Vec<f64>,
    pub rescales: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub scenario_id: String,
    pub tol: Tolerances,
    pub checks: CheckToggles,
    /// Finite-difference step; `None` uses the model default.
    pub residual_step: Option<f64>,
    pub closure: Option<SymmetryClosure>,
}

impl SuiteOptions {
    pub fn new(scenario_id: impl Into<String>, tol: &Tolerances) -> Self {
        Self {
            scenario_id: scenario_id.into(),
            tol: *tol,
            checks: CheckToggles::default(),
            residual_step: None,
            closure: None,
        }
    }
}

/// Largest value and its sample time; NaN wins, so it always fails.
fn max_over<T: Real>(times: &[T], values: impl Iterator<Item = f64>) -> (f64, Option<f64>) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (t, v) in times.iter().zip(values) {
        if v.is_nan() {
            return (f64::NAN, Some(t.as_f64()));
        }
        if v > worst {
            worst = v;
            at = Some(t.as_f64());
        }
    }
    if at.is_none() {
        (0.0, None)
    } else {
        (worst, at)
    }
}

fn check(name: &str, (worst, at): (f64, Option<f64>), tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass: worst <= tolerance,
        worst_value: worst,
        tolerance,
        location: at,
        note: None,
    }
}

fn failed(name: &str, note: String) -> CheckResult {
    CheckResult {
        name: name.into(),
        pass: false,
        worst_value: f64::INFINITY,
        tolerance: 0.0,
        location: None,
        note: Some(note),
    }
}

/// Runs every enabled check that applies to the trajectory. Errors met
/// while checking become failing entries.
pub fn run_suite<T: Real>(traj: &Trajectory<T>, opts: &SuiteOptions) -> VerificationReport {
    let tol = &opts.tol;
    let toggles = &opts.checks;
    let times = traj.times();
    let diag = traj.diagnostics();
    let mut checks = Vec::new();
    let mut notes = Vec::new();

    if let Some((t, overlap)) = traj.singular_at() {
        checks.push(CheckResult {
            name: "nonsingular".into(),
            pass: false,
            worst_value: overlap,
            tolerance: tol.singular_overlap,
            location: Some(t.as_f64()),
            note: Some("<chi|phi> vanished; trajectory truncated".into()),
        });
    }
    if traj.is_empty() {
        checks.push(failed("samples", "trajectory has no samples".into()));
        return VerificationReport::new(opts.scenario_id.clone(), checks, notes);
    }

    let h = opts.residual_step.map(T::lit).unwrap_or_else(|| default_step(traj.spec()));
    if toggles.residual {
        match residual_check(traj, traj.evaluator(), h, tol, 1.0) {
            Ok(mut c) => {
                c.name = "residual".into();
                checks.push(c)
            }
            Err(e) => checks.push(failed("residual", e.to_string())),
        }
    }

    if toggles.spectrum {
        if diag.iter().all(|d| d.spectrum_gap.is_some()) {
            let v = max_over(times, diag.iter().map(|d| d.spectrum_gap.unwrap()));
            checks.push(check("spectrum", v, tol.spectrum));
        } else {
            let v = max_over(times, diag.iter().map(|d| d.moment_gap));
            checks.push(check("moments", v, tol.moments));
        }
    }
    if toggles.hermiticity && traj.hermitian_mode() {
        let v = max_over(times, diag.iter().map(|d| d.hermiticity_gap));
        checks.push(check("hermiticity", v, tol.hermiticity));
    }
    if toggles.trace {
        let v = max_over(times, diag.iter().map(|d| d.trace_gap));
        checks.push(check("trace", v, tol.trace));
    }
    if toggles.positivity && traj.hermitian_mode() {
        let reference = traj.reference();
        let seed_positive = reference.is_hermitian(tol.hermitian_input)
            && eig_hermitian(&reference.hermitian_part())
                .map(|e| e.min_value().as_f64() >= -tol.positivity)
                .unwrap_or(false);
        if seed_positive {
            let v = max_over(times, diag.iter().map(|d| -d.min_eig.unwrap_or(f64::NEG_INFINITY)));
            checks.push(check("positivity", v, tol.positivity));
        }
    }

    if let Some(dress) = traj.dressing() {
        if toggles.idempotency {
            checks.push(check("idempotency", max_over(times, dress.iter().map(|d| d.idempotency)), tol.idempotency));
            checks.push(check(
                "projector_trace",
                max_over(times, dress.iter().map(|d| d.projector_trace_gap)),
                tol.projector_trace,
            ));
        }
        if toggles.form_gap {
            checks.push(check("form_gap", max_over(times, dress.iter().map(|d| d.form_gap)), tol.form_gap));
            checks.push(check(
                "similarity_exp",
                max_over(times, dress.iter().map(|d| d.similarity_exp_gap)),
                tol.similarity_forms,
            ));
        }
        if toggles.bridge {
            checks.push(check("bridge", max_over(times, dress.iter().map(|d| d.bridge_gap)), tol.bridge_identity));
        }
        if toggles.unitarity && dress.iter().all(|d| d.unitarity_gap.is_some()) {
            let v = max_over(times, dress.iter().map(|d| d.unitarity_gap.unwrap()));
            checks.push(check("unitarity", v, tol.unitarity));
        }
        if toggles.lax_eigen {
            if let Some(solution) = traj.solution() {
                match solution.lax().eigen_residual(T::zero()) {
                    Ok(r) => checks.push(check("lax_initial", (r.as_f64(), Some(0.0)), tol.lax_initial)),
                    Err(e) => checks.push(failed("lax_initial", e.to_string())),
                }
            }
            let v = max_over(times, dress.iter().map(|d| d.lax_residual.max(d.lax_left_residual)));
            checks.push(check("lax_eigen", v, tol.lax_persistence));
        }
        if toggles.covariance && dress.iter().all(|d| d.covariance_eigen.is_some()) {
            let v = max_over(times, dress.iter().map(|d| d.covariance_eigen.unwrap()));
            checks.push(check("covariance_eigen", v, tol.covariance_eigen));
            let v = max_over(times, dress.iter().map(|d| d.covariance_time.unwrap()));
            checks.push(check("covariance_time", v, tol.covariance_time));
        }
        if toggles.explicit_formula && dress.iter().all(|d| d.explicit_gap.is_some()) {
            let v = max_over(times, dress.iter().map(|d| d.explicit_gap.unwrap()));
            checks.push(check("explicit_formula", v, tol.explicit_agreement));
        }
    }

    if let Some(solution) = traj.solution() {
        let params = solution.params();
        if toggles.params_consistency && traj.hermitian_mode() {
            let gap = (params.nu() - params.mu().conj()).norm().as_f64();
            let scale = params.mu().norm().as_f64().max(1.0);
            let mut c = check("params_consistency", (gap / scale, None), 0.0);
            if !c.pass {
                c.note = Some("hermitian mode claimed but nu != conj(mu)".into());
            }
            checks.push(c);
        }
        if solution.lax().left_choice_ambiguous() {
            notes.push(
                "left eigenvector chosen from a repeated eigenvalue of rho - nu A by the deterministic rule"
                    .into(),
            );
        }
    }

    if toggles.symmetry_closure {
        if let (Some(closure), Some(inner)) = (&opts.closure, traj.evaluator()) {
            let spec = traj.spec();
            let a_scale = spec.a().frobenius_norm().as_f64().max(1.0).powi(spec.n() as i32);
            for &lambda in &closure.shifts {
                let f = shifted_evaluator(spec, inner.clone(), ShiftSpec::scalar(T::lit(lambda), spec.dim()));
                let factor = (1.0 + lambda.abs()) * a_scale;
                let name = format!("symmetry_shift[{lambda}]");
                match residual_check(traj, Some(&f), h, tol, factor) {
                    Ok(mut c) => {
                        c.name = name;
                        checks.push(c)
                    }
                    Err(e) => checks.push(failed(&name, e.to_string())),
                }
            }
            for &y in &closure.rescales {
                let name = format!("symmetry_rescale[{y}]");
                let result = rescaled_evaluator(inner.clone(), T::lit(y))
                    .and_then(|f| residual_check(traj, Some(&f), h, tol, (y * y).max(1.0)));
                match result {
                    Ok(mut c) => {
                        c.name = name;
                        checks.push(c)
                    }
                    Err(e) => checks.push(failed(&name, e.to_string())),
                }
            }
        }
    }

    if let Some(drift) = traj.symmetrization_drift() {
        notes.push(format!("RK4 re-symmetrization removed at most {drift:e} per step"));
    }
    VerificationReport::new(opts.scenario_id.clone(), checks, notes)
}

/// Residual at every sample through `evaluator`, or on the sample grid
/// (5-point stencil at interior points) when there is none. The tolerance
/// is multiplied by `factor`.
fn residual_check<T: Real>(
    traj: &Trajectory<T>,
    evaluator: Option<&Evaluator<T>>,
    h: T,
    tol: &Tolerances,
    factor: f64,
) -> Result<CheckResult> {
    let times = traj.times();
    let spec = traj.spec();
    match evaluator {
        Some(f) => {
            let reports: Vec<_> = times
                .par_iter()
                .map(|&t| residual(spec, f.as_ref(), t, h, tol))
                .collect::<Result<_>>()?;
            let tolerance = residual_tolerance(h, tol).as_f64() * factor;
            Ok(check("", max_over(times, reports.iter().map(|r| r.residual_norm.as_f64())), tolerance))
        }
        None => {
            let states = traj.states();
            if states.len() < 5 {
                return Err(crate::error::Error::InvalidParameter(
                    "grid residual needs at least 5 samples".into(),
                ));
            }
            let step = times[1] - times[0];
            let uniform = times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - step).abs() <= T::lit(1e-9) * step.abs());
            if !uniform {
                return Err(crate::error::Error::InvalidParameter(
                    "grid residual needs uniform samples".into(),
                ));
            }
            let twelve_h = T::lit(12.0) * step;
            let values: Vec<f64> = (2..states.len() - 2)
                .map(|k| {
                    let mut d = &states[k + 1] - &states[k - 1];
                    d = d.scale_real(T::lit(8.0));
                    d -= &states[k + 2];
                    d += &states[k - 2];
                    let d = d.scale_real(T::one() / twelve_h);
                    rhs(spec, &states[k]).map(|r| d.distance(&r).as_f64())
                })
                .collect::<Result<_>>()?;
            let tolerance = residual_tolerance(step, tol).as_f64() * factor;
            Ok(check("", max_over(&times[2..times.len() - 2], values.into_iter()), tolerance))
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::darboux::{dressed_trajectory, trajectory_of, DressedSolution};
    use crate::lax::{DarbouxParams, LaxSolution};
    use crate::model::ModelSpec;
    use crate::operator::{OperatorMatrix, StateVector};
    use crate::scalar::Cx;
    use crate::seed::{
        make_anticommuting_seed, make_commuting_seed, make_delta_commuting_seed, pure_state_solution,
    };
    use crate::trajectory::{rk4_integrate, rk4_nlse_projector};

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn grid(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
    }

    fn opts() -> SuiteOptions {
        SuiteOptions::new("test", &tol())
    }

    #[test]
    fn reference_scenario_passes() {
        let seed = make_anticommuting_seed(2, &[1.0], &[1.0], &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.0, 1.0)).unwrap().with_lambda(c(0.0, 3.0)).unwrap();
        let traj = dressed_trajectory(&seed, params, &grid(-1.0, 1.0, 9), &tol()).unwrap();
        let mut o = opts();
        o.closure = Some(SymmetryClosure { shifts: vec![-1.0, 0.5, 2.0], rescales: vec![0.5, 2.0] });
        let report = run_suite(&traj, &o);
        assert!(report.overall, "{:?}", report.failed());
        for name in ["residual", "spectrum", "hermiticity", "trace", "idempotency", "form_gap", "bridge",
            "unitarity", "lax_eigen", "covariance_eigen", "covariance_time", "params_consistency"] {
            assert!(report.check(name).is_some(), "missing {name}");
        }
        assert!(report.check("symmetry_rescale[2]").unwrap().pass);
    }

    #[test]
    fn perturbed_trajectory_fails_residual() {
        let seed = make_delta_commuting_seed(&[(0.3, 0.6)], 0.5, &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.4, 0.9)).unwrap();
        let traj = dressed_trajectory(&seed, params, &grid(-1.0, 1.0, 7), &tol()).unwrap();
        assert!(run_suite(&traj, &opts()).overall);
        let bad = traj.perturbed(1e-3).unwrap();
        let report = run_suite(&bad, &opts());
        assert!(!report.check("residual").unwrap().pass);
    }

    #[test]
    fn commuting_seed_passes_trivially() {
        let spec = ModelSpec::new(1, OperatorMatrix::from_real_diag(&[1.0, -1.0, 0.5])).unwrap();
        let rho = OperatorMatrix::from_real_diag(&[0.2, 0.3, 0.5]);
        let seed = make_commuting_seed(&spec, &rho, &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.5, 1.0)).unwrap();
        let traj = dressed_trajectory(&seed, params, &grid(0.0, 2.0, 5), &tol()).unwrap();
        for s in traj.states() {
            assert!(s.distance(&rho) < 1e-12);
        }
        let report = run_suite(&traj, &opts());
        assert!(report.overall, "{:?}", report.failed());
    }

    #[test]
    fn non_eigenvector_is_detected() {
        let seed = make_anticommuting_seed(2, &[1.0, 0.5], &[0.8, 0.4], &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.3, 0.7)).unwrap();
        let lax = LaxSolution::new(&seed, params, &tol()).unwrap();
        let wrong = StateVector::new(vec![c(0.5, 0.0), c(0.5, 0.1), c(0.5, -0.2), c(0.4, 0.0)]).unwrap();
        let solution = Arc::new(DressedSolution::from_lax(lax.with_phi0_unchecked(wrong), &tol()));
        let traj = trajectory_of(solution, &grid(0.0, 1.0, 5)).unwrap();
        let report = run_suite(&traj, &opts());
        let failed = report.failed();
        assert!(failed.contains(&"lax_initial") && failed.contains(&"form_gap"), "{failed:?}");
    }

    #[test]
    fn false_hermitian_claim_is_detected() {
        let seed = make_anticommuting_seed(2, &[1.0], &[1.0], &tol()).unwrap();
        let params = DarbouxParams::general(c(0.3, 0.8), c(0.5, -0.6)).unwrap();
        let traj = dressed_trajectory(&seed, params, &grid(0.0, 1.0, 5), &tol())
            .unwrap()
            .claim_hermitian_mode()
            .unwrap();
        let report = run_suite(&traj, &opts());
        assert!(!report.check("params_consistency").unwrap().pass);
    }

    #[test]
    fn rk4_commuting_seed_is_constant() {
        let spec = ModelSpec::new(2, OperatorMatrix::from_real_diag(&[1.0, -0.5])).unwrap();
        let rho = OperatorMatrix::from_real_diag(&[0.4, 0.6]);
        let traj = rk4_integrate(&spec, &rho, 0.5, 1e-2, &tol()).unwrap();
        assert!(traj.states().iter().all(|s| s.distance(&rho) < 1e-15));
    }

    #[test]
    fn rk4_matches_pure_state_closed_form() {
        let a = OperatorMatrix::from_real_rows(&[&[0.6, 0.2, 0.0], &[0.2, -0.3, 0.4], &[0.0, 0.4, 0.2]]).unwrap();
        for n in 1..=3 {
            let spec = ModelSpec::new(n, a.clone()).unwrap();
            let psi = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).unwrap();
            let exact = pure_state_solution(&spec, &psi, 1.0).unwrap();
            let rho0 = OperatorMatrix::outer(&psi, &psi.conj());
            let traj = rk4_integrate(&spec, &rho0, 1.0, 1e-3, &tol()).unwrap();
            assert!(traj.states().last().unwrap().distance(&exact) < 1e-6);
            let nse = rk4_nlse_projector(&spec, &psi, 1.0, 1e-3).unwrap();
            assert!(nse.distance(&exact) < 1e-6);
            let report = run_suite(&traj, &opts());
            assert!(report.check("residual").unwrap().pass);
        }
    }

    #[test]
    fn rk4_matches_dressed_solution() {
        let seed = make_delta_commuting_seed(&[(0.3, 0.6), (-0.5, 0.4)], 0.5, &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.4, 0.9)).unwrap();
        let solution = DressedSolution::new(&seed, params, &tol()).unwrap();
        for &t_end in &[2.0, -2.0] {
            let traj = rk4_integrate(seed.spec(), &solution.rho1_at(0.0).unwrap(), t_end, 1e-3, &tol()).unwrap();
            let k = if t_end > 0.0 { traj.len() - 1 } else { 0 };
            assert!(traj.states()[k].distance(&solution.rho1_at(t_end).unwrap()) < 1e-6);
        }
        let sx = make_anticommuting_seed(2, &[1.0], &[1.0], &tol()).unwrap();
        let solution = DressedSolution::new(&sx, DarbouxParams::hermitian(c(0.0, 1.0)).unwrap(), &tol()).unwrap();
        let traj = rk4_integrate(sx.spec(), &solution.rho1_at(0.0).unwrap(), 1.0, 1e-3, &tol()).unwrap();
        assert!(traj.states().iter().all(|s| s.distance(&solution.rho1_at(0.0).unwrap()) < 1e-12));
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = VerificationReport::new(
            "x",
            vec![check("a", (1e-12, Some(0.5)), 1e-11), failed("b", "boom".into())],
            vec![],
        );
        assert!(!report.overall);
        let text = serde_json::to_string(&report).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.checks[0], report.checks[0]);
        assert!(back.checks[1].worst_value.is_nan() && !back.checks[1].pass);
    }
}
