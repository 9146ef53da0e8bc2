//! Sampled trajectories with per-sample diagnostics, and the RK4 oracle.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::darboux::DressedSolution;
use crate::error::{Error, Result};
use crate::model::{rhs, ModelSpec};
use crate::operator::{eig_hermitian, trace_moments, OperatorMatrix, StateVector};
use crate::scalar::{real, Cx, Real};
use crate::seed::nlse_rhs;
use crate::tolerances::Tolerances;

/// Continuous-time access to a trajectory, used by finite-difference checks.
pub type Evaluator<T> = Arc<dyn Fn(T) -> Result<OperatorMatrix<T>> + Send + Sync>;

/// State-level diagnostics, computed from the stored matrix alone.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SampleDiagnostics {
    pub hermiticity_gap: f64,
    /// `|Tr rho(t) - Tr rho_ref|`.
    pub trace_gap: f64,
    /// `max_k |Tr rho^k - Tr rho_ref^k| / max(1, |rho_ref|_F^k)`, `k = 1..dim`.
    pub moment_gap: f64,
    /// Entrywise gap of sorted eigenvalues (Hermitian mode only).
    pub spectrum_gap: Option<f64>,
    /// Smallest eigenvalue of the Hermitian part (Hermitian mode only).
    pub min_eig: Option<f64>,
}

/// Dressing-level diagnostics recorded while building a dressed trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DressingDiagnostics {
    pub phi_norm: f64,
    pub overlap_ratio: f64,
    pub idempotency: f64,
    pub projector_trace_gap: f64,
    pub form_gap: f64,
    pub bridge_gap: f64,
    pub similarity_exp_gap: f64,
    pub unitarity_gap: Option<f64>,
    pub lax_residual: f64,
    pub lax_left_residual: f64,
    pub covariance_eigen: Option<f64>,
    pub covariance_time: Option<f64>,
    pub explicit_gap: Option<f64>,
    pub f_value: Option<[f64; 2]>,
    pub p_dot_norm: f64,
}

#[derive(Clone)]
pub struct Trajectory<T: Real> {
    spec: ModelSpec<T>,
    times: Vec<T>,
    states: Vec<OperatorMatrix<T>>,
    reference: OperatorMatrix<T>,
    hermitian_mode: bool,
    diagnostics: Vec<SampleDiagnostics>,
    dressing: Option<Vec<DressingDiagnostics>>,
    evaluator: Option<Evaluator<T>>,
    solution: Option<Arc<DressedSolution<T>>>,
    singular_at: Option<(T, f64)>,
    symmetrization_drift: Option<f64>,
}

impl<T: Real> fmt::Debug for Trajectory<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("samples", &self.times.len())
            .field("dim", &self.spec.dim())
            .field("hermitian_mode", &self.hermitian_mode)
            .field("singular_at", &self.singular_at)
            .finish_non_exhaustive()
    }
}

impl<T: Real> Trajectory<T> {
    /// `reference` is the operator whose spectrum the states should share.
    pub fn new(
        spec: ModelSpec<T>,
        times: Vec<T>,
        states: Vec<OperatorMatrix<T>>,
        reference: OperatorMatrix<T>,
        hermitian_mode: bool,
    ) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::InvalidParameter(format!(
                "{} times for {} states",
                times.len(),
                states.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter("trajectory times must be strictly increasing".into()));
        }
        for s in &states {
            spec.a().check_dim(s)?;
        }
        spec.a().check_dim(&reference)?;
        let diagnostics = state_diagnostics(&states, &reference, hermitian_mode)?;
        Ok(Self {
            spec,
            times,
            states,
            reference,
            hermitian_mode,
            diagnostics,
            dressing: None,
            evaluator: None,
            solution: None,
            singular_at: None,
            symmetrization_drift: None,
        })
    }

    pub fn with_dressing(mut self, dressing: Vec<DressingDiagnostics>) -> Result<Self> {
        if dressing.len() != self.times.len() {
            return Err(Error::InvalidParameter("one dressing record per sample required".into()));
        }
        self.dressing = Some(dressing);
        Ok(self)
    }

    pub fn with_evaluator(mut self, evaluator: Evaluator<T>) -> Self {
        self.evaluator = Some(evaluator);
        self
    }

    pub fn with_solution(mut self, solution: Arc<DressedSolution<T>>) -> Self {
        self.solution = Some(solution);
        self
    }

    pub fn with_singular(mut self, t: T, overlap: f64) -> Self {
        self.singular_at = Some((t, overlap));
        self
    }

    /// Marks the trajectory as Hermitian-mode regardless of the parameters.
    pub fn claim_hermitian_mode(mut self) -> Result<Self> {
        self.hermitian_mode = true;
        self.diagnostics = state_diagnostics(&self.states, &self.reference, true)?;
        Ok(self)
    }

    /// Adds `eps * E` to every state and to the evaluator, `E` a fixed
    /// Hermitian unit-norm matrix. Diagnostics are recomputed.
    pub fn perturbed(&self, eps: T) -> Result<Self> {
        let d = self.spec.dim();
        let e = OperatorMatrix::from_fn(d, |i, j| {
            let v = T::lit(((i * 7 + j * 3) % 5) as f64 + 1.0);
            if i == j {
                real(v)
            } else if i < j {
                Cx::new(v, T::one())
            } else {
                Cx::new(T::lit(((j * 7 + i * 3) % 5) as f64 + 1.0), -T::one())
            }
        });
        let e = e.scale_real(eps / e.frobenius_norm());
        let states: Vec<_> = self.states.iter().map(|s| s + &e).collect();
        let mut out = self.clone();
        out.diagnostics = state_diagnostics(&states, &self.reference, self.hermitian_mode)?;
        out.states = states;
        if let Some(inner) = self.evaluator.clone() {
            let e = e.clone();
            out.evaluator = Some(Arc::new(move |t| Ok(&inner(t)? + &e)));
        }
        Ok(out)
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[OperatorMatrix<T>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn reference(&self) -> &OperatorMatrix<T> {
        &self.reference
    }

    pub fn hermitian_mode(&self) -> bool {
        self.hermitian_mode
    }

    pub fn diagnostics(&self) -> &[SampleDiagnostics] {
        &self.diagnostics
    }

    pub fn dressing(&self) -> Option<&[DressingDiagnostics]> {
        self.dressing.as_deref()
    }

    pub fn evaluator(&self) -> Option<&Evaluator<T>> {
        self.evaluator.as_ref()
    }

    pub fn solution(&self) -> Option<&Arc<DressedSolution<T>>> {
        self.solution.as_ref()
    }

    /// First sample time at which `<chi|phi>` vanished, and the overlap seen.
    pub fn singular_at(&self) -> Option<(T, f64)> {
        self.singular_at
    }

    /// Largest anti-Hermitian part removed by RK4 re-symmetrization.
    pub fn symmetrization_drift(&self) -> Option<f64> {
        self.symmetrization_drift
    }

    /// State at `t`, through the evaluator when present, else an exact
    /// sample match.
    pub fn state_at(&self, t: T) -> Result<OperatorMatrix<T>> {
        if let Some(f) = &self.evaluator {
            return f(t);
        }
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|k| self.states[k].clone())
            .ok_or_else(|| Error::InvalidParameter("time not on the sample grid".into()))
    }
}

fn state_diagnostics<T: Real>(
    states: &[OperatorMatrix<T>],
    reference: &OperatorMatrix<T>,
    hermitian_mode: bool,
) -> Result<Vec<SampleDiagnostics>> {
    let dim = reference.dim();
    let ref_moments = trace_moments(reference, dim)?;
    let ref_norm = reference.frobenius_norm().as_f64();
    let ref_spectrum = if hermitian_mode && reference.is_hermitian(1e-10) {
        Some(eig_hermitian(&reference.hermitian_part())?.values)
    } else {
        None
    };
    let ref_trace = reference.trace();
    states
        .iter()
        .map(|s| {
            if !s.is_finite() {
                return Err(Error::NonFinite { context: "trajectory state" });
            }
            let moments = trace_moments(s, dim)?;
            let moment_gap = moments
                .iter()
                .zip(&ref_moments)
                .enumerate()
                .map(|(k, (m, r))| (*m - *r).norm().as_f64() / ref_norm.powi(k as i32 + 1).max(1.0))
                .fold(0.0, f64::max);
            let (spectrum_gap, min_eig) = if hermitian_mode {
                let eig = eig_hermitian(&s.hermitian_part())?;
                let gap = ref_spectrum.as_ref().map(|r| {
                    eig.values
                        .iter()
                        .zip(r)
                        .map(|(a, b)| (*a - *b).abs().as_f64())
                        .fold(0.0, f64::max)
                });
                (gap, Some(eig.min_value().as_f64()))
            } else {
                (None, None)
            };
            Ok(SampleDiagnostics {
                hermiticity_gap: s.hermiticity_gap().as_f64(),
                trace_gap: (s.trace() - ref_trace).norm().as_f64(),
                moment_gap,
                spectrum_gap,
                min_eig,
            })
        })
        .collect()
}

/// Classical fixed-step RK4 of `drho/dt = -i[H(rho), rho]` from `t = 0` to
/// `t_end` (either sign). Hermitian initial data are re-symmetrized after
/// every step; non-Hermitian data are integrated as they are.
pub fn rk4_integrate<T: Real>(
    spec: &ModelSpec<T>,
    rho0: &OperatorMatrix<T>,
    t_end: T,
    dt: T,
    tol: &Tolerances,
) -> Result<Trajectory<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("dt must be > 0".into()));
    }
    spec.a().check_dim(rho0)?;
    let steps = (t_end.abs() / dt).round().to_usize().unwrap_or(0).max(1);
    let h = t_end / T::lit(steps as f64);
    let symmetrize = rho0.is_hermitian(tol.hermitian_input);
    let blowup = T::lit(tol.rk4_blowup) * T::one().max(rho0.frobenius_norm());
    let mut rho = rho0.clone();
    let mut times = vec![T::zero()];
    let mut states = vec![rho.clone()];
    let mut drift = 0.0f64;
    let half = T::lit(0.5);
    for k in 1..=steps {
        let k1 = rhs(spec, &rho)?;
        let k2 = rhs(spec, &(&rho + &k1.scale_real(h * half)))?;
        let k3 = rhs(spec, &(&rho + &k2.scale_real(h * half)))?;
        let k4 = rhs(spec, &(&rho + &k3.scale_real(h)))?;
        let mut incr = &k1 + &k4;
        incr += &(&k2 + &k3).scale_real(T::lit(2.0));
        rho += &incr.scale_real(h / T::lit(6.0));
        if symmetrize {
            drift = drift.max(rho.hermiticity_gap().as_f64());
            rho = rho.hermitian_part();
        }
        let norm = rho.frobenius_norm();
        if !rho.is_finite() || norm > blowup {
            return Err(Error::Overflow { norm: norm.as_f64() });
        }
        times.push(h * T::lit(k as f64));
        states.push(rho.clone());
    }
    if h < T::zero() {
        times.reverse();
        states.reverse();
    }
    let mut traj = Trajectory::new(spec.clone(), times, states, rho0.clone(), symmetrize)?;
    traj.symmetrization_drift = symmetrize.then_some(drift);
    Ok(traj)
}

/// RK4 of the nonlinear Schrödinger flow `dPsi/dt = -i sum_{k<n} <A^k> A^{n-k} Psi`;
/// returns `|Psi(t_end)><Psi(t_end)|`.
pub fn rk4_nlse_projector<T: Real>(
    spec: &ModelSpec<T>,
    psi0: &StateVector<T>,
    t_end: T,
    dt: T,
) -> Result<OperatorMatrix<T>> {
    if !(dt > T::zero()) {
        return Err(Error::InvalidParameter("dt must be > 0".into()));
    }
    if psi0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: psi0.dim() });
    }
    let steps = (t_end.abs() / dt).round().to_usize().unwrap_or(0).max(1);
    let h = t_end / T::lit(steps as f64);
    let hc = |c: T| real(c);
    let mut psi = psi0.clone();
    for _ in 0..steps {
        let k1 = nlse_rhs(spec, &psi);
        let k2 = nlse_rhs(spec, &psi.add(&k1.scale(hc(h * T::lit(0.5)))));
        let k3 = nlse_rhs(spec, &psi.add(&k2.scale(hc(h * T::lit(0.5)))));
        let k4 = nlse_rhs(spec, &psi.add(&k3.scale(hc(h))));
        let incr = k1.add(&k2.scale(hc(T::lit(2.0)))).add(&k3.scale(hc(T::lit(2.0)))).add(&k4);
        psi = psi.add(&incr.scale(hc(h / T::lit(6.0))));
        if !psi.is_finite() {
            return Err(Error::NonFinite { context: "NSE integration" });
        }
    }
    Ok(OperatorMatrix::outer(&psi, &psi.conj()))
}

