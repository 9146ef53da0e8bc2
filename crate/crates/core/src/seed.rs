//! Seed solutions with closed-form time evolution.
//!
//! Every seed evolves by a conjugation `rho(t) = W(t) rho(0) W(t)^dagger`
//! whose generator is a real polynomial in `A` (zero for stationary seeds),
//! so the Lax engine never needs a generic integrator. Seeds may carry a
//! spectrum shift `Lambda` and a rescaling `Y`:
//!
//! `rho(t) = Y W(Yt) (rho_base(Yt) + Lambda) W(Yt)^dagger`,
//! `W(s) = exp(-i (n+1) Lambda A^n s)`.

use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{rhs, ModelSpec};
use crate::operator::{
    anticommutator, commutator, eig_hermitian_with, HermitianEigen, OperatorMatrix, StateVector,
};
use crate::scalar::{real, Cx, Real};
use crate::tolerances::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedFamily {
    /// Stationary, `A rho = -rho A`.
    Anticommuting,
    /// `n = 1`, `[rho^2 - a rho, A] = 0`; evolves as `exp(-iaAt) rho exp(iaAt)`.
    DeltaCommuting,
    /// `rho = |Psi><Psi|`; evolves under `sum_k Tr(rho A^k) A^{n-k}`.
    PureState,
    /// Stationary, `[rho, A] = 0`. The Darboux dressing is trivial.
    Commuting,
}

#[derive(Debug, Clone)]
pub struct SeedSolution<T: Real> {
    family: SeedFamily,
    spec: ModelSpec<T>,
    base_rho0: OperatorMatrix<T>,
    a: Option<T>,
    psi0: Option<StateVector<T>>,
    /// Real coefficients of the base generator `K = sum_j frame[j] A^j`.
    frame: Vec<T>,
    delta: Option<Arc<HermitianEigen<T>>>,
    shift: T,
    scale: T,
}

impl<T: Real> SeedSolution<T> {
    fn new(
        family: SeedFamily,
        spec: ModelSpec<T>,
        base_rho0: OperatorMatrix<T>,
        frame: Vec<T>,
    ) -> Self {
        Self {
            family,
            spec,
            base_rho0,
            a: None,
            psi0: None,
            frame,
            delta: None,
            shift: T::zero(),
            scale: T::one(),
        }
    }

    pub fn family(&self) -> SeedFamily {
        self.family
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    /// The `a` of `Delta_a = rho^2 - a rho` (delta-commuting seeds only).
    pub fn a_param(&self) -> Option<T> {
        self.a
    }

    pub fn psi0(&self) -> Option<&StateVector<T>> {
        self.psi0.as_ref()
    }

    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn rescale_factor(&self) -> T {
        self.scale
    }

    pub fn is_transformed(&self) -> bool {
        !self.shift.is_zero() || self.scale != T::one()
    }

    /// Commuting seeds produce a projector commuting with `A` and `rho`.
    pub fn is_trivial(&self) -> bool {
        self.family == SeedFamily::Commuting
    }

    /// `rho_base(0)`, before shift and rescaling.
    pub fn base_rho0(&self) -> &OperatorMatrix<T> {
        &self.base_rho0
    }

    /// Real coefficients of the base conjugation generator in powers of `A`.
    pub fn frame(&self) -> &[T] {
        &self.frame
    }

    /// Spectral data of `Delta_a` (delta-commuting seeds only).
    pub fn delta_eigen(&self) -> Option<&HermitianEigen<T>> {
        self.delta.as_deref()
    }

    pub fn rho0(&self) -> OperatorMatrix<T> {
        self.base_rho0.add_identity(real(self.shift)).scale_real(self.scale)
    }

    /// `rho(t)`; `rho_at(0) == rho0()` exactly.
    pub fn rho_at(&self, t: T) -> OperatorMatrix<T> {
        let rho0 = self.rho0();
        if t.is_zero() {
            return rho0;
        }
        let generator = self.frame_generator();
        if generator.iter().all(|c| c.is_zero()) {
            return rho0;
        }
        let w = self.spec.exp_poly(&generator, self.scale * t);
        &(&w * &rho0) * &w.adjoint()
    }

    /// Coefficients of `-i (K + (n+1) Lambda A^n)` in powers of `A`, the
    /// exponent of `W(s) = exp(s * ...)`.
    pub fn frame_generator(&self) -> Vec<Cx<T>> {
        let n = self.spec.n();
        let mut coeffs: Vec<Cx<T>> =
            vec![Cx::zero(); (n + 1).max(self.frame.len())];
        for (j, &c) in self.frame.iter().enumerate() {
            coeffs[j] += Cx::new(T::zero(), -c);
        }
        coeffs[n] += Cx::new(T::zero(), -T::lit((n + 1) as f64) * self.shift);
        coeffs
    }

    /// Adds `Lambda * I` (the spectrum shift). Must precede any rescaling.
    pub fn with_shift(&self, lambda: T) -> Result<Self> {
        if self.scale != T::one() {
            return Err(Error::InvalidParameter(
                "shift must be applied before rescaling".into(),
            ));
        }
        let mut out = self.clone();
        out.shift += lambda;
        Ok(out)
    }

    /// `rho(t) -> Y rho(Y t)`.
    pub fn with_rescale(&self, y: T) -> Result<Self> {
        if y.is_zero() || !y.is_finite() {
            return Err(Error::InvalidParameter("rescale factor Y must be nonzero".into()));
        }
        let mut out = self.clone();
        out.scale *= y;
        Ok(out)
    }
}

/// `A = blockdiag(diag(alpha_j, -alpha_j))`, `rho = blockdiag(b_j sigma_x)`.
pub fn make_anticommuting_seed<T: Real>(
    n: usize,
    alphas: &[T],
    couplings: &[T],
    tol: &Tolerances,
) -> Result<SeedSolution<T>> {
    if alphas.is_empty() || alphas.len() != couplings.len() {
        return Err(Error::InvalidParameter(
            "anticommuting seed needs one coupling per alpha and at least one block".into(),
        ));
    }
    if let Some(j) = couplings.iter().position(|b| b.is_zero()) {
        return Err(Error::InvalidParameter(format!("coupling b[{j}] = 0 gives a trivial block")));
    }
    if let Some(j) = alphas.iter().position(|a| a.is_zero()) {
        return Err(Error::InvalidParameter(format!("alpha[{j}] = 0 gives a degenerate A pair")));
    }
    let a_blocks: Vec<_> =
        alphas.iter().map(|&al| OperatorMatrix::from_real_diag(&[al, -al])).collect();
    let rho_blocks: Vec<_> = couplings
        .iter()
        .map(|&b| OperatorMatrix::from_fn(2, |i, j| if i != j { real(b) } else { Cx::zero() }))
        .collect();
    let a = OperatorMatrix::block_diag(&a_blocks);
    let rho0 = OperatorMatrix::block_diag(&rho_blocks);
    let spec = ModelSpec::with_tolerances(n, a, tol)?;

    let anti = anticommutator(spec.a(), &rho0)?.frobenius_norm().as_f64();
    require("A rho + rho A = 0", anti, tol.seed_invariant)?;
    let tr = (&rho0 * spec.a()).trace().norm().as_f64();
    require("Tr(rho A) = 0", tr, tol.seed_invariant)?;
    certify_stationary(&spec, &rho0, tol)?;

    Ok(SeedSolution::new(SeedFamily::Anticommuting, spec, rho0, Vec::new()))
}

/// Block `j`: `H_j = diag(omega_j, omega_j + 1)`, `rho_j = (a/2) I + kappa_j sigma_x`,
/// so `Delta_a = (kappa_j^2 - a^2/4) I` on the block. Always `n = 1`.
pub fn make_delta_commuting_seed<T: Real>(
    blocks: &[(T, T)],
    a: T,
    tol: &Tolerances,
) -> Result<SeedSolution<T>> {
    if blocks.is_empty() {
        return Err(Error::InvalidParameter("delta-commuting seed needs at least one block".into()));
    }
    if !a.is_finite() {
        return Err(Error::InvalidParameter("a must be a finite real number".into()));
    }
    if let Some(j) = blocks.iter().position(|(_, k)| k.is_zero()) {
        return Err(Error::InvalidParameter(format!("kappa[{j}] = 0 gives a commuting block")));
    }
    let half_a = a * T::lit(0.5);
    let h_blocks: Vec<_> =
        blocks.iter().map(|&(w, _)| OperatorMatrix::from_real_diag(&[w, w + T::one()])).collect();
    let rho_blocks: Vec<_> = blocks
        .iter()
        .map(|&(_, k)| {
            OperatorMatrix::from_fn(2, |i, j| if i == j { real(half_a) } else { real(k) })
        })
        .collect();
    let h = OperatorMatrix::block_diag(&h_blocks);
    let rho0 = OperatorMatrix::block_diag(&rho_blocks);
    let spec = ModelSpec::with_tolerances(1, h, tol)?;

    let delta = &(&rho0 * &rho0) - &rho0.scale_real(a);
    let gap = commutator(&delta, spec.a())?.frobenius_norm().as_f64();
    require("[Delta_a, H] = 0", gap, tol.seed_invariant)?;
    let delta_eigen = eig_hermitian_with(&delta, tol)?;

    let mut seed = SeedSolution::new(SeedFamily::DeltaCommuting, spec, rho0, vec![T::zero(), a]);
    seed.a = Some(a);
    seed.delta = Some(Arc::new(delta_eigen));
    Ok(seed)
}

/// `rho = |Psi><Psi|` for a unit vector `Psi`.
pub fn make_pure_state_seed<T: Real>(
    spec: &ModelSpec<T>,
    psi0: &StateVector<T>,
    tol: &Tolerances,
) -> Result<SeedSolution<T>> {
    if psi0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: psi0.dim() });
    }
    let norm_gap = (psi0.norm() - T::one()).abs().as_f64();
    require("|Psi| = 1", norm_gap, tol.normalization)?;
    let rho0 = OperatorMatrix::outer(psi0, &psi0.conj());
    let idem = (&rho0 * &rho0).distance(&rho0).as_f64();
    require("rho^2 = rho", idem, tol.seed_invariant)?;
    let n = spec.n();
    // K = sum_k Tr(rho A^k) A^{n-k}
    let mut frame = vec![T::zero(); n + 1];
    for k in 0..=n {
        frame[n - k] = (&rho0 * spec.power(k)).trace().re;
    }
    let mut seed = SeedSolution::new(SeedFamily::PureState, spec.clone(), rho0, frame);
    seed.psi0 = Some(psi0.clone());
    Ok(seed)
}

/// Any `rho` commuting with `A`; stationary, flagged trivial.
pub fn make_commuting_seed<T: Real>(
    spec: &ModelSpec<T>,
    rho0: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<SeedSolution<T>> {
    spec.a().check_dim(rho0)?;
    let scale = T::one().max(rho0.frobenius_norm() * spec.a().frobenius_norm()).as_f64();
    let gap = commutator(rho0, spec.a())?.frobenius_norm().as_f64();
    require("[rho, A] = 0", gap, tol.seed_invariant * scale)?;
    Ok(SeedSolution::new(SeedFamily::Commuting, spec.clone(), rho0.clone(), Vec::new()))
}

/// Closed-form pure-state solution `U(t) rho(0) U(t)^dagger`,
/// `U(t) = exp(-i sum_k Tr(rho(0) A^k) A^{n-k} t)`.
pub fn pure_state_solution<T: Real>(
    spec: &ModelSpec<T>,
    psi0: &StateVector<T>,
    t: T,
) -> Result<OperatorMatrix<T>> {
    let tol = Tolerances::for_scalar::<T>();
    let seed = make_pure_state_seed(spec, psi0, &tol)?;
    Ok(seed.rho_at(t))
}

/// `-i sum_{k=0}^{n-1} <Psi|A^k|Psi> A^{n-k} |Psi>`.
pub fn nlse_rhs<T: Real>(spec: &ModelSpec<T>, psi: &StateVector<T>) -> StateVector<T> {
    let n = spec.n();
    let mut acc = StateVector::new(vec![Cx::zero(); psi.dim()]).expect("non-empty");
    for k in 0..n {
        let moment = psi.inner(&spec.power(k).apply(psi));
        acc = acc.add(&spec.power(n - k).apply(psi).scale(moment));
    }
    acc.scale(Cx::new(T::zero(), -T::one()))
}

fn require(what: &str, value: f64, tolerance: f64) -> Result<()> {
    if value <= tolerance {
        Ok(())
    } else {
        Err(Error::InvariantViolation { what: what.into(), value, tolerance })
    }
}

fn certify_stationary<T: Real>(
    spec: &ModelSpec<T>,
    rho0: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<()> {
    let scale = T::one()
        .max(spec.a().frobenius_norm().powi(spec.n() as i32) * rho0.frobenius_norm().powi(2));
    let drift = (rhs(spec, rho0)?.frobenius_norm() / scale).as_f64();
    require("seed is stationary", drift, tol.seed_invariant)
}
