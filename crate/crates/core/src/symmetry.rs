//! Spectrum shift and rescaling of solutions, and the normalization of a
//! Hermitian solution to a density matrix.
//!
//! `rho_X(t) = e^{-i(n+1) X A^n t} (rho(t) + X) e^{i(n+1) X A^n t}` and
//! `rho_Y(t) = Y rho(Y t)` map solutions to solutions whenever
//! `[X, A] = [X, rho] = 0` and `Y != 0`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::operator::{commutator, eig_hermitian, mat_exp, OperatorMatrix};
use crate::scalar::{real, Cx, Real};
use crate::tolerances::Tolerances;
use crate::trajectory::Evaluator;

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec<T: Real> {
    x: OperatorMatrix<T>,
    lambda: Option<T>,
}

impl<T: Real> ShiftSpec<T> {
    /// `X = Lambda I`.
    pub fn scalar(lambda: T, dim: usize) -> Self {
        Self { x: OperatorMatrix::identity(dim).scale_real(lambda), lambda: Some(lambda) }
    }

    /// General `X`, which must commute with `A` and `rho(0)`.
    pub fn general(
        x: OperatorMatrix<T>,
        spec: &ModelSpec<T>,
        rho0: &OperatorMatrix<T>,
        tol: &Tolerances,
    ) -> Result<Self> {
        spec.a().check_dim(&x)?;
        spec.a().check_dim(rho0)?;
        for (what, other) in [("[X, A] = 0", spec.a()), ("[X, rho(0)] = 0", rho0)] {
            let gap = commutator(&x, other)?.frobenius_norm().as_f64();
            if gap > tol.shift_commutation {
                return Err(Error::InvariantViolation {
                    what: what.into(),
                    value: gap,
                    tolerance: tol.shift_commutation,
                });
            }
        }
        Ok(Self { x, lambda: None })
    }

    pub fn x(&self) -> &OperatorMatrix<T> {
        &self.x
    }

    /// `Lambda` when `X = Lambda I`.
    pub fn lambda(&self) -> Option<T> {
        self.lambda
    }

    /// `e^{-i(n+1) X A^n t}`.
    fn frame(&self, spec: &ModelSpec<T>, t: T) -> Result<OperatorMatrix<T>> {
        let n = spec.n();
        let c = Cx::new(T::zero(), -T::lit((n + 1) as f64) * t);
        match self.lambda {
            Some(lambda) => {
                let mut coeffs = vec![Cx::<T>::new(T::zero(), T::zero()); n + 1];
                coeffs[n] = c * real(lambda);
                Ok(spec.exp_poly(&coeffs, T::one()))
            }
            None => mat_exp(&(&self.x * spec.power(n)).scale(c)),
        }
    }
}

/// `rho_X(t)`.
pub fn shift<T: Real, F>(spec: &ModelSpec<T>, rho_at: &F, x: &ShiftSpec<T>, t: T) -> Result<OperatorMatrix<T>>
where
    F: Fn(T) -> Result<OperatorMatrix<T>> + ?Sized,
{
    let rho = rho_at(t)?;
    rho.check_dim(x.x())?;
    let inner = &rho + x.x();
    if t.is_zero() {
        return Ok(inner);
    }
    let w = x.frame(spec, t)?;
    Ok(&(&w * &inner) * &w.adjoint())
}

/// `Y rho(Y t)`.
pub fn rescale<T: Real, F>(rho_at: &F, y: T, t: T) -> Result<OperatorMatrix<T>>
where
    F: Fn(T) -> Result<OperatorMatrix<T>> + ?Sized,
{
    check_y(y)?;
    Ok(rho_at(y * t)?.scale_real(y))
}

fn check_y<T: Real>(y: T) -> Result<()> {
    if y.is_zero() || !y.is_finite() {
        return Err(Error::InvalidParameter("rescale factor Y must be finite and nonzero".into()));
    }
    Ok(())
}

/// [`shift`] as an evaluator.
pub fn shifted_evaluator<T: Real>(
    spec: &ModelSpec<T>,
    inner: Evaluator<T>,
    x: ShiftSpec<T>,
) -> Evaluator<T> {
    let spec = spec.clone();
    Arc::new(move |t| shift(&spec, inner.as_ref(), &x, t))
}

/// [`rescale`] as an evaluator.
pub fn rescaled_evaluator<T: Real>(inner: Evaluator<T>, y: T) -> Result<Evaluator<T>> {
    check_y(y)?;
    Ok(Arc::new(move |t| rescale(inner.as_ref(), y, t)))
}

/// Shift then rescale turning a Hermitian solution into a density matrix:
/// `rho_dm(t) = Y rho_X(Y t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityNormalization<T: Real> {
    pub shift: ShiftSpec<T>,
    pub lambda: T,
    pub y: T,
}

impl<T: Real> DensityNormalization<T> {
    pub fn rho_at<F>(&self, spec: &ModelSpec<T>, rho_at: &F, t: T) -> Result<OperatorMatrix<T>>
    where
        F: Fn(T) -> Result<OperatorMatrix<T>> + ?Sized,
    {
        let shifted = |s: T| shift(spec, rho_at, &self.shift, s);
        rescale(&shifted, self.y, t)
    }

    pub fn evaluator(&self, spec: &ModelSpec<T>, inner: Evaluator<T>) -> Result<Evaluator<T>> {
        rescaled_evaluator(shifted_evaluator(spec, inner, self.shift.clone()), self.y)
    }
}

/// `Lambda = max(0, -lambda_min(rho(0))) + margin`, `Y = 1/(Tr rho(0) + Lambda dim)`.
pub fn normalize_to_density<T: Real>(
    rho0: &OperatorMatrix<T>,
    margin: T,
    tol: &Tolerances,
) -> Result<DensityNormalization<T>> {
    if !rho0.is_hermitian(tol.hermitian_input) {
        return Err(Error::NotHermitian { gap: rho0.hermiticity_gap().as_f64() });
    }
    if margin < T::zero() {
        return Err(Error::InvalidParameter("margin must be >= 0".into()));
    }
    let dim = rho0.dim();
    let min = eig_hermitian(&rho0.hermitian_part())?.min_value();
    let lambda = T::zero().max(-min) + margin;
    let total = rho0.trace().re + lambda * T::lit(dim as f64);
    if total.abs().as_f64() <= tol.trace * T::one().max(rho0.frobenius_norm()).as_f64() {
        return Err(Error::Unnormalizable);
    }
    Ok(DensityNormalization { shift: ShiftSpec::scalar(lambda, dim), lambda, y: T::one() / total })
}

/// `Tr(rho A) = 0` with `A > 0` and `rho != 0` rules out `rho >= 0`; such a
/// seed needs a shift before it can be a density matrix.
pub fn positivity_obstructed<T: Real>(
    rho0: &OperatorMatrix<T>,
    a: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<bool> {
    let a_min = eig_hermitian(&a.hermitian_part())?.min_value();
    let tr = (rho0 * a).trace().norm().as_f64();
    Ok(a_min > T::zero() && tr <= tol.seed_invariant && rho0.frobenius_norm().as_f64() > tol.seed_invariant)
}
