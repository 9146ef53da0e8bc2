//! The equation family `i drho/dt = sum_{k=0..n} [A^{n-k} rho A^k, rho]`.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::operator::{commutator, eig_hermitian_with, HermitianEigen, OperatorMatrix};
use crate::scalar::{imag_unit, real, Cx, Real};
use crate::tolerances::Tolerances;

/// One member of the family: nonlinearity order `n` and the self-adjoint,
/// time-independent operator `A`.
///
/// Powers `A^0 ..= A^{n+1}` and the spectral decomposition of `A` are built
/// once at construction; clones share them.
#[derive(Debug, Clone)]
pub struct ModelSpec<T: Real> {
    n: usize,
    cache: Arc<ModelCache<T>>,
}

#[derive(Debug)]
struct ModelCache<T: Real> {
    powers: Vec<OperatorMatrix<T>>,
    eigen: HermitianEigen<T>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(n: usize, a: OperatorMatrix<T>) -> Result<Self> {
        Self::with_tolerances(n, a, &Tolerances::for_scalar::<T>())
    }

    pub fn with_tolerances(n: usize, a: OperatorMatrix<T>, tol: &Tolerances) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("nonlinearity order n must be >= 1".into()));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite { context: "model operator A" });
        }
        if !a.is_hermitian(tol.model_hermitian) {
            return Err(Error::NotHermitian { gap: a.hermiticity_gap().as_f64() });
        }
        let a = a.hermitian_part();
        let eigen = eig_hermitian_with(&a, tol)?;
        let mut powers = Vec::with_capacity(n + 2);
        powers.push(OperatorMatrix::identity(a.dim()));
        for k in 1..=n + 1 {
            let next = &powers[k - 1] * &a;
            powers.push(next);
        }
        Ok(Self { n, cache: Arc::new(ModelCache { powers, eigen }) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.a().dim()
    }

    pub fn a(&self) -> &OperatorMatrix<T> {
        &self.cache.powers[1]
    }

    /// `A^k` for `k <= n + 1`.
    pub fn power(&self, k: usize) -> &OperatorMatrix<T> {
        &self.cache.powers[k]
    }

    pub fn eigen(&self) -> &HermitianEigen<T> {
        &self.cache.eigen
    }

    /// `exp(s * sum_j coeffs[j] A^j)` through the spectral decomposition of `A`.
    pub fn exp_poly(&self, coeffs: &[Cx<T>], s: T) -> OperatorMatrix<T> {
        self.eigen().function(|alpha| poly_at(coeffs, alpha, s).exp())
    }

    fn check(&self, rho: &OperatorMatrix<T>) -> Result<()> {
        self.a().check_dim(rho)
    }
}

pub(crate) fn poly_at<T: Real>(coeffs: &[Cx<T>], x: T, s: T) -> Cx<T> {
    let mut acc = Cx::<T>::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc * s
}

/// `H(rho) = sum_{k=0..n} A^{n-k} rho A^k`.
pub fn hamiltonian_of<T: Real>(spec: &ModelSpec<T>, rho: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    spec.check(rho)?;
    let n = spec.n();
    let mut h = OperatorMatrix::zeros(rho.dim());
    for k in 0..=n {
        let term = &(spec.power(n - k) * rho) * spec.power(k);
        h += &term;
    }
    Ok(h)
}

/// Time derivative `-i [H(rho), rho]`.
pub fn rhs<T: Real>(spec: &ModelSpec<T>, rho: &OperatorMatrix<T>) -> Result<OperatorMatrix<T>> {
    let h = hamiltonian_of(spec, rho)?;
    Ok(commutator(&h, rho)?.scale(-imag_unit::<T>()))
}

/// The same derivative from the equivalent form `-i sum_k [A^{n-k}, rho A^k rho]`.
pub fn rhs_commutator_form<T: Real>(
    spec: &ModelSpec<T>,
    rho: &OperatorMatrix<T>,
) -> Result<OperatorMatrix<T>> {
    spec.check(rho)?;
    let n = spec.n();
    let mut acc = OperatorMatrix::zeros(rho.dim());
    for k in 0..=n {
        let sandwich = &(rho * spec.power(k)) * rho;
        acc += &commutator(spec.power(n - k), &sandwich)?;
    }
    Ok(acc.scale(-imag_unit::<T>()))
}

/// [`rhs`], after checking that both algebraic forms agree to
/// `rhs_forms * max(1, |A|_F^n |rho|_F^2)`.
pub fn rhs_checked<T: Real>(
    spec: &ModelSpec<T>,
    rho: &OperatorMatrix<T>,
    tol: &Tolerances,
) -> Result<OperatorMatrix<T>> {
    let first = rhs(spec, rho)?;
    let second = rhs_commutator_form(spec, rho)?;
    let scale = T::one().max(
        spec.a().frobenius_norm().powi(spec.n() as i32) * rho.frobenius_norm().powi(2),
    );
    let gap = first.distance(&second) / scale;
    if gap.as_f64() > tol.rhs_forms {
        return Err(Error::InvariantViolation {
            what: "two forms of the right-hand side disagree".into(),
            value: gap.as_f64(),
            tolerance: tol.rhs_forms,
        });
    }
    Ok(first)
}

/// Finite-difference check that a trajectory solves the equation at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport<T: Real> {
    pub t: T,
    /// `|i drho/dt - [H(rho), rho]|_F` with the derivative from a 5-point stencil.
    pub residual_norm: T,
    pub tolerance_used: T,
    pub pass: bool,
}

/// Default stencil step `1e-3 (1 + |A|_F)^{-(n+1)}`; generator norms grow
/// like `|A|^{n+1}`.
pub fn default_step<T: Real>(spec: &ModelSpec<T>) -> T {
    T::lit(1e-3) / (T::one() + spec.a().frobenius_norm()).powi(spec.n() as i32 + 1)
}

/// `max(residual_floor, C h^4)`.
pub fn residual_tolerance<T: Real>(h: T, tol: &Tolerances) -> T {
    T::lit(tol.residual_floor).max(T::lit(tol.residual_stencil_constant) * h.powi(4))
}

/// Five-point central difference of an operator-valued function.
pub fn five_point_derivative<T: Real, F>(f: &F, t: T, h: T) -> Result<OperatorMatrix<T>>
where
    F: Fn(T) -> Result<OperatorMatrix<T>> + ?Sized,
{
    if !(h > T::zero()) {
        return Err(Error::InvalidParameter("finite-difference step must be > 0".into()));
    }
    let two = T::lit(2.0);
    let m2 = f(t - two * h)?;
    let m1 = f(t - h)?;
    let p1 = f(t + h)?;
    let p2 = f(t + two * h)?;
    let eight = real(T::lit(8.0));
    let mut d = &p1 - &m1;
    d = d.scale(eight);
    d -= &p2;
    d += &m2;
    Ok(d.scale_real(T::one() / (T::lit(12.0) * h)))
}

pub fn residual<T: Real, F>(
    spec: &ModelSpec<T>,
    rho_at: &F,
    t: T,
    h: T,
    tol: &Tolerances,
) -> Result<ResidualReport<T>>
where
    F: Fn(T) -> Result<OperatorMatrix<T>> + ?Sized,
{
    let derivative = five_point_derivative(rho_at, t, h)?;
    let rho = rho_at(t)?;
    let exact = rhs(spec, &rho)?;
    let residual_norm = derivative.distance(&exact);
    let tolerance_used = residual_tolerance(h, tol);
    Ok(ResidualReport { t, residual_norm, tolerance_used, pass: residual_norm <= tolerance_used })
}
