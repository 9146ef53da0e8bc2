//! Lax pairs of the seed: `|phi>`, `<chi|` and the optional covariance
//! probe `<psi|`, in closed form.
//!
//! For a seed written as `rho(t) = W(t) rho(0) W(t)^dagger` with `W` a
//! function of `A`, the right problem `i phi' = (H(rho) - mu A^{n+1}) phi`
//! is solved by `phi(t) = W(t) E(Yt) phi(0)`, where `E` is the propagator
//! of the untransformed seed with `mu_b = mu / Y`. Left problems use the
//! transposed construction.

use std::sync::Arc;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::model::{hamiltonian_of, ModelSpec};
use crate::operator::{
    diagonalize, eig_pair_general_with, mat_exp, Diagonalization, OperatorMatrix, StateVector, ZSelection,
};

/// Largest eigenvector condition number for which dense Lax propagators
/// run through the eigenbasis.
const DENSE_MAX_CONDITION: f64 = 1e6;
use crate::scalar::{real, Cx, Real};
use crate::seed::{SeedFamily, SeedSolution};
use crate::tolerances::Tolerances;

/// Optional pins for the eigenvalue selection; `None` uses the
/// lexicographic rule.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZPins<T: Real> {
    pub z_mu: Option<Cx<T>>,
    pub z_nu: Option<Cx<T>>,
    pub z_lambda: Option<Cx<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DarbouxParams<T: Real> {
    mu: Cx<T>,
    nu: Cx<T>,
    lambda: Option<Cx<T>>,
    pub pins: ZPins<T>,
}

impl<T: Real> DarbouxParams<T> {
    /// `nu = conj(mu)`; the dressed solution stays self-adjoint.
    pub fn hermitian(mu: Cx<T>) -> Result<Self> {
        check_nonzero("mu", mu)?;
        Ok(Self { mu, nu: mu.conj(), lambda: None, pins: ZPins::default() })
    }

    /// Independent `nu`; `nu == mu` is rejected (see [`DarbouxParams::identity`]).
    pub fn general(mu: Cx<T>, nu: Cx<T>) -> Result<Self> {
        check_nonzero("mu", mu)?;
        check_nonzero("nu", nu)?;
        if mu == nu {
            return Err(Error::InvalidParameter("nu = mu gives the identity transformation".into()));
        }
        Ok(Self { mu, nu, lambda: None, pins: ZPins::default() })
    }

    /// `nu = mu`: the transformation is the identity.
    pub fn identity(mu: Cx<T>) -> Result<Self> {
        check_nonzero("mu", mu)?;
        Ok(Self { mu, nu: mu, lambda: None, pins: ZPins::default() })
    }

    /// No validation; for fault-injection tests only.
    pub fn new_unchecked(mu: Cx<T>, nu: Cx<T>, lambda: Option<Cx<T>>) -> Self {
        Self { mu, nu, lambda, pins: ZPins::default() }
    }

    pub fn with_lambda(mut self, lambda: Cx<T>) -> Result<Self> {
        check_nonzero("lambda", lambda)?;
        if lambda == self.mu {
            return Err(Error::InvalidParameter("lambda = mu makes the psi transform singular".into()));
        }
        self.lambda = Some(lambda);
        Ok(self)
    }

    pub fn with_pins(mut self, pins: ZPins<T>) -> Self {
        self.pins = pins;
        self
    }

    pub fn mu(&self) -> Cx<T> {
        self.mu
    }

    pub fn nu(&self) -> Cx<T> {
        self.nu
    }

    pub fn lambda(&self) -> Option<Cx<T>> {
        self.lambda
    }

    pub fn hermitian_mode(&self) -> bool {
        self.nu == self.mu.conj()
    }

    pub fn is_identity(&self) -> bool {
        self.mu == self.nu
    }
}

fn check_nonzero<T: Real>(name: &str, v: Cx<T>) -> Result<()> {
    if v.is_zero() || !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite and nonzero")));
    }
    Ok(())
}

fn selection<T: Real>(pin: Option<Cx<T>>) -> ZSelection<T> {
    pin.map_or(ZSelection::Lexicographic, ZSelection::Pinned)
}

/// Propagator of the untransformed seed, `E(s)`.
#[derive(Debug, Clone)]
enum Propagator<T: Real> {
    /// `exp(s sum_j c_j A^j)`.
    Poly(Vec<Cx<T>>),
    /// `exp(s c (Delta_a - offset))`.
    Delta { coeff: Cx<T>, offset: Cx<T> },
    /// `exp(s M)` for a dense generator, through its eigenbasis when that is
    /// well conditioned. A single exponential carries an error of order
    /// `eps |e^{sM}|`, which swamps vectors in slowly growing directions.
    Dense { generator: OperatorMatrix<T>, eigen: Option<Diagonalization<T>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Right,
    Left,
}

/// Closed-form Lax pair of a seed for fixed `(mu, nu)`.
#[derive(Debug, Clone)]
pub struct LaxSolution<T: Real> {
    params: DarbouxParams<T>,
    seed: Arc<SeedSolution<T>>,
    tol: Tolerances,
    z_mu: Cx<T>,
    z_nu: Cx<T>,
    phi0: StateVector<T>,
    chi0: StateVector<T>,
    phi_prop: Propagator<T>,
    chi_prop: Propagator<T>,
    /// Growth rate `g` with `e^{sG} phi(0) = e^{gs} phi(0)`, when the dense
    /// generator has `phi(0)` as an eigenvector. Evaluating the scalar keeps
    /// `phi(t)` exactly in its eigenspace; propagating the vector lets
    /// roundoff seed faster-growing directions.
    phi_rate: Option<Cx<T>>,
    chi_rate: Option<Cx<T>>,
    /// `<chi| = <phi|` exactly.
    conjugate_pair: bool,
    multiplicity_mu: usize,
    multiplicity_nu: usize,
    psi: Option<(Cx<T>, StateVector<T>, Propagator<T>, Option<Cx<T>>)>,
}

/// `z_mu` and `|phi(0)>` for `(rho(0) - mu A) phi = z phi`.
pub fn solve_initial<T: Real>(
    seed: &SeedSolution<T>,
    mu: Cx<T>,
    pin: Option<Cx<T>>,
    tol: &Tolerances,
) -> Result<(Cx<T>, StateVector<T>)> {
    check_nonzero("mu", mu)?;
    let m = &seed.rho0() - &seed.spec().a().scale(mu);
    let pair = eig_pair_general_with(&m, selection(pin), tol)?;
    Ok((pair.z, pair.vector))
}

/// `z` and row `<c|` with `<c|(rho(0) - lambda A) = z <c|`.
pub fn solve_initial_left<T: Real>(
    seed: &SeedSolution<T>,
    lambda: Cx<T>,
    pin: Option<Cx<T>>,
    tol: &Tolerances,
) -> Result<(Cx<T>, StateVector<T>, usize)> {
    check_nonzero("spectral parameter", lambda)?;
    let m = (&seed.rho0() - &seed.spec().a().scale(lambda)).transpose();
    let pair = eig_pair_general_with(&m, selection(pin), tol)?;
    Ok((pair.z, pair.vector, pair.multiplicity))
}

impl<T: Real> LaxSolution<T> {
    pub fn new(seed: &SeedSolution<T>, params: DarbouxParams<T>, tol: &Tolerances) -> Result<Self> {
        let seed = Arc::new(seed.clone());
        check_nonzero("mu", params.mu)?;
        check_nonzero("nu", params.nu)?;
        let m_mu = &seed.rho0() - &seed.spec().a().scale(params.mu);
        let right = eig_pair_general_with(&m_mu, selection(params.pins.z_mu), tol)?;
        let conjugate_pair =
            params.hermitian_mode() && seed.rho0().is_hermitian(tol.hermitian_input);
        let (z_nu, chi0, multiplicity_nu) = if conjugate_pair {
            (right.z.conj(), right.vector.conj(), right.multiplicity)
        } else {
            solve_initial_left(&seed, params.nu, params.pins.z_nu, tol)?
        };
        let phi_prop = base_propagator(&seed, params.mu, right.z, Side::Right, tol)?;
        let chi_prop = base_propagator(&seed, params.nu, z_nu, Side::Left, tol)?;
        let psi = match params.lambda {
            Some(lambda) => {
                let (z, c, mult) = solve_initial_left(&seed, lambda, params.pins.z_lambda, tol)?;
                let prop = base_propagator(&seed, lambda, z, Side::Left, tol)?;
                let rate = eigen_rate(&prop, &c, Side::Left, mult, tol);
                Some((z, c, prop, rate))
            }
            None => None,
        };
        let phi_rate = eigen_rate(&phi_prop, &right.vector, Side::Right, right.multiplicity, tol);
        let chi_rate = eigen_rate(&chi_prop, &chi0, Side::Left, multiplicity_nu, tol);
        Ok(Self {
            params,
            seed,
            tol: *tol,
            z_mu: right.z,
            z_nu,
            phi0: right.vector,
            chi0,
            phi_prop,
            chi_prop,
            phi_rate,
            chi_rate,
            conjugate_pair,
            multiplicity_mu: right.multiplicity,
            multiplicity_nu,
            psi,
        })
    }

    /// Replaces `|phi(0)>` without any check; for fault-injection tests.
    pub fn with_phi0_unchecked(mut self, phi0: StateVector<T>) -> Self {
        self.phi0 = phi0;
        self.phi_rate = None;
        self
    }

    pub fn params(&self) -> &DarbouxParams<T> {
        &self.params
    }

    pub fn seed(&self) -> &SeedSolution<T> {
        &self.seed
    }

    pub fn spec(&self) -> &ModelSpec<T> {
        self.seed.spec()
    }

    pub fn z_mu(&self) -> Cx<T> {
        self.z_mu
    }

    pub fn z_nu(&self) -> Cx<T> {
        self.z_nu
    }

    pub fn z_lambda(&self) -> Option<Cx<T>> {
        self.psi.as_ref().map(|p| p.0)
    }

    pub fn phi0(&self) -> &StateVector<T> {
        &self.phi0
    }

    pub fn chi0(&self) -> &StateVector<T> {
        &self.chi0
    }

    pub fn psi0(&self) -> Option<&StateVector<T>> {
        self.psi.as_ref().map(|p| &p.1)
    }

    pub fn is_conjugate_pair(&self) -> bool {
        self.conjugate_pair
    }

    /// The left eigenvector was chosen from a repeated eigenvalue.
    pub fn left_choice_ambiguous(&self) -> bool {
        !self.conjugate_pair && self.multiplicity_nu > 1
    }

    pub fn multiplicity_mu(&self) -> usize {
        self.multiplicity_mu
    }

    /// Constant generator `G = H(rho(0)) - mu A^{n+1} - K` of the right
    /// problem in the frame co-moving with the seed.
    pub fn generator_phi(&self) -> Result<OperatorMatrix<T>> {
        frame_generator(&self.seed, self.params.mu)
    }

    /// Unnormalized `|phi(t)>`.
    pub fn phi_raw(&self, t: T) -> Result<StateVector<T>> {
        if t.is_zero() {
            return Ok(self.phi0.clone());
        }
        let inner = match self.phi_rate {
            Some(g) => self.phi0.scale((g * real(self.scaled(t))).exp()),
            None => apply(&self.seed, &self.phi_prop, Side::Right, &self.phi0, self.scaled(t))?,
        };
        finite(self.frame(t, Side::Right, &inner), "phi(t)")
    }

    /// Unnormalized row components of `<chi(t)|`.
    pub fn chi_raw(&self, t: T) -> Result<StateVector<T>> {
        if self.conjugate_pair {
            return Ok(self.phi_raw(t)?.conj());
        }
        if t.is_zero() {
            return Ok(self.chi0.clone());
        }
        let inner = match self.chi_rate {
            Some(g) => self.chi0.scale((g * real(self.scaled(t))).exp()),
            None => apply(&self.seed, &self.chi_prop, Side::Left, &self.chi0, self.scaled(t))?,
        };
        finite(self.frame(t, Side::Left, &inner), "chi(t)")
    }

    /// Unnormalized row components of `<psi(t)|`, when `lambda` is set.
    pub fn psi_raw(&self, t: T) -> Result<StateVector<T>> {
        let (_, psi0, prop, rate) = self
            .psi
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("lambda not set".into()))?;
        if t.is_zero() {
            return Ok(psi0.clone());
        }
        let inner = match rate {
            Some(g) => psi0.scale((*g * real(self.scaled(t))).exp()),
            None => apply(&self.seed, prop, Side::Left, psi0, self.scaled(t))?,
        };
        finite(self.frame(t, Side::Left, &inner), "psi(t)")
    }

    /// `|phi(t)>` at unit norm; the projector is invariant under rescaling.
    pub fn phi_at(&self, t: T) -> Result<StateVector<T>> {
        self.phi_raw(t)?.normalized()
    }

    pub fn chi_at(&self, t: T) -> Result<StateVector<T>> {
        if self.conjugate_pair {
            return Ok(self.phi_at(t)?.conj());
        }
        self.chi_raw(t)?.normalized()
    }

    pub fn psi_at(&self, t: T) -> Result<StateVector<T>> {
        self.psi_raw(t)?.normalized()
    }

    /// Carries a right vector from time `t0` to `t1` along the Lax flow.
    pub fn transport_phi(&self, v: &StateVector<T>, t0: T, t1: T) -> Result<StateVector<T>> {
        let back = self.frame(-t0, Side::Right, v);
        let inner =
            apply(&self.seed, &self.phi_prop, Side::Right, &back, self.scaled(t1 - t0))?;
        finite(self.frame(t1, Side::Right, &inner), "transported phi")
    }

    /// `|(rho(t) - mu A) phi(t) - z_mu phi(t)|` for the unit `phi(t)`.
    pub fn eigen_residual(&self, t: T) -> Result<T> {
        let phi = self.phi_at(t)?;
        let m = &self.seed.rho_at(t) - &self.spec().a().scale(self.params.mu);
        Ok(m.apply(&phi).sub(&phi.scale(self.z_mu)).norm())
    }

    /// `|<chi|(rho(t) - nu A) - z_nu <chi||` for the unit `<chi(t)|`.
    pub fn left_eigen_residual(&self, t: T) -> Result<T> {
        let chi = self.chi_at(t)?;
        let m = &self.seed.rho_at(t) - &self.spec().a().scale(self.params.nu);
        Ok(m.apply_left(&chi).sub(&chi.scale(self.z_nu)).norm())
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    fn scaled(&self, t: T) -> T {
        self.seed.rescale_factor() * t
    }

    /// `W(t) v` (right) or `v^T W(t)^dagger` (left).
    fn frame(&self, t: T, side: Side, v: &StateVector<T>) -> StateVector<T> {
        let generator = self.seed.frame_generator();
        if generator.iter().all(|c| c.is_zero()) {
            return v.clone();
        }
        let s = self.scaled(t);
        let eigen = self.spec().eigen();
        match side {
            Side::Right => eigen.apply_function(|x| crate::model::poly_at(&generator, x, s).exp(), v),
            Side::Left => {
                eigen.apply_function_left(|x| (-crate::model::poly_at(&generator, x, s)).exp(), v)
            }
        }
    }
}

/// `g` with `G v = g v` (right) or `v^T G = g v^T` (left) for a dense
/// generator and a simple eigenvalue. In the seed's co-moving frame the Lax
/// matrix is constant, so the flow maps its `z`-eigenspace into itself; a
/// one-dimensional eigenspace makes `v` an eigenvector of `G`.
fn eigen_rate<T: Real>(
    prop: &Propagator<T>,
    v: &StateVector<T>,
    side: Side,
    multiplicity: usize,
    tol: &Tolerances,
) -> Option<Cx<T>> {
    let Propagator::Dense { generator, .. } = prop else {
        return None;
    };
    if multiplicity != 1 {
        return None;
    }
    let gv = match side {
        Side::Right => generator.apply(v),
        Side::Left => generator.apply_left(v),
    };
    let norm2 = v.norm() * v.norm();
    if !(norm2 > T::zero()) {
        return None;
    }
    let g = v.inner(&gv) / real(norm2);
    let gap = gv.sub(&v.scale(g)).norm();
    let bound = T::lit(tol.eig_pair_residual) * T::one().max(generator.frobenius_norm()) * v.norm();
    (gap <= bound).then_some(g)
}

fn finite<T: Real>(v: StateVector<T>, context: &'static str) -> Result<StateVector<T>> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { context })
    }
}

/// `G = H(rho(0)) - mu A^{n+1} - K_eff` with `K_eff` the seed's frame generator.
fn frame_generator<T: Real>(seed: &SeedSolution<T>, mu: Cx<T>) -> Result<OperatorMatrix<T>> {
    let spec = seed.spec();
    let n = spec.n();
    let mut g = hamiltonian_of(spec, &seed.rho0())?;
    g -= &spec.power(n + 1).scale(mu);
    let y = real(seed.rescale_factor());
    // frame_generator() holds -i K per unit of Y t
    for (j, c) in seed.frame_generator().iter().enumerate() {
        if !c.is_zero() {
            let k_coeff = *c * Cx::new(T::zero(), T::one()) * y;
            g -= &spec.power(j).scale(k_coeff);
        }
    }
    Ok(g)
}

/// Propagator of the untransformed seed for spectral parameter `p` and
/// eigenvalue `z` (both of the transformed seed).
fn base_propagator<T: Real>(
    seed: &SeedSolution<T>,
    p: Cx<T>,
    z: Cx<T>,
    side: Side,
    tol: &Tolerances,
) -> Result<Propagator<T>> {
    let n = seed.spec().n();
    let y = seed.rescale_factor();
    let p_b = p / y;
    let z_b = z / y - real(seed.shift());
    let i = Cx::new(T::zero(), T::one());
    // left problems run with the opposite sign of i
    let sign = if side == Side::Right { -i } else { i };
    match seed.family() {
        SeedFamily::Anticommuting => {
            let mut coeffs = vec![Cx::<T>::zero(); n + 2];
            if n % 2 == 0 {
                // G_b = z_b A^n on the eigenvector
                coeffs[n] = sign * z_b;
            } else {
                // G_b = -p_b A^{n+1}
                coeffs[n + 1] = -sign * p_b;
            }
            Ok(Propagator::Poly(coeffs))
        }
        SeedFamily::DeltaCommuting => {
            if n != 1 {
                return Err(Error::Unsupported(format!(
                    "delta-commuting Lax propagator requires n = 1, got {n}"
                )));
            }
            let a = real(seed.a_param().expect("delta seed carries a"));
            // G_b = (Delta_a - (z_b^2 - a z_b)) / p_b on the eigenvector
            Ok(Propagator::Delta { coeff: sign / p_b, offset: z_b * z_b - a * z_b })
        }
        SeedFamily::PureState | SeedFamily::Commuting => {
            let generator = frame_generator(seed, p)?.scale(real(T::one() / y)).scale(sign);
            let eigen = diagonalize(&generator, DENSE_MAX_CONDITION, tol)?;
            Ok(Propagator::Dense { generator, eigen })
        }
    }
}

fn apply<T: Real>(
    seed: &SeedSolution<T>,
    prop: &Propagator<T>,
    side: Side,
    v: &StateVector<T>,
    s: T,
) -> Result<StateVector<T>> {
    match prop {
        Propagator::Poly(coeffs) => {
            let eigen = seed.spec().eigen();
            let f = |x: T| crate::model::poly_at(coeffs, x, s).exp();
            Ok(match side {
                Side::Right => eigen.apply_function(f, v),
                Side::Left => eigen.apply_function_left(f, v),
            })
        }
        Propagator::Delta { coeff, offset } => {
            let eigen = seed.delta_eigen().expect("delta seed carries Delta_a");
            let f = |d: T| (*coeff * (real(d) - *offset) * real(s)).exp();
            Ok(match side {
                Side::Right => eigen.apply_function(f, v),
                Side::Left => eigen.apply_function_left(f, v),
            })
        }
        Propagator::Dense { generator, eigen } => Ok(match (eigen, side) {
            (Some(d), Side::Right) => d.apply_function(|l| (l * real(s)).exp(), v),
            (Some(d), Side::Left) => d.apply_function_left(|l| (l * real(s)).exp(), v),
            (None, _) => {
                let e = mat_exp(&generator.scale_real(s))?;
                match side {
                    Side::Right => e.apply(v),
                    Side::Left => e.apply_left(v),
                }
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hamiltonian_of;
    use crate::operator::OperatorMatrix;
    use crate::seed::{
        make_anticommuting_seed, make_commuting_seed, make_delta_commuting_seed,
        make_pure_state_seed,
    };

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn sigma_x_seed(n: usize) -> SeedSolution<f64> {
        make_anticommuting_seed(n, &[1.0], &[1.0], &tol()).unwrap()
    }

    /// RK4 of the Lax equation along `seed.rho_at`; `left` integrates the
    /// transposed problem for a row vector.
    fn rk4(seed: &SeedSolution<f64>, p: Cx<f64>, v0: &StateVector<f64>, t_end: f64, left: bool) -> StateVector<f64> {
        let spec = seed.spec();
        let n = spec.n();
        let field = |t: f64, v: &StateVector<f64>| {
            let g = &hamiltonian_of(spec, &seed.rho_at(t)).unwrap() - &spec.power(n + 1).scale(p);
            if left {
                g.transpose().apply(v).scale(c(0.0, 1.0))
            } else {
                g.apply(v).scale(c(0.0, -1.0))
            }
        };
        let steps = 4000;
        let h = t_end / steps as f64;
        let mut v = v0.clone();
        let mut t = 0.0;
        for _ in 0..steps {
            let k1 = field(t, &v);
            let k2 = field(t + h / 2.0, &v.add(&k1.scale(c(h / 2.0, 0.0))));
            let k3 = field(t + h / 2.0, &v.add(&k2.scale(c(h / 2.0, 0.0))));
            let k4 = field(t + h, &v.add(&k3.scale(c(h, 0.0))));
            let incr = k1.add(&k2.scale(c(2.0, 0.0))).add(&k3.scale(c(2.0, 0.0))).add(&k4);
            v = v.add(&incr.scale(c(h / 6.0, 0.0)));
            t += h;
        }
        v
    }

    fn rel(a: &StateVector<f64>, b: &StateVector<f64>) -> f64 {
        a.sub(b).norm() / b.norm().max(1.0)
    }

    fn cross_check(seed: &SeedSolution<f64>, params: DarbouxParams<f64>) {
        let lax = LaxSolution::new(seed, params, &tol()).unwrap();
        for &t in &[1.3, -0.9] {
            let phi = rk4(seed, params.mu(), lax.phi0(), t, false);
            assert!(rel(&lax.phi_raw(t).unwrap(), &phi) < 1e-6, "phi at {t}");
            let chi = rk4(seed, params.nu(), lax.chi0(), t, true);
            assert!(rel(&lax.chi_raw(t).unwrap(), &chi) < 1e-6, "chi at {t}");
            if let Some(lambda) = params.lambda() {
                let psi = rk4(seed, lambda, lax.psi0().unwrap(), t, true);
                assert!(rel(&lax.psi_raw(t).unwrap(), &psi) < 1e-6, "psi at {t}");
            }
            assert!(lax.eigen_residual(t).unwrap() < 1e-8);
            assert!(lax.left_eigen_residual(t).unwrap() < 1e-8);
        }
    }

    #[test]
    fn sigma_x_pair() {
        let lax = LaxSolution::new(&sigma_x_seed(2), DarbouxParams::hermitian(c(0.0, 1.0)).unwrap(), &tol())
            .unwrap();
        assert!(lax.z_mu().norm() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let expected = StateVector::new(vec![c(s, 0.0), c(0.0, s)]).unwrap();
        assert!(lax.phi0().sub(&expected).norm() < 1e-12);
        for &t in &[0.0, 0.7, -3.0] {
            assert!(lax.phi_raw(t).unwrap().sub(&expected).norm() < 1e-12);
            assert!(lax.chi_raw(t).unwrap().sub(&expected.conj()).norm() < 1e-12);
        }
        assert!((lax.chi0().pair(lax.phi0()) - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn selection_examples() {
        let seed = sigma_x_seed(2);
        let (z, _) = solve_initial(&seed, c(0.0, 2.0), None, &tol()).unwrap();
        assert!((z - c(0.0, 3f64.sqrt())).norm() < 1e-10);
        let params = DarbouxParams::hermitian(c(0.0, 1.0)).unwrap().with_lambda(c(0.0, 3.0)).unwrap();
        let lax = LaxSolution::new(&seed, params, &tol()).unwrap();
        assert!((lax.z_lambda().unwrap() - c(0.0, 2.0 * 2f64.sqrt())).norm() < 1e-10);
    }

    #[test]
    fn odd_n_scalar_decay() {
        let seed = sigma_x_seed(1);
        let lax = LaxSolution::new(&seed, DarbouxParams::hermitian(c(0.0, 1.0)).unwrap(), &tol())
            .unwrap();
        for &t in &[0.5f64, 2.0, -1.0] {
            let expected = lax.phi0().scale(c((-t).exp(), 0.0));
            assert!(lax.phi_raw(t).unwrap().sub(&expected).norm() < 1e-12 * expected.norm().max(1.0));
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(DarbouxParams::<f64>::hermitian(c(0.0, 0.0)).is_err());
        assert!(DarbouxParams::<f64>::general(c(1.0, 1.0), c(1.0, 1.0)).is_err());
        assert!(DarbouxParams::<f64>::general(c(1.0, 1.0), c(0.0, 0.0)).is_err());
        let p = DarbouxParams::hermitian(c(0.5, 1.0)).unwrap();
        assert!(p.hermitian_mode());
        assert!(p.with_lambda(c(0.5, 1.0)).is_err());
        assert!(DarbouxParams::general(c(0.5, 1.0), c(0.5, -1.0)).unwrap().hermitian_mode());
        assert!(DarbouxParams::identity(c(2.0, 0.0)).unwrap().is_identity());
    }

    #[test]
    fn commuting_diagonal_pencils() {
        let spec = ModelSpec::new(1, OperatorMatrix::from_real_diag(&[1.0, -1.0])).unwrap();
        let seed = make_commuting_seed(&spec, &OperatorMatrix::from_real_diag(&[0.3, 0.8]), &tol()).unwrap();
        let mu: Cx<f64> = c(0.2, 0.5);
        let (z, phi) = solve_initial(&seed, mu, None, &tol()).unwrap();
        let options = [c(0.3, 0.0) - mu, c(0.8, 0.0) + mu];
        let k = options.iter().position(|o: &Cx<f64>| (z - *o).norm() < 1e-12).expect("diagonal root");
        assert!((phi[k].norm() - 1.0).abs() < 1e-12);

        let params = DarbouxParams::general(mu, mu * 2.0).unwrap();
        let lax = LaxSolution::new(&seed, params, &tol()).unwrap();
        let chi = lax.chi0();
        assert!(chi.entries().iter().filter(|c| c.norm() > 1e-12).count() == 1);
        cross_check(&seed, params);
    }

    #[test]
    fn anticommuting_matches_rk4() {
        let seed = make_anticommuting_seed(2, &[1.0, 0.6], &[0.9, -0.4], &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.3, 0.8)).unwrap().with_lambda(c(-0.2, 1.1)).unwrap();
        cross_check(&seed, params);
        let seed3 = make_anticommuting_seed(3, &[0.8, 0.5], &[0.7, 0.3], &tol()).unwrap();
        cross_check(&seed3, DarbouxParams::hermitian(c(0.4, 0.9)).unwrap());
        cross_check(&seed3, DarbouxParams::general(c(0.4, 0.9), c(-0.3, 0.5)).unwrap());
    }

    #[test]
    fn delta_commuting_matches_rk4() {
        let seed = make_delta_commuting_seed(&[(0.2, 0.5), (-0.6, 0.3)], 0.7, &tol()).unwrap();
        let params = DarbouxParams::hermitian(c(0.6, 0.8)).unwrap().with_lambda(c(0.1, -0.7)).unwrap();
        cross_check(&seed, params);
        cross_check(&seed, DarbouxParams::general(c(0.6, 0.8), c(1.0, -0.3)).unwrap());
    }

    #[test]
    fn dense_flow_stays_in_eigenspace() {
        // generator modes grow at rates differing by ~2 per unit time; a
        // propagated vector would drift out of the eigenspace by |t| = 5
        let a = OperatorMatrix::from_rows(&[
            vec![c(0.159, 0.0), c(-0.337, 0.799)],
            vec![c(-0.337, -0.799), c(-0.849, 0.0)],
        ])
        .unwrap();
        let spec = ModelSpec::new(3, a).unwrap();
        let psi = StateVector::new(vec![c(0.6, 0.0), c(0.48, -0.64)]).unwrap();
        let seed = make_pure_state_seed(&spec, &psi, &tol()).unwrap().with_shift(0.23).unwrap();
        let params = DarbouxParams::hermitian(c(-0.77, -1.3)).unwrap().with_lambda(c(0.4, 1.1)).unwrap();
        let lax = LaxSolution::new(&seed, params, &tol()).unwrap();
        assert!(lax.phi_rate.is_some());
        for &t in &[-5.0, -2.5, 2.5, 5.0] {
            assert!(lax.eigen_residual(t).unwrap() < 1e-12, "t = {t}");
            assert!(lax.left_eigen_residual(t).unwrap() < 1e-12, "t = {t}");
        }
        // the scalar rate agrees with propagating the vector over short times
        let full = apply(&seed, &lax.phi_prop, Side::Right, lax.phi0(), 0.3).unwrap();
        let fast = lax.phi0().scale((lax.phi_rate.unwrap() * 0.3).exp());
        assert!(full.sub(&fast).norm() < 1e-12 * fast.norm());
        // a replaced phi(0) goes back to the full propagator
        let wrong = StateVector::new(vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(lax.with_phi0_unchecked(wrong).phi_rate.is_none());
    }

    #[test]
    fn pure_state_matches_rk4() {
        let a = OperatorMatrix::from_real_rows(&[&[0.7, 0.2, 0.0], &[0.2, -0.4, 0.3], &[0.0, 0.3, 0.1]])
            .unwrap();
        let spec = ModelSpec::new(2, a).unwrap();
        let psi = StateVector::new(vec![c(0.6, 0.0), c(0.0, 0.48), c(0.64, 0.0)]).unwrap();
        let seed = make_pure_state_seed(&spec, &psi, &tol()).unwrap();
        cross_check(&seed, DarbouxParams::hermitian(c(0.2, 0.7)).unwrap());
    }

    #[test]
    fn transformed_seeds_match_rk4() {
        let base = make_anticommuting_seed(2, &[1.0, 0.5], &[0.6, 0.8], &tol()).unwrap();
        let seed = base.with_shift(0.4).unwrap().with_rescale(0.8).unwrap();
        cross_check(&seed, DarbouxParams::hermitian(c(0.1, 0.9)).unwrap());
        let odd = make_anticommuting_seed(1, &[1.0], &[0.7], &tol()).unwrap();
        cross_check(&odd.with_shift(-0.3).unwrap().with_rescale(1.2).unwrap(), DarbouxParams::hermitian(c(0.2, 0.6)).unwrap());
        let delta = make_delta_commuting_seed(&[(0.3, 0.4)], 0.5, &tol()).unwrap();
        let moved = delta.with_shift(0.2).unwrap().with_rescale(-0.7).unwrap();
        cross_check(&moved, DarbouxParams::hermitian(c(0.5, 0.5)).unwrap().with_lambda(c(0.0, 1.5)).unwrap());
    }

    #[test]
    fn flow_is_a_group() {
        let seed = make_delta_commuting_seed(&[(0.2, 0.5), (-0.6, 0.3)], 0.7, &tol()).unwrap();
        let lax = LaxSolution::new(&seed, DarbouxParams::hermitian(c(0.6, 0.8)).unwrap(), &tol()).unwrap();
        let (s, t) = (0.7, 1.1);
        let direct = lax.phi_raw(s + t).unwrap();
        let composed = lax.transport_phi(&lax.phi_raw(s).unwrap(), s, s + t).unwrap();
        assert!(rel(&composed, &direct) < 1e-10);
    }

    #[test]
    fn generator_is_constant_in_frame() {
        let seed = make_anticommuting_seed(2, &[1.0], &[1.0], &tol()).unwrap();
        let lax = LaxSolution::new(&seed, DarbouxParams::hermitian(c(0.0, 1.0)).unwrap(), &tol()).unwrap();
        let g = lax.generator_phi().unwrap();
        assert!(g.apply(lax.phi0()).norm() < 1e-12);
    }
}
