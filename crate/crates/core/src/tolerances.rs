//! The single tolerance record shared by every module.
//!
//! Defaults are tuned for `f64`. [`Tolerances::for_scalar`] maps them to the
//! precision of another scalar type; [`Tolerances::scaled`] backs the CLI
//! `--tol-scale` flag.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Precondition of the Hermitian eigensolver.
    pub hermitian_input: f64,
    /// `A` must be self-adjoint to this relative gap.
    pub model_hermitian: f64,
    /// Off-diagonal Frobenius mass (relative) at which Jacobi stops.
    pub jacobi_convergence: f64,
    pub jacobi_max_sweeps: usize,
    /// Largest dimension accepted by the general eigen-pair solver.
    pub eig_dim_cap: usize,
    /// Relative residual `|Mv - zv| / (|M|_F |v|)` an eigen-pair must meet.
    pub eig_pair_residual: f64,
    /// Relative distance under which polynomial roots are merged.
    pub root_cluster: f64,
    /// Relative tie window of the lexicographic eigenvalue selection.
    pub eigen_tie: f64,
    /// Relative pivot size treated as zero when extracting a null vector.
    pub null_pivot: f64,
    /// Structural invariants of seed solutions.
    pub seed_invariant: f64,
    /// Unit-norm requirement on pure-state vectors.
    pub normalization: f64,
    /// Agreement of the two algebraic forms of the right-hand side (relative).
    pub rhs_forms: f64,
    /// Absolute floor of the finite-difference residual tolerance.
    pub residual_floor: f64,
    /// Constant `C` in the residual tolerance `max(floor, C h^4)`.
    pub residual_stencil_constant: f64,
    /// Relative overlap `|<chi|phi>| / (|chi| |phi|)` below which dressing is singular.
    pub singular_overlap: f64,
    pub idempotency: f64,
    pub projector_trace: f64,
    /// Rational versus exponential form of the similarity operator.
    pub similarity_forms: f64,
    pub form_gap: f64,
    pub bridge_identity: f64,
    pub unitarity: f64,
    /// Sorted eigenvalues, Hermitian mode.
    pub spectrum: f64,
    /// Trace moments, general mode (relative to `max(1, |rho|_F^k)`).
    pub moments: f64,
    pub hermiticity: f64,
    pub trace: f64,
    /// Smallest eigenvalue allowed is `-positivity`.
    pub positivity: f64,
    /// Initial eigen relation of a Lax vector (relative to `|phi|`).
    pub lax_initial: f64,
    /// Eigen relation persistence along the flow (relative to `|phi|`).
    pub lax_persistence: f64,
    pub covariance_eigen: f64,
    pub covariance_time: f64,
    pub explicit_agreement: f64,
    /// `|F_a(t)|` below which the closed-form EAvNE solution is singular.
    pub explicit_singular: f64,
    /// Commutation requirements on the shift operator `X`.
    pub shift_commutation: f64,
    /// Norm growth beyond which the RK4 oracle rejects a step.
    pub rk4_blowup: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_input: 1e-10,
            model_hermitian: 1e-12,
            jacobi_convergence: 1e-14,
            jacobi_max_sweeps: 100,
            eig_dim_cap: 32,
            eig_pair_residual: 1e-9,
            root_cluster: 1e-6,
            eigen_tie: 1e-9,
            null_pivot: 1e-9,
            seed_invariant: 1e-11,
            normalization: 1e-12,
            rhs_forms: 1e-11,
            residual_floor: 1e-6,
            residual_stencil_constant: 1e4,
            singular_overlap: 1e-10,
            idempotency: 1e-11,
            projector_trace: 1e-11,
            similarity_forms: 1e-11,
            form_gap: 1e-9,
            bridge_identity: 1e-10,
            unitarity: 1e-10,
            spectrum: 1e-9,
            moments: 1e-8,
            hermiticity: 1e-10,
            trace: 1e-11,
            positivity: 1e-10,
            lax_initial: 1e-9,
            lax_persistence: 1e-8,
            covariance_eigen: 1e-9,
            covariance_time: 1e-8,
            explicit_agreement: 1e-8,
            explicit_singular: 1e-12,
            shift_commutation: 1e-11,
            rk4_blowup: 1e6,
        }
    }
}

impl Tolerances {
    /// Multiplies every accuracy threshold by `factor`. Iteration counts,
    /// dimension caps, singularity guards and the blow-up guard are left
    /// alone.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut t = *self;
        for field in t.accuracy_fields_mut() {
            *field *= factor;
        }
        t
    }

    /// Defaults carried over to the precision of `T`. A threshold asking for
    /// a given fraction of the available digits keeps that fraction:
    /// `x -> x^(ln eps_T / ln eps_f64)`, so `1e-9` in `f64` becomes about
    /// `1e-4` in `f32`. Singularity guards follow the same map.
    pub fn for_scalar<T: Real>() -> Self {
        let eps = T::epsilon().as_f64();
        if eps <= f64::EPSILON {
            return Self::default();
        }
        let power = eps.ln() / f64::EPSILON.ln();
        let mut t = Self::default();
        let stencil = t.residual_stencil_constant;
        for field in t.accuracy_fields_mut() {
            *field = field.powf(power);
        }
        t.residual_stencil_constant = stencil;
        t.singular_overlap = t.singular_overlap.powf(power);
        t.explicit_singular = t.explicit_singular.powf(power);
        t
    }

    fn accuracy_fields_mut(&mut self) -> [&mut f64; 29] {
        [
            &mut self.hermitian_input,
            &mut self.model_hermitian,
            &mut self.jacobi_convergence,
            &mut self.eig_pair_residual,
            &mut self.root_cluster,
            &mut self.eigen_tie,
            &mut self.null_pivot,
            &mut self.seed_invariant,
            &mut self.normalization,
            &mut self.rhs_forms,
            &mut self.residual_floor,
            &mut self.residual_stencil_constant,
            &mut self.idempotency,
            &mut self.projector_trace,
            &mut self.similarity_forms,
            &mut self.form_gap,
            &mut self.bridge_identity,
            &mut self.unitarity,
            &mut self.spectrum,
            &mut self.moments,
            &mut self.hermiticity,
            &mut self.trace,
            &mut self.positivity,
            &mut self.lax_initial,
            &mut self.lax_persistence,
            &mut self.covariance_eigen,
            &mut self.covariance_time,
            &mut self.explicit_agreement,
            &mut self.shift_commutation,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_leaves_counts_alone() {
        let t = Tolerances::default().scaled(10.0);
        assert_eq!(t.jacobi_max_sweeps, 100);
        assert_eq!(t.eig_dim_cap, 32);
        assert!((t.form_gap - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn f32_tolerances_are_looser() {
        let t = Tolerances::for_scalar::<f32>();
        assert!(t.idempotency > 1e-6 && t.idempotency < 1e-4);
        assert!(t.null_pivot < 1e-3 && t.root_cluster < 1e-2);
        assert!(t.singular_overlap > 1e-6);
        assert_eq!(t.residual_stencil_constant, 1e4);
        assert_eq!(Tolerances::for_scalar::<f64>(), Tolerances::default());
    }
}
