//! Binary Darboux dressing for the nonlinear von Neumann family
//!
//! ```text
//! i d(rho)/dt = sum_{k=0..n} [A^{n-k} rho A^k, rho]
//! ```
//!
//! Seeds with closed-form evolution are dressed with a rank-one projector
//! built from conjugated Lax solutions; every produced trajectory can be
//! certified by [`verify::run_suite`].
//!
//! The numerical core is generic over the real type (`f32` or `f64`); the
//! aliases below fix it to `f64`, with `F32`-suffixed variants for `f32`.

// `!(x <= tol)` is used deliberately so that NaN counts as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod darboux;
pub mod error;
pub mod lax;
pub mod model;
pub mod operator;
pub mod scalar;
pub mod scenario;
pub mod seed;
pub mod symmetry;
pub mod tolerances;
pub mod trajectory;
pub mod verify;

pub use darboux::{dress, dressed_trajectory, explicit_eavn, projector, DressedState};
pub use error::{Error, Result};
pub use lax::{solve_initial, ZPins};
pub use model::{residual, rhs};
pub use operator::{commutator, eig_hermitian, mat_exp, trace_moments};
pub use scalar::{Cx, Real};
pub use seed::{
    make_anticommuting_seed, make_commuting_seed, make_delta_commuting_seed, make_pure_state_seed,
    SeedFamily,
};
pub use symmetry::{normalize_to_density, ShiftSpec};
pub use tolerances::Tolerances;
pub use trajectory::rk4_integrate;
pub use verify::{run_suite, CheckResult, SuiteOptions, VerificationReport};

pub type Complex64 = Cx<f64>;
pub type OperatorMatrix = operator::OperatorMatrix<f64>;
pub type StateVector = operator::StateVector<f64>;
pub type ModelSpec = model::ModelSpec<f64>;
pub type SeedSolution = seed::SeedSolution<f64>;
pub type DarbouxParams = lax::DarbouxParams<f64>;
pub type LaxSolution = lax::LaxSolution<f64>;
pub type DressedSolution = darboux::DressedSolution<f64>;
pub type Trajectory = trajectory::Trajectory<f64>;

pub type Complex32 = Cx<f32>;
pub type OperatorMatrixF32 = operator::OperatorMatrix<f32>;
pub type StateVectorF32 = operator::StateVector<f32>;
pub type ModelSpecF32 = model::ModelSpec<f32>;
pub type SeedSolutionF32 = seed::SeedSolution<f32>;
pub type DarbouxParamsF32 = lax::DarbouxParams<f32>;
pub type LaxSolutionF32 = lax::LaxSolution<f32>;
pub type DressedSolutionF32 = darboux::DressedSolution<f32>;
pub type TrajectoryF32 = trajectory::Trajectory<f32>;
