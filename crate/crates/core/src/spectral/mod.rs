//! Killed-walk operators and their spectral and probabilistic quantities.

mod eigen;
mod montecarlo;
pub(crate) mod occupation;
mod operator;
mod survival;

pub use eigen::{local_eigenvalue, local_eigenvalue_screened, principal_eigenpair, LocalEigen, SpectralResult};
pub use montecarlo::{mc_killed_walk, McConfig, McResult};
pub use occupation::{conditioned_occupation, conditioned_occupations, Occupation};
pub use operator::{restricted_operator, RestrictedOperator};
pub use survival::{
    d_lambda, d_lambda_from, lambda_star, survival_vector, survival_vectors, LambdaStarMode,
    SurvivalVector,
};

/// Default residual tolerance for power iteration.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap for power iteration.
pub const DEFAULT_MAX_ITERS: usize = 2_000_000;
