//! Green's functions of the killed walk and the log-weighted family built on them.

mod banded;
mod hitting;
mod lwgf;
mod norming;
mod solver;

pub use banded::BandLdl;
pub use hitting::{consistency_check_phi_star, phi_star_hitting, ConsistencyParams, ConsistencyReport};
pub use lwgf::{
    default_radius, lwgf_circ, lwgf_circ_star, lwgf_phi, lwgf_star, lwgf_star_many, truncate, LwgfKind,
    LwgfResult,
};
pub use norming::{estimate_g, estimate_h, g0_holds, norming_sample, NormingConfig, NormingEstimate, NormingSample};
pub use solver::{green_column, GreenColumn, GreenSolver, SolveMethod};
pub(crate) use lwgf::components_of;
