//! Random walks killed by Bernoulli site obstacles on finite windows of Z^d.
//!
//! The crate is organised around five subsystems:
//!
//! * [`env`]: obstacle fields, clusters, chemical distance, model constants.
//! * [`spectral`]: restricted transition operators, Perron pairs, survival
//!   vectors, conditioned occupation and Monte Carlo walks.
//! * [`greens`]: Green's functions and the log-weighted family built on them.
//! * [`islands`]: pocket islands, one-city selection, intermittent sets.
//! * [`renorm`]: coarse box lattice and separating white cuts.

pub mod env;
pub mod error;
pub mod greens;
pub mod islands;
pub mod numeric;
pub mod renorm;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
