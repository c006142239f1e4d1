//! Obstacle environments on finite windows.

mod chem;
mod clusters;
mod constants;
mod field;
mod lattice;
mod snapshot;

pub use chem::{chemical_distance, hop_distances};
pub use clusters::{clusters, clusters_of_mask, ClusterLabeling, ClusterProxy};
pub use constants::{desk_c_d, model_constants, unit_ball_volume, DeskScaleParams, ModelConstants};
pub use field::{derive_seed, generate_field, Boundary, ObstacleField};
pub use lattice::{ball_offsets, Lattice};
pub use snapshot::{read_snapshot, write_snapshot, SNAPSHOT_MAGIC};
