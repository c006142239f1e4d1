//! Pocket islands, the one-city selection and the intermittent-island sets.

mod boxes;
mod catalog;
mod intermittent;
mod localize;
mod shape;
mod skeleton;

pub use boxes::{empty_boxes, EmptyBoxes};
pub use catalog::{island_catalog, pocket, select_v_star, CostMode, Island, IslandCatalog, Selection};
pub use intermittent::{intermittent_sets, IntermittentIsland, IntermittentParams};
pub use localize::{localization_report, LocalizationReport, LocalizationRow, Regions};
pub use shape::{disk_square_overlap, fit_ball_and_asymmetry, omega_eps, BallFit, OmegaEps};
pub use skeleton::{skeletal_set, SkeletalSet};
