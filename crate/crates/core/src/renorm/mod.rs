//! Coarse box lattice, white/black classification and separating white cuts.

mod cut;
mod grid;

pub use cut::{build_cut, cut_radii, find_separating_cut, separates, CutParams, SeparatingCut};
pub use grid::{
    classify_boxes, classify_boxes_near, classify_boxes_where, tilde_white, BlackReason, BoxColouring, BoxGrid, BoxState, LazyBoxes,
    Tiling,
};
