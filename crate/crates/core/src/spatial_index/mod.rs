//! Spatial access structures: the MBR tree over document footprints and the
//! tile grid of toeprint-id intervals used by K-Sweep.

pub mod grid;
pub mod mbr_tree;
pub mod morton;
pub mod sweeps;
pub mod toeprint;

pub use grid::{build_grid, intervals_from_ids, GridIntervals, GRID_FILE};
pub use mbr_tree::MbrTree;
pub use morton::{morton, morton_bits, morton_decode, TileGrid, TileRange, DEFAULT_GRID_BITS};
pub use sweeps::{compute_sweeps, cover_at_most, normalize, Interval};
pub use toeprint::{assign_toeprints, translation_table, write_toeprints, Toeprint, ToeprintStore, TOEPRINT_FILE};
