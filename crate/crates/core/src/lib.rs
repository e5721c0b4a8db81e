//! Two-image stitching driven by planar region consensus.
//!
//! Stages, in pipeline order:
//! - [`consensus`]: regional RANSAC pairs up planar regions of the two
//!   label masks and fits a homography and a similarity per pair.
//! - [`field`]: dense per-vertex correspondences (moving DLT) and the
//!   per-vertex similarity field.
//! - [`meshopt`]: the sparse quadratic mesh energy and its solver.
//! - [`compositor`]: per-triangle texture mapping and feather blending.
//! - [`evalmetrics`]: RMSE of one minus NCC over the overlap.
//!
//! [`segmetrics`] scores region masks up to label permutation, [`ingest`]
//! loads and writes every file format and generates synthetic scenes, and
//! [`pipeline`] wires it all together.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assignment;
pub mod compositor;
pub mod consensus;
pub mod error;
pub mod evalmetrics;
pub mod field;
pub mod geometry;
pub mod ingest;
pub mod mesh;
pub mod meshopt;
pub mod pipeline;
pub mod raster;
pub mod segmetrics;
pub mod sparse;

pub use error::{Error, Result};
