//! Iso-parametric ball-end tool path planning on unorganized point clouds.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cloud;
pub mod diffgeo;
mod error;
pub mod kdtree;
pub mod param;
pub mod planner;
pub mod verify;

pub use error::{Error, Result};
