//! Quasi-static simulation and mission planning for a push-pull bulldozer
//! that anchors itself with interlocking spikes.

// `!(x > 0.0)` style checks also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod earthworks;
pub mod error;
pub mod locomotion;
pub mod mission;
pub mod planner;
pub mod raster;
pub mod scenario;
pub mod sensing;
pub mod soil;
pub mod traction;

pub use error::{Error, Result};
