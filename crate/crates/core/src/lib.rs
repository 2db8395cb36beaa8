//! Reproducible tabletop pick-and-place scenes: stable resting poses,
//! reachability maps, scene generation and selection, reference renders,
//! grasp utilities and evaluation metrics.

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod grasp;
pub mod mask;
pub mod metrics;
pub mod pipeline;
pub mod reachability;
pub mod render;
pub mod scene;
pub mod seed;
pub mod select;

mod par;

pub use error::{Error, Result};
