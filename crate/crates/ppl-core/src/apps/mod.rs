//! The three estimation tracks with their classical baselines.

pub mod bandwidth;
pub mod constant;
pub mod hardcore;
