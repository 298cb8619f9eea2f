//! Statistical learning for planar point processes.
//!
//! The pieces: rectangular-window geometry and quadrature, simulators for
//! the four reference model families, cross-validation splittings by
//! independent thinning, first-order innovation measures, loss functions
//! with derivative-free searches, and three estimation tracks (constant
//! intensity, hard-core Papangelou fitting, kernel bandwidth selection) with
//! their classical baselines. A batch experiment harness reproduces the
//! Monte-Carlo comparisons behind the acceptance suite and the CLI.

#![forbid(unsafe_code)]

pub mod apps;
pub mod cv;
pub mod error;
pub mod experiment;
pub mod field;
pub mod geometry;
pub mod innovations;
pub mod io;
pub mod kernel;
pub mod learning;
pub mod metrics;
pub mod rng;
pub mod sim;

pub use error::{PplError, Result};
pub use field::ScalarField;
pub use geometry::{
    distance, integrate_on_window, uncovered_area, Point, PointPattern, QuadratureGrid, Window,
};
pub use rng::RngSeed;
