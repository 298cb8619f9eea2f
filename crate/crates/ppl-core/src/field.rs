//! Closed-form scalar fields over the window.
//!
//! These cover every intensity, retention and truth surface used by the
//! numerical studies (constants and linear-in-x trends), so configs stay
//! declarative and window integrals stay exact.

use crate::geometry::{Point, Window};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarField {
    Constant { value: f64 },
    /// `offset + slope * x`.
    LinearX { offset: f64, slope: f64 },
}

impl ScalarField {
    pub fn constant(value: f64) -> ScalarField {
        ScalarField::Constant { value }
    }

    pub fn linear_x(offset: f64, slope: f64) -> ScalarField {
        ScalarField::LinearX { offset, slope }
    }

    pub fn eval(&self, u: Point) -> f64 {
        match *self {
            ScalarField::Constant { value } => value,
            ScalarField::LinearX { offset, slope } => offset + slope * u.x,
        }
    }

    /// Exact integral over the window.
    pub fn window_integral(&self, w: Window) -> f64 {
        match *self {
            ScalarField::Constant { value } => value * w.area(),
            ScalarField::LinearX { offset, slope } => {
                let mean_x = 0.5 * (w.x_min + w.x_max);
                (offset + slope * mean_x) * w.area()
            }
        }
    }

    /// Exact supremum over the window.
    pub fn window_max(&self, w: Window) -> f64 {
        match *self {
            ScalarField::Constant { value } => value,
            ScalarField::LinearX { offset, slope } => {
                let at_min = offset + slope * w.x_min;
                let at_max = offset + slope * w.x_max;
                at_min.max(at_max)
            }
        }
    }

    pub fn window_min(&self, w: Window) -> f64 {
        match *self {
            ScalarField::Constant { value } => value,
            ScalarField::LinearX { offset, slope } => {
                let at_min = offset + slope * w.x_min;
                let at_max = offset + slope * w.x_max;
                at_min.min(at_max)
            }
        }
    }
}
