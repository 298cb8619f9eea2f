//! Windows, points, patterns and grid quadrature.
//!
//! Everything downstream integrates against these types. Windows are
//! axis-aligned rectangles, which keeps quadrature and edge corrections exact
//! at the boundary; all numerical studies run on such windows.

use crate::error::{PplError, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Window> {
        if !(x_min.is_finite() && x_max.is_finite() && y_min.is_finite() && y_max.is_finite()) {
            return Err(PplError::InvalidWindow("non-finite bound".into()));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(PplError::InvalidWindow(format!(
                "degenerate bounds [{x_min}, {x_max}] x [{y_min}, {y_max}]"
            )));
        }
        Ok(Window { x_min, x_max, y_min, y_max })
    }

    /// The unit square `[0,1]^2`.
    pub fn unit() -> Window {
        Window { x_min: 0.0, x_max: 1.0, y_min: 0.0, y_max: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Length of the shorter side.
    pub fn short_side(&self) -> f64 {
        self.width().min(self.height())
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }
}

/// A planar location, in window units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }
}

/// Euclidean distance.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

fn squared_distance(a: Point, b: Point) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    dx * dx + dy * dy
}

/// A finite planar point pattern together with its observation window.
///
/// Patterns are simple: exactly coincident points are rejected at
/// construction, and every point must lie inside the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    points: Vec<Point>,
    window: Window,
}

impl PointPattern {
    pub fn new(points: Vec<Point>, window: Window) -> Result<PointPattern> {
        for p in &points {
            if !(p.x.is_finite() && p.y.is_finite()) {
                return Err(PplError::InvalidPattern("non-finite coordinate".into()));
            }
            if !window.contains(*p) {
                return Err(PplError::InvalidPattern(format!(
                    "point ({}, {}) outside window",
                    p.x, p.y
                )));
            }
        }
        let mut sorted: Vec<(u64, u64)> = points
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(PplError::InvalidPattern("coincident points".into()));
        }
        Ok(PointPattern { points, window })
    }

    pub fn empty(window: Window) -> PointPattern {
        PointPattern { points: Vec::new(), window }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Minimum distance over all distinct pairs.
    ///
    /// Errors with fewer than two points.
    pub fn min_pairwise_distance(&self) -> Result<f64> {
        if self.points.len() < 2 {
            return Err(PplError::InsufficientPoints { needed: 2, got: self.points.len() });
        }
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                let d2 = squared_distance(*a, *b);
                if d2 < best {
                    best = d2;
                }
            }
        }
        Ok(best.sqrt())
    }
}

/// Uniform G x G midpoint grid over a window.
///
/// Cell centers never touch the window boundary, so integrable singularities
/// along the axes stay evaluable.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    window: Window,
    resolution: usize,
    cell_area: f64,
}

impl QuadratureGrid {
    pub const DEFAULT_RESOLUTION: usize = 128;

    pub fn new(window: Window, resolution: usize) -> Result<QuadratureGrid> {
        if resolution == 0 {
            return Err(PplError::InvalidParameter("grid resolution must be positive".into()));
        }
        let cell_area = window.area() / (resolution * resolution) as f64;
        Ok(QuadratureGrid { window, resolution, cell_area })
    }

    pub fn default_for(window: Window) -> QuadratureGrid {
        QuadratureGrid::new(window, Self::DEFAULT_RESOLUTION).expect("positive resolution")
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn num_cells(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Center of cell `(i, j)` with `i` indexing x and `j` indexing y.
    pub fn center(&self, i: usize, j: usize) -> Point {
        let g = self.resolution as f64;
        Point {
            x: self.window.x_min + (i as f64 + 0.5) / g * self.window.width(),
            y: self.window.y_min + (j as f64 + 0.5) / g * self.window.height(),
        }
    }

    /// All cell centers in row-major order (x fastest).
    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        let g = self.resolution;
        (0..g * g).map(move |idx| self.center(idx % g, idx / g))
    }
}

/// Midpoint-rule integral of `f` over the window.
///
/// Errors if `f` is non-finite at any node.
pub fn integrate_on_window<F: Fn(Point) -> f64>(f: F, grid: &QuadratureGrid) -> Result<f64> {
    let mut sum = 0.0;
    for c in grid.centers() {
        let v = f(c);
        if !v.is_finite() {
            return Err(PplError::NonFiniteIntegrand(c));
        }
        sum += v;
    }
    Ok(sum * grid.cell_area())
}

/// Area of `W` minus the union of closed R-balls around the pattern points,
/// measured on the grid (a cell counts as covered when its center is within
/// R of some point).
pub fn uncovered_area(x: &PointPattern, radius: f64, grid: &QuadratureGrid) -> f64 {
    if x.is_empty() || radius <= 0.0 {
        // R = 0 removes a set of measure zero.
        if radius == 0.0 || x.is_empty() {
            return grid.window().area();
        }
    }
    let r2 = radius * radius;
    let mut uncovered = 0usize;
    for c in grid.centers() {
        let covered = x.points().iter().any(|p| squared_distance(*p, c) <= r2);
        if !covered {
            uncovered += 1;
        }
    }
    uncovered as f64 * grid.cell_area()
}

/// Distance from every grid cell center to its nearest pattern point.
///
/// Shared precomputation for coverage profiles: `uncovered_area(x, r)` for
/// any `r` is then a threshold count over this array.
pub fn nearest_point_distances(points: &[Point], grid: &QuadratureGrid) -> Vec<f64> {
    grid.centers()
        .map(|c| {
            points
                .iter()
                .map(|p| squared_distance(*p, c))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}
