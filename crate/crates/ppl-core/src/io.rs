//! Pattern files: CSV with header `x,y`, one point per row, plus a JSON
//! window sidecar `{"x_min":..,"x_max":..,"y_min":..,"y_max":..}`.

use crate::error::{PplError, Result};
use crate::geometry::{Point, PointPattern, Window};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// Render a pattern as CSV text. Coordinates use the shortest round-trip
/// float format, so writing is deterministic.
pub fn pattern_to_csv(x: &PointPattern) -> String {
    let mut out = String::with_capacity(16 + 32 * x.len());
    out.push_str("x,y\n");
    for p in x.points() {
        let _ = writeln!(out, "{},{}", p.x, p.y);
    }
    out
}

pub fn write_pattern_csv(path: &Path, x: &PointPattern) -> Result<()> {
    fs::write(path, pattern_to_csv(x))?;
    Ok(())
}

pub fn write_window_json(path: &Path, w: Window) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&w)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_window_json(path: &Path) -> Result<Window> {
    let text = fs::read_to_string(path)?;
    let w: Window = serde_json::from_str(&text)?;
    Window::new(w.x_min, w.x_max, w.y_min, w.y_max)
}

pub fn parse_pattern_csv(text: &str, window: Window) -> Result<PointPattern> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "x,y" => {}
        other => {
            return Err(PplError::InvalidPattern(format!(
                "expected header `x,y`, got {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (Some(xs), Some(ys), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(PplError::InvalidPattern(format!("line {}: expected 2 columns", lineno + 2)));
        };
        let x: f64 = xs
            .trim()
            .parse()
            .map_err(|_| PplError::InvalidPattern(format!("line {}: bad x", lineno + 2)))?;
        let y: f64 = ys
            .trim()
            .parse()
            .map_err(|_| PplError::InvalidPattern(format!("line {}: bad y", lineno + 2)))?;
        points.push(Point::new(x, y));
    }
    PointPattern::new(points, window)
}

pub fn read_pattern_csv(path: &Path, window: Window) -> Result<PointPattern> {
    let text = fs::read_to_string(path)?;
    parse_pattern_csv(&text, window)
}

/// Default sidecar path for a pattern file: `foo.csv` -> `foo.window.json`.
pub fn sidecar_path(pattern_path: &Path) -> std::path::PathBuf {
    pattern_path.with_extension("window.json")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let w = Window::unit();
        let x = PointPattern::new(
            vec![Point::new(0.125, 0.25), Point::new(0.3333333333333333, 0.9)],
            w,
        )
        .unwrap();
        let text = pattern_to_csv(&x);
        let back = parse_pattern_csv(&text, w).unwrap();
        assert_eq!(x, back);
    }

    #[test]
    fn rejects_bad_header() {
        assert!(parse_pattern_csv("a,b\n0,0\n", Window::unit()).is_err());
    }
}
