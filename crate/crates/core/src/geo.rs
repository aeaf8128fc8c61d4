//! Planar geometry: measurement coordinates and the regular evaluation lattice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Geographic coordinates of a measurement or grid point, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance in the plane.
    pub fn distance(&self, other: &Location) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Regular rectangular lattice covering `[0, width] x [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width_m: f64,
    pub height_m: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("degenerate grid: nx and ny must both be >= 2 (got {nx}x{ny})")]
    Degenerate { nx: usize, ny: usize },
    #[error("grid dimensions must be positive and finite (got {width_m} x {height_m})")]
    BadDimensions { width_m: f64, height_m: f64 },
}

impl GridSpec {
    pub fn new(width_m: f64, height_m: f64, nx: usize, ny: usize) -> Self {
        Self {
            width_m,
            height_m,
            nx,
            ny,
        }
    }

    pub fn n_points(&self) -> usize {
        self.nx * self.ny
    }

    /// Lattice spacing along x: `width / (nx - 1)`.
    pub fn spacing_x(&self) -> f64 {
        self.width_m / (self.nx - 1) as f64
    }

    pub fn spacing_y(&self) -> f64 {
        self.height_m / (self.ny - 1) as f64
    }

    /// Diagonal of the covered rectangle.
    pub fn diagonal(&self) -> f64 {
        self.width_m.hypot(self.height_m)
    }

    /// Center of the covered area.
    pub fn center(&self) -> Location {
        Location::new(self.width_m / 2.0, self.height_m / 2.0)
    }
}

/// Builds the lattice in row-major order: index `j * nx + i` maps to
/// `(i * width/(nx-1), j * height/(ny-1))`.
pub fn build_grid(spec: &GridSpec) -> Result<Vec<Location>, GridError> {
    if spec.nx < 2 || spec.ny < 2 {
        return Err(GridError::Degenerate {
            nx: spec.nx,
            ny: spec.ny,
        });
    }
    if !(spec.width_m > 0.0 && spec.height_m > 0.0)
        || !spec.width_m.is_finite()
        || !spec.height_m.is_finite()
    {
        return Err(GridError::BadDimensions {
            width_m: spec.width_m,
            height_m: spec.height_m,
        });
    }
    let dx = spec.spacing_x();
    let dy = spec.spacing_y();
    let mut points = Vec::with_capacity(spec.n_points());
    for j in 0..spec.ny {
        for i in 0..spec.nx {
            points.push(Location::new(i as f64 * dx, j as f64 * dy));
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_120x120_covers_area() {
        let spec = GridSpec::new(100.0, 100.0, 120, 120);
        let grid = build_grid(&spec).unwrap();
        assert_eq!(grid.len(), 14400);
        assert!((spec.spacing_x() - 0.83).abs() < 0.02);
        let last = grid.last().unwrap();
        assert!((last.x - 100.0).abs() < 1e-12);
        assert!((last.y - 100.0).abs() < 1e-12);
    }

    #[test]
    fn grid_2x2_is_corner_lattice() {
        let spec = GridSpec::new(10.0, 10.0, 2, 2);
        let grid = build_grid(&spec).unwrap();
        assert_eq!(
            grid,
            vec![
                Location::new(0.0, 0.0),
                Location::new(10.0, 0.0),
                Location::new(0.0, 10.0),
                Location::new(10.0, 10.0),
            ]
        );
    }

    #[test]
    fn grid_3x3_has_half_meter_spacing() {
        let spec = GridSpec::new(1.0, 1.0, 3, 3);
        let grid = build_grid(&spec).unwrap();
        assert_eq!(grid.len(), 9);
        assert!((spec.spacing_x() - 0.5).abs() < 1e-15);
        assert!((grid[4].x - 0.5).abs() < 1e-15);
        assert!((grid[4].y - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(build_grid(&GridSpec::new(10.0, 10.0, 1, 5)).is_err());
        assert!(build_grid(&GridSpec::new(10.0, 10.0, 5, 1)).is_err());
    }

    #[test]
    fn row_major_order() {
        let spec = GridSpec::new(2.0, 2.0, 3, 2);
        let grid = build_grid(&spec).unwrap();
        // x varies fastest
        assert_eq!(grid[1], Location::new(1.0, 0.0));
        assert_eq!(grid[3], Location::new(0.0, 2.0));
    }
}
