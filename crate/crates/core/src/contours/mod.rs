//! Outer-border tracing and contour geometry: quadrilateral spot detection and
//! erasure, and largest-object localisation for cropping.

mod geometry;
mod spots;
mod trace;

use thiserror::Error;

pub use geometry::{
    approx_polygon, bounding_box, contour_area, contour_perimeter, convex_hull, fill_mask,
    polygon_area, solidity,
};
pub use spots::{
    detect_quad_spots, fill_contour, largest_contour_bbox, SpotCriteria, SpotMeasures, DARK_LEVEL,
};
pub use trace::find_contours;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("contour has no points")]
    EmptyContour,
    #[error("contour point ({x}, {y}) lies outside a {width}x{height} image")]
    OutOfBounds {
        x: i32,
        y: i32,
        width: usize,
        height: usize,
    },
    #[error("image has no foreground pixels")]
    NoForeground,
    #[error("invalid spot criteria: {0}")]
    InvalidCriteria(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    pub x: i32,
    pub y: i32,
}

impl Point {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn distance_sq(self, other: Point) -> i64 {
        let (dx, dy) = ((self.x - other.x) as i64, (self.y - other.y) as i64);
        dx * dx + dy * dy
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.distance_sq(other) as f64).sqrt()
    }

    pub fn is_neighbor8(self, other: Point) -> bool {
        (self.x - other.x).abs() <= 1 && (self.y - other.y).abs() <= 1
    }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= 0
            && p.y >= 0
            && (p.x as usize) >= self.x
            && (p.x as usize) < self.x + self.w
            && (p.y as usize) >= self.y
            && (p.y as usize) < self.y + self.h
    }

    /// Grows the rectangle by `margin` on every side, clipped to `width`×`height`.
    pub fn expanded(&self, margin: usize, width: usize, height: usize) -> Rect {
        let x = self.x.saturating_sub(margin);
        let y = self.y.saturating_sub(margin);
        let x1 = (self.x + self.w + margin).min(width);
        let y1 = (self.y + self.h + margin).min(height);
        Rect {
            x,
            y,
            w: x1 - x,
            h: y1 - y,
        }
    }
}

/// Closed lattice path along an outer boundary; the last point connects back
/// to the first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Contour {
    points: Vec<Point>,
}

impl Contour {
    /// Returns `None` for an empty point list.
    pub fn new(points: Vec<Point>) -> Option<Self> {
        (!points.is_empty()).then_some(Self { points })
    }

    pub(crate) fn from_points(points: Vec<Point>) -> Self {
        debug_assert!(!points.is_empty());
        Self { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn area(&self) -> f64 {
        contour_area(self)
    }

    pub fn perimeter(&self) -> f64 {
        contour_perimeter(self)
    }

    pub fn bbox(&self) -> Rect {
        bounding_box(self).expect("contours are non-empty")
    }
}
