//! Planar primitives used for footprints and line-of-sight tests.
//!
//! Coordinates are meters: `x` runs along the road (East positive), `y`
//! across it, with lane 1 adjacent to `y = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn new(min: Point, max: Point) -> Result<Self> {
        if !(max.x > min.x && max.y > min.y) {
            return Err(SimError::InvalidArgument(format!(
                "rectangle must have positive area, got {min:?}..{max:?}"
            )));
        }
        Ok(Rect { min, max })
    }

    pub fn centered(center: Point, length: f64, width: f64) -> Result<Self> {
        Rect::new(
            Point::new(center.x - length / 2.0, center.y - width / 2.0),
            Point::new(center.x + length / 2.0, center.y + width / 2.0),
        )
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Shared interior area; touching edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.min.x < other.max.x
            && other.min.x < self.max.x
            && self.min.y < other.max.y
            && other.min.y < self.max.y
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Rect {
        Rect {
            min: Point::new(self.min.x + dx, self.min.y + dy),
            max: Point::new(self.max.x + dx, self.max.y + dy),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2D {
    a: Point,
    b: Point,
}

impl Segment2D {
    pub fn new(a: Point, b: Point) -> Result<Self> {
        if a == b {
            return Err(SimError::InvalidArgument(
                "segment endpoints coincide".to_string(),
            ));
        }
        Ok(Segment2D { a, b })
    }

    pub fn start(&self) -> Point {
        self.a
    }

    pub fn end(&self) -> Point {
        self.b
    }

    pub fn length(&self) -> f64 {
        self.a.distance(&self.b)
    }

    pub fn at(&self, t: f64) -> Point {
        Point::new(
            self.a.x + t * (self.b.x - self.a.x),
            self.a.y + t * (self.b.y - self.a.y),
        )
    }
}

/// Exact segment / rectangle test by slab clipping. Touching the boundary
/// counts as an intersection.
pub fn segment_intersects_rect(seg: &Segment2D, rect: &Rect) -> bool {
    let mut t_enter = 0.0_f64;
    let mut t_exit = 1.0_f64;
    let axes = [
        (seg.a.x, seg.b.x - seg.a.x, rect.min.x, rect.max.x),
        (seg.a.y, seg.b.y - seg.a.y, rect.min.y, rect.max.y),
    ];
    for (origin, dir, lo, hi) in axes {
        if dir == 0.0 {
            if origin < lo || origin > hi {
                return false;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo - origin) / dir, (hi - origin) / dir);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return false;
        }
    }
    true
}
