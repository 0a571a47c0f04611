//! Planar polyline helpers shared by the graph, structure and layer code.
//!
//! Bearings use the compass convention: 0° is north and angles grow clockwise.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub x: f64,
    pub y: f64,
}

impl Coord {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Coord) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<(f64, f64)> for Coord {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Compass bearing of the step `a -> b` in `[0, 360)`.
pub fn bearing(a: Coord, b: Coord) -> f64 {
    normalize_bearing((b.x - a.x).atan2(b.y - a.y).to_degrees())
}

pub fn normalize_bearing(deg: f64) -> f64 {
    let b = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}

/// Shortest signed rotation from bearing `from` to bearing `to`, in `(-180, 180]`.
pub fn signed_turn(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d > 180.0 {
        d - 360.0
    } else {
        d
    }
}

/// Clockwise rotation from `from` to `to` in `[0, 360)`.
pub fn clockwise_turn(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(360.0);
    if d >= 360.0 {
        0.0
    } else {
        d
    }
}

pub fn polyline_length(points: &[Coord]) -> f64 {
    points.windows(2).map(|w| w[0].dist(w[1])).sum()
}

/// Bearings of the non-degenerate steps of a polyline.
fn step_bearings(points: &[Coord]) -> impl Iterator<Item = f64> + '_ {
    points
        .windows(2)
        .filter(|w| w[0] != w[1])
        .map(|w| bearing(w[0], w[1]))
}

/// Cumulative absolute turning along the polyline, in degrees.
pub fn angle_sum(points: &[Coord]) -> f64 {
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    for b in step_bearings(points) {
        if let Some(p) = prev {
            total += signed_turn(p, b).abs();
        }
        prev = Some(b);
    }
    total
}

/// Bearing of the first and last non-degenerate steps.
pub fn terminal_bearings(points: &[Coord]) -> Option<(f64, f64)> {
    let first = step_bearings(points).next()?;
    let last = step_bearings(points).last()?;
    Some((first, last))
}

/// Splits a polyline at the given along-line distances (ascending, strictly inside
/// `(0, length)`), returning `cuts.len() + 1` pieces that share their cut vertices.
pub fn split_at(points: &[Coord], cuts: &[f64]) -> Vec<Vec<Coord>> {
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut current = vec![points[0]];
    let mut walked = 0.0;
    let mut cut_iter = cuts.iter().copied().peekable();
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = a.dist(b);
        while let Some(&cut) = cut_iter.peek() {
            if cut >= walked + step || step == 0.0 {
                break;
            }
            let t = (cut - walked) / step;
            let p = Coord::new(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y));
            if *current.last().unwrap() != p {
                current.push(p);
            }
            pieces.push(std::mem::replace(&mut current, vec![p]));
            cut_iter.next();
        }
        if *current.last().unwrap() != b {
            current.push(b);
        }
        walked += step;
    }
    // cuts landing on the final vertex through rounding
    for _ in cut_iter {
        let last = *current.last().unwrap();
        pieces.push(std::mem::replace(&mut current, vec![last]));
    }
    if current.len() == 1 {
        current.push(current[0]);
    }
    pieces.push(current);
    pieces
}

/// Point at the given along-line distance.
pub fn point_along(points: &[Coord], at: f64) -> Coord {
    let mut walked = 0.0;
    for w in points.windows(2) {
        let step = w[0].dist(w[1]);
        if step > 0.0 && walked + step >= at {
            let t = ((at - walked) / step).clamp(0.0, 1.0);
            return Coord::new(w[0].x + t * (w[1].x - w[0].x), w[0].y + t * (w[1].y - w[0].y));
        }
        walked += step;
    }
    *points.last().expect("polyline has points")
}

pub fn point_segment_dist(p: Coord, a: Coord, b: Coord) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(Coord::new(a.x + t * dx, a.y + t * dy))
}

pub fn point_polyline_dist(p: Coord, points: &[Coord]) -> f64 {
    points
        .windows(2)
        .map(|w| point_segment_dist(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}
