//! Planar building layouts and visibility queries.
//!
//! Walls are zero-thickness segments. A link between a transmit element and
//! the UE is line-of-sight when it crosses no wall. Degenerate contacts are
//! resolved deterministically:
//!
//! - both link endpoints and both wall endpoints are put in lexicographic
//!   order before any orientation test, so every predicate is symmetric in
//!   its arguments;
//! - a wall endpoint lying on the link counts as lying on the non-positive
//!   side (half-open rule), so two walls sharing a corner that the link passes
//!   through are counted once, not twice;
//! - a wall collinear with the link and overlapping it counts as one crossing.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Absolute tolerance for intersection predicates, in meters.
pub const GEOMETRY_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2D) -> f64 {
        (other - self).norm()
    }

    pub fn cross(self, other: Point2D) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: Point2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    fn lex_lt(self, other: Point2D) -> bool {
        self.x < other.x || (self.x == other.x && self.y < other.y)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, rhs: Point2D) -> Point2D {
        Point2D::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, rhs: f64) -> Point2D {
        Point2D::new(self.x * rhs, self.y * rhs)
    }
}

/// A wall segment with a per-crossing penetration loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: Point2D,
    pub b: Point2D,
    pub attenuation_db: f64,
}

impl Wall {
    pub fn new(a: Point2D, b: Point2D, attenuation_db: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Geometry("wall endpoints must be finite".into()));
        }
        if a.distance(b) <= GEOMETRY_EPS {
            return Err(Error::Geometry(format!(
                "wall endpoints coincide at ({}, {})",
                a.x, a.y
            )));
        }
        // +inf is allowed: a perfectly opaque wall.
        if attenuation_db.is_nan() || attenuation_db < 0.0 {
            return Err(Error::Geometry(format!(
                "wall attenuation must be >= 0 dB, got {attenuation_db}"
            )));
        }
        Ok(Self {
            a,
            b,
            attenuation_db,
        })
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    fn canonical(&self) -> (Point2D, Point2D) {
        if self.b.lex_lt(self.a) {
            (self.b, self.a)
        } else {
            (self.a, self.b)
        }
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Point2D,
    pub max: Point2D,
}

impl Bounds {
    pub fn new(min: Point2D, max: Point2D) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || max.x <= min.x || max.y <= min.y {
            return Err(Error::Geometry(format!(
                "bounds must have positive extent, got ({}, {})-({}, {})",
                min.x, min.y, max.x, max.y
            )));
        }
        Ok(Self { min, max })
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn contains(&self, p: Point2D) -> bool {
        p.x >= self.min.x - GEOMETRY_EPS
            && p.x <= self.max.x + GEOMETRY_EPS
            && p.y >= self.min.y - GEOMETRY_EPS
            && p.y <= self.max.y + GEOMETRY_EPS
    }

    pub fn strictly_contains(&self, p: Point2D) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }
}

/// An immutable set of walls plus the rectangle that encloses them.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingLayout {
    walls: Vec<Wall>,
    bounds: Bounds,
}

impl BuildingLayout {
    pub fn new(walls: Vec<Wall>, bounds: Bounds) -> Result<Self> {
        for (i, w) in walls.iter().enumerate() {
            if !bounds.contains(w.a) || !bounds.contains(w.b) {
                return Err(Error::Geometry(format!("wall {i} extends outside the bounds")));
            }
        }
        Ok(Self { walls, bounds })
    }

    /// Layout whose bounds are the bounding box of its walls.
    pub fn from_walls(walls: Vec<Wall>) -> Result<Self> {
        let first = walls
            .first()
            .ok_or_else(|| Error::Geometry("cannot infer bounds of a layout without walls".into()))?;
        let mut min = first.a;
        let mut max = first.a;
        for w in &walls {
            for p in [w.a, w.b] {
                min = Point2D::new(min.x.min(p.x), min.y.min(p.y));
                max = Point2D::new(max.x.max(p.x), max.y.max(p.y));
            }
        }
        // Collinear walls span no area; give the thin axis 1 m either side.
        if max.x - min.x <= GEOMETRY_EPS {
            min.x -= 1.0;
            max.x += 1.0;
        }
        if max.y - min.y <= GEOMETRY_EPS {
            min.y -= 1.0;
            max.y += 1.0;
        }
        let bounds = Bounds::new(min, max)?;
        Self::new(walls, bounds)
    }

    /// Open space: no walls, only a region in which UEs may be placed.
    pub fn empty(bounds: Bounds) -> Self {
        Self {
            walls: Vec::new(),
            bounds,
        }
    }

    pub fn walls(&self) -> &[Wall] {
        &self.walls
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    /// Same layout with every wall loss replaced by `attenuation_db`.
    pub fn with_uniform_attenuation(&self, attenuation_db: f64) -> Result<Self> {
        let walls = self
            .walls
            .iter()
            .map(|w| Wall::new(w.a, w.b, attenuation_db))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            walls,
            bounds: self.bounds,
        })
    }
}

/// Orientation of `p` relative to the directed line `a -> b`, as -1/0/+1,
/// with values within [`GEOMETRY_EPS`] of the line mapped to 0.
fn side(a: Point2D, b: Point2D, p: Point2D) -> i8 {
    let len = a.distance(b);
    let d = (b - a).cross(p - a) / len;
    if d > GEOMETRY_EPS {
        1
    } else if d < -GEOMETRY_EPS {
        -1
    } else {
        0
    }
}

fn canonical_pair(p: Point2D, q: Point2D) -> (Point2D, Point2D) {
    if q.lex_lt(p) {
        (q, p)
    } else {
        (p, q)
    }
}

/// Whether the link `p`-`q` crosses `wall` under the module's contact policy.
pub fn link_crosses_wall(p: Point2D, q: Point2D, wall: &Wall) -> bool {
    if p.distance(q) <= GEOMETRY_EPS {
        return false;
    }
    let (p, q) = canonical_pair(p, q);
    let (a, b) = wall.canonical();
    let sa = side(p, q, a);
    let sb = side(p, q, b);
    if sa == 0 && sb == 0 {
        return collinear_overlap(p, q, a, b);
    }
    let straddles_link = (sa > 0) != (sb > 0);
    let straddles_wall = (side(a, b, p) > 0) != (side(a, b, q) > 0);
    straddles_link && straddles_wall
}

fn collinear_overlap(p: Point2D, q: Point2D, a: Point2D, b: Point2D) -> bool {
    let len = p.distance(q);
    let dir = (q - p) * (1.0 / len);
    let sa = (a - p).dot(dir);
    let sb = (b - p).dot(dir);
    let lo = sa.min(sb).max(0.0);
    let hi = sa.max(sb).min(len);
    hi - lo > GEOMETRY_EPS
}

/// Number of walls crossed by the straight link between `tx` and `ue`.
pub fn crossing_count(layout: &BuildingLayout, tx: Point2D, ue: Point2D) -> usize {
    layout
        .walls
        .iter()
        .filter(|w| link_crosses_wall(tx, ue, w))
        .count()
}

/// Crossing count together with the summed penetration loss (dB) of the
/// crossed walls.
pub fn crossing_loss(layout: &BuildingLayout, tx: Point2D, ue: Point2D) -> (usize, f64) {
    layout
        .walls
        .iter()
        .filter(|w| link_crosses_wall(tx, ue, w))
        .fold((0, 0.0), |(k, loss), w| (k + 1, loss + w.attenuation_db))
}

pub fn is_los(layout: &BuildingLayout, tx: Point2D, ue: Point2D) -> bool {
    !layout.walls.iter().any(|w| link_crosses_wall(tx, ue, w))
}

/// A wall hit along a ray: distance from the ray origin and the wall's loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub attenuation_db: f64,
}

/// Walls hit by the ray from `origin` along the unit vector `dir`, sorted by
/// distance.
///
/// For a transmit element at `origin + r * dir`, the number of hits with
/// `distance < r` equals [`crossing_count`] for that link (up to contacts of
/// measure zero, e.g. the element lying exactly on a wall).
pub fn ray_hits(layout: &BuildingLayout, origin: Point2D, dir: Point2D, out: &mut Vec<RayHit>) {
    out.clear();
    // Orientation sign of the canonical link direction relative to `dir`.
    let flip = if (origin + dir).lex_lt(origin) { -1.0 } else { 1.0 };
    for w in &layout.walls {
        let (a, b) = w.canonical();
        let sa = classify(flip * dir.cross(a - origin));
        let sb = classify(flip * dir.cross(b - origin));
        if sa == 0 && sb == 0 {
            let ta = (a - origin).dot(dir);
            let tb = (b - origin).dot(dir);
            let hi = ta.max(tb);
            if hi > GEOMETRY_EPS {
                out.push(RayHit {
                    distance: ta.min(tb).max(0.0),
                    attenuation_db: w.attenuation_db,
                });
            }
            continue;
        }
        if (sa > 0) == (sb > 0) {
            continue;
        }
        let edge = b - a;
        let denom = dir.cross(edge);
        if denom == 0.0 {
            continue;
        }
        let t = (a - origin).cross(edge) / denom;
        if t > 0.0 {
            out.push(RayHit {
                distance: t,
                attenuation_db: w.attenuation_db,
            });
        }
    }
    out.sort_by(|l, r| l.distance.total_cmp(&r.distance));
}

fn classify(d: f64) -> i8 {
    if d > GEOMETRY_EPS {
        1
    } else if d < -GEOMETRY_EPS {
        -1
    } else {
        0
    }
}

/// A single rectangular room, stored with `width <= length`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomSpec {
    width: f64,
    length: f64,
}

impl RoomSpec {
    /// Room with the given side lengths; the shorter side becomes the width.
    pub fn new(width: f64, length: f64) -> Result<Self> {
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Argument {
                name: "width",
                reason: format!("must be a positive length, got {width}"),
            });
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::Argument {
                name: "length",
                reason: format!("must be a positive length, got {length}"),
            });
        }
        Ok(Self {
            width: width.min(length),
            length: width.max(length),
        })
    }

    /// Room of the given floor area and aspect ratio (length / width).
    pub fn from_area_aspect(area: f64, aspect_ratio: f64) -> Result<Self> {
        if !(area.is_finite() && area > 0.0) {
            return Err(Error::Argument {
                name: "area",
                reason: format!("must be positive, got {area}"),
            });
        }
        if !(aspect_ratio.is_finite() && aspect_ratio >= 1.0) {
            return Err(Error::Argument {
                name: "aspect_ratio",
                reason: format!("must be >= 1, got {aspect_ratio}"),
            });
        }
        Self::new((area / aspect_ratio).sqrt(), (area * aspect_ratio).sqrt())
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.width * self.length
    }

    pub fn aspect_ratio(&self) -> f64 {
        self.length / self.width
    }
}

/// Four walls around `[0, width] x [0, length]`.
pub fn make_rect_room(spec: RoomSpec, wall_attenuation_db: f64) -> Result<BuildingLayout> {
    let (w, l) = (spec.width, spec.length);
    let c = [
        Point2D::new(0.0, 0.0),
        Point2D::new(w, 0.0),
        Point2D::new(w, l),
        Point2D::new(0.0, l),
    ];
    let walls = (0..4)
        .map(|i| Wall::new(c[i], c[(i + 1) % 4], wall_attenuation_db))
        .collect::<Result<Vec<_>>>()?;
    BuildingLayout::new(walls, Bounds::new(c[0], c[2])?)
}

/// Parameters of the office generator: rows of rooms on both sides of each
/// corridor, stacked along y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfficeSpec {
    pub rooms_per_row: usize,
    pub room_width: f64,
    pub room_length: f64,
    pub corridor_width: f64,
    pub corridors: usize,
    pub wall_attenuation_db: f64,
}

impl Default for OfficeSpec {
    /// 100 m x 50 m floor: two corridors of 100 m x 5 m, each flanked by ten
    /// 10 m x 10 m rooms on either side.
    fn default() -> Self {
        Self {
            rooms_per_row: 10,
            room_width: 10.0,
            room_length: 10.0,
            corridor_width: 5.0,
            corridors: 2,
            wall_attenuation_db: 10.0,
        }
    }
}

pub fn make_office_layout(spec: &OfficeSpec) -> Result<BuildingLayout> {
    if spec.rooms_per_row == 0 {
        return Err(Error::Argument {
            name: "rooms_per_row",
            reason: "must be at least 1".into(),
        });
    }
    if spec.corridors == 0 {
        return Err(Error::Argument {
            name: "corridors",
            reason: "must be at least 1".into(),
        });
    }
    for (name, v) in [
        ("room_width", spec.room_width),
        ("room_length", spec.room_length),
        ("corridor_width", spec.corridor_width),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Argument {
                name,
                reason: format!("must be a positive length, got {v}"),
            });
        }
    }

    let att = spec.wall_attenuation_db;
    let total_w = spec.rooms_per_row as f64 * spec.room_width;
    let band = 2.0 * spec.room_length + spec.corridor_width;
    let p = Point2D::new;
    let mut walls = Vec::new();

    // Full-width horizontal walls; adjacent bands share their boundary.
    let mut ys = vec![0.0];
    for c in 0..spec.corridors {
        let y0 = c as f64 * band;
        ys.push(y0 + spec.room_length);
        ys.push(y0 + spec.room_length + spec.corridor_width);
        ys.push(y0 + band);
    }
    for &y in &ys {
        walls.push(Wall::new(p(0.0, y), p(total_w, y), att)?);
    }

    for c in 0..spec.corridors {
        let y0 = c as f64 * band;
        let rows = [
            (y0, y0 + spec.room_length),
            (y0 + spec.room_length + spec.corridor_width, y0 + band),
        ];
        for (lo, hi) in rows {
            for k in 0..=spec.rooms_per_row {
                let x = k as f64 * spec.room_width;
                walls.push(Wall::new(p(x, lo), p(x, hi), att)?);
            }
        }
        // Corridor end walls.
        let (lo, hi) = (y0 + spec.room_length, y0 + spec.room_length + spec.corridor_width);
        walls.push(Wall::new(p(0.0, lo), p(0.0, hi), att)?);
        walls.push(Wall::new(p(total_w, lo), p(total_w, hi), att)?);
    }

    let bounds = Bounds::new(p(0.0, 0.0), p(total_w, spec.corridors as f64 * band))?;
    BuildingLayout::new(walls, bounds)
}
