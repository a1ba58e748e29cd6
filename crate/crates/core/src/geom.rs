//! Planar geometry kernel: half-plane intersection, polygon and polyline
//! measures, weighted boundary functionals, and curve distances.
//!
//! Half-plane intersection sorts the planes by normal angle, merges
//! near-parallel duplicates, and clips the bounding box one plane at a time
//! (Sutherland–Hodgman). Each output edge remembers which input plane or box
//! side produced it, which is how the maximizing construction recovers the
//! curved part of its boundary.
//!
//! A [`MonotoneCurve`] is the graph of a non-increasing function in the
//! positive quadrant. Unbounded supports are represented by analytic tails
//! anchored at the end points instead of long polylines.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::direction::{Direction, DirectionWeight, ProblemClass, WeightError};
use crate::tolerances::{
    GEOM_EPS, HAUSDORFF_EDGE_SAMPLES, PARALLEL_EPS, POWER_TAIL_MARGIN, SUP_GRID,
};

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("need at least three half-planes, got {0}")]
    TooFewPlanes(usize),
    #[error("bounding box is degenerate")]
    DegenerateBox,
    #[error("half-plane normal is not a unit vector (norm {0})")]
    NonUnitNormal(f64),
    #[error("segment {segment} has normal ({n1}, {n2}) outside the closed first quadrant")]
    Inadmissible { segment: usize, n1: f64, n2: f64 },
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("{0}")]
    Domain(String),
    #[error("polygon is empty")]
    EmptyPolygon,
    #[error(transparent)]
    Weight(#[from] WeightError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }

    pub fn dist(self, o: Point) -> f64 {
        self.sub(o).norm()
    }
}

fn dot_dir(p: Point, n: Direction) -> f64 {
    p.x * n.n1() + p.y * n.n2()
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b.sub(a);
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (p.sub(a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a.add(ab.scale(t)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    AtMost,
    AtLeast,
}

/// `{x : (x, n) <= offset}` or `{x : (x, n) >= offset}`.
#[derive(Clone, Copy, Debug)]
pub struct HalfPlane {
    pub normal: Direction,
    pub offset: f64,
    pub sense: Sense,
}

impl HalfPlane {
    pub fn at_most(normal: Direction, offset: f64) -> Self {
        Self {
            normal,
            offset,
            sense: Sense::AtMost,
        }
    }

    pub fn at_least(normal: Direction, offset: f64) -> Self {
        Self {
            normal,
            offset,
            sense: Sense::AtLeast,
        }
    }

    /// The same set written as `(x, n') <= offset'`.
    pub fn to_at_most(self) -> Self {
        match self.sense {
            Sense::AtMost => self,
            Sense::AtLeast => Self::at_most(self.normal.opposite(), -self.offset),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        let s = dot_dir(p, self.normal);
        match self.sense {
            Sense::AtMost => s <= self.offset + GEOM_EPS,
            Sense::AtLeast => s >= self.offset - GEOM_EPS,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn centered(half_size: f64) -> Self {
        Self::new(-half_size, half_size, -half_size, half_size)
    }

    fn is_degenerate(&self) -> bool {
        !(self.x_max > self.x_min && self.y_max > self.y_min)
            || [self.x_min, self.x_max, self.y_min, self.y_max]
                .iter()
                .any(|v| !v.is_finite())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoxSide {
    Bottom,
    Right,
    Top,
    Left,
}

/// Origin of a clipped polygon edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeSource {
    Box(BoxSide),
    /// Index into the caller's plane list.
    Plane(usize),
}

/// Polygon vertices in counterclockwise order, each paired with the source
/// of the edge leaving it.
#[derive(Clone, Debug, Default)]
pub struct LabeledPolygon {
    pub vertices: Vec<Point>,
    pub sources: Vec<EdgeSource>,
}

/// Closed convex polygon, vertices counterclockwise, closed implicitly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl ConvexPolygon {
    /// Accepts counterclockwise convex vertex lists; an empty list is the
    /// empty polygon.
    pub fn new(vertices: Vec<Point>) -> Result<Self, GeomError> {
        let n = vertices.len();
        if n == 0 {
            return Ok(Self::default());
        }
        if n < 3 {
            return Err(GeomError::Domain("polygon needs at least three vertices".into()));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if a.dist(b) <= GEOM_EPS {
                return Err(GeomError::Domain(format!("vertices {i} and {} coincide", (i + 1) % n)));
            }
            if b.sub(a).cross(c.sub(b)) < -GEOM_EPS * b.sub(a).norm().max(1.0) * c.sub(b).norm().max(1.0) {
                return Err(GeomError::Domain(format!("polygon is not convex at vertex {}", (i + 1) % n)));
            }
        }
        Ok(Self { vertices })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// Square `[x0, x0 + side] x [y0, y0 + side]`.
    pub fn square(x0: f64, y0: f64, side: f64) -> Self {
        Self {
            vertices: vec![
                Point::new(x0, y0),
                Point::new(x0 + side, y0),
                Point::new(x0 + side, y0 + side),
                Point::new(x0, y0 + side),
            ],
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p.scale(s)).collect(),
        }
    }

    pub fn translated(&self, d: Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|p| p.add(d)).collect(),
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b, c) = (
                self.vertices[i],
                self.vertices[(i + 1) % n],
                self.vertices[(i + 2) % n],
            );
            b.sub(a).cross(c.sub(b)) >= -GEOM_EPS
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PolygonRepr {
    kind: String,
    points: Vec<Point>,
}

impl Serialize for ConvexPolygon {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PolygonRepr {
            kind: "convex_polygon".into(),
            points: self.vertices.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConvexPolygon {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = PolygonRepr::deserialize(d)?;
        if repr.kind != "convex_polygon" {
            return Err(serde::de::Error::custom(format!("unexpected kind {:?}", repr.kind)));
        }
        ConvexPolygon::new(repr.points).map_err(serde::de::Error::custom)
    }
}

/// Shoelace area of a closed polyline; positive for counterclockwise order.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    if n < 3 {
        return 0.0;
    }
    let origin = points[0];
    let mut twice = 0.0;
    for i in 1..n - 1 {
        twice += points[i].sub(origin).cross(points[i + 1].sub(origin));
    }
    0.5 * twice
}

pub fn polygon_area(p: &ConvexPolygon) -> f64 {
    signed_area(&p.vertices).abs()
}

/// Intersection of the half-planes with the bounding box.
pub fn intersect_halfplanes(planes: &[HalfPlane], bbox: Rect) -> Result<ConvexPolygon, GeomError> {
    let labeled = intersect_halfplanes_labeled(planes, bbox)?;
    Ok(ConvexPolygon {
        vertices: labeled.vertices,
    })
}

/// As [`intersect_halfplanes`], keeping the source of every output edge.
pub fn intersect_halfplanes_labeled(
    planes: &[HalfPlane],
    bbox: Rect,
) -> Result<LabeledPolygon, GeomError> {
    if planes.len() < 3 {
        return Err(GeomError::TooFewPlanes(planes.len()));
    }
    if bbox.is_degenerate() {
        return Err(GeomError::DegenerateBox);
    }
    let mut reduced: Vec<(f64, HalfPlane, usize)> = Vec::with_capacity(planes.len());
    for (i, p) in planes.iter().enumerate() {
        let norm = p.normal.n1().hypot(p.normal.n2());
        if (norm - 1.0).abs() > GEOM_EPS {
            return Err(GeomError::NonUnitNormal(norm));
        }
        let q = p.to_at_most();
        reduced.push((q.normal.n2().atan2(q.normal.n1()), q, i));
    }
    reduced.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.2.cmp(&b.2)));

    // Merge runs of near-parallel normals, keeping the tightest bound.
    let mut kept: Vec<(f64, HalfPlane, usize)> = Vec::with_capacity(reduced.len());
    for item in reduced {
        match kept.last_mut() {
            Some(last) if item.0 - last.0 < PARALLEL_EPS => {
                if item.1.offset < last.1.offset {
                    *last = item;
                }
            }
            _ => kept.push(item),
        }
    }
    if kept.len() > 1 {
        let (first, last) = (kept[0].0, kept[kept.len() - 1].0);
        if first + 2.0 * PI - last < PARALLEL_EPS {
            let tail = kept.pop().unwrap();
            if tail.1.offset < kept[0].1.offset {
                kept[0] = tail;
            }
        }
    }

    let mut poly = LabeledPolygon {
        vertices: vec![
            Point::new(bbox.x_min, bbox.y_min),
            Point::new(bbox.x_max, bbox.y_min),
            Point::new(bbox.x_max, bbox.y_max),
            Point::new(bbox.x_min, bbox.y_max),
        ],
        sources: vec![
            EdgeSource::Box(BoxSide::Bottom),
            EdgeSource::Box(BoxSide::Right),
            EdgeSource::Box(BoxSide::Top),
            EdgeSource::Box(BoxSide::Left),
        ],
    };
    for (_, plane, index) in &kept {
        poly = clip(&poly, plane, *index);
        if poly.vertices.is_empty() {
            break;
        }
    }
    if poly.vertices.len() < 3 || signed_area(&poly.vertices) <= 0.0 {
        return Ok(LabeledPolygon::default());
    }
    Ok(poly)
}

fn clip(poly: &LabeledPolygon, plane: &HalfPlane, index: usize) -> LabeledPolygon {
    let n = poly.vertices.len();
    let side = |p: Point| dot_dir(p, plane.normal) - plane.offset;
    let mut out = LabeledPolygon {
        vertices: Vec::with_capacity(n + 1),
        sources: Vec::with_capacity(n + 1),
    };
    let push = |out: &mut LabeledPolygon, p: Point, s: EdgeSource| {
        if let Some(last) = out.vertices.last() {
            if last.dist(p) <= GEOM_EPS {
                *out.sources.last_mut().unwrap() = s;
                return;
            }
        }
        out.vertices.push(p);
        out.sources.push(s);
    };
    for i in 0..n {
        let a = poly.vertices[i];
        let b = poly.vertices[(i + 1) % n];
        let label = poly.sources[i];
        let (sa, sb) = (side(a), side(b));
        let (a_in, b_in) = (sa <= 0.0, sb <= 0.0);
        match (a_in, b_in) {
            (true, true) => push(&mut out, a, label),
            (true, false) => {
                push(&mut out, a, label);
                let t = sa / (sa - sb);
                push(&mut out, a.add(b.sub(a).scale(t)), EdgeSource::Plane(index));
            }
            (false, true) => {
                let t = sa / (sa - sb);
                push(&mut out, a.add(b.sub(a).scale(t)), label);
            }
            (false, false) => {}
        }
    }
    // Closing duplicate between last and first vertex.
    while out.vertices.len() > 1 && out.vertices[0].dist(*out.vertices.last().unwrap()) <= GEOM_EPS {
        out.vertices.pop();
        out.sources.pop();
    }
    out
}

/// Symmetric Hausdorff distance between the boundaries, each sampled at its
/// vertices plus evenly spaced points on every edge.
pub fn hausdorff_distance(p1: &ConvexPolygon, p2: &ConvexPolygon) -> Result<f64, GeomError> {
    if p1.is_empty() || p2.is_empty() {
        return Err(GeomError::EmptyPolygon);
    }
    Ok(directed_hausdorff(p1, p2).max(directed_hausdorff(p2, p1)))
}

fn directed_hausdorff(from: &ConvexPolygon, to: &ConvexPolygon) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, b) in from.edges() {
        for j in 0..=HAUSDORFF_EDGE_SAMPLES {
            let t = j as f64 / (HAUSDORFF_EDGE_SAMPLES + 1) as f64;
            let p = a.add(b.sub(a).scale(t));
            let d = to
                .edges()
                .map(|(c, e)| point_segment_distance(p, c, e))
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

/// Asymptotic decay law of an unbounded curve end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Decay {
    /// `v(t) = v_e exp(-rate (t - t_e))`.
    Exponential { rate: f64 },
    /// `v(t) = v_e (t / t_e)^(-exponent)`.
    Power { exponent: f64 },
}

impl Decay {
    fn validate(&self) -> Result<(), GeomError> {
        let ok = match *self {
            Decay::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Decay::Power { exponent } => exponent.is_finite() && exponent > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(GeomError::InvalidCurve(format!("bad tail parameters {self:?}")))
        }
    }

    fn value(&self, anchor_t: f64, anchor_v: f64, t: f64) -> f64 {
        match *self {
            Decay::Exponential { rate } => anchor_v * (-rate * (t - anchor_t)).exp(),
            Decay::Power { exponent } => anchor_v * (t / anchor_t).powf(-exponent),
        }
    }

    /// Inverse of `value`: the `t >= anchor_t` at which the tail reaches `v`.
    fn inverse(&self, anchor_t: f64, anchor_v: f64, v: f64) -> f64 {
        match *self {
            Decay::Exponential { rate } => anchor_t + (anchor_v / v).ln() / rate,
            Decay::Power { exponent } => anchor_t * (anchor_v / v).powf(1.0 / exponent),
        }
    }

    /// `int_{t_e}^inf v(t) dt`, or `None` when it diverges.
    fn integral(&self, anchor_t: f64, anchor_v: f64) -> Option<f64> {
        match *self {
            Decay::Exponential { rate } => Some(anchor_v / rate),
            Decay::Power { exponent } if exponent > 1.0 + POWER_TAIL_MARGIN => {
                Some(anchor_v * anchor_t / (exponent - 1.0))
            }
            Decay::Power { .. } => None,
        }
    }

    fn scaled(&self, s: f64) -> Self {
        match *self {
            Decay::Exponential { rate } => Decay::Exponential { rate: rate / s },
            power => power,
        }
    }
}

/// Tails continuing a curve past its end points: `right` gives `y(x)` for
/// `x` beyond the last point, `top` gives `x(y)` for `y` above the first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveTails {
    pub right: Option<Decay>,
    pub top: Option<Decay>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Volume {
    Finite(f64),
    Divergent,
}

impl Volume {
    pub fn finite(self) -> Option<f64> {
        match self {
            Volume::Finite(v) => Some(v),
            Volume::Divergent => None,
        }
    }
}

/// Polyline graph of a non-increasing function in the closed positive
/// quadrant. Vertical segments are allowed so that Young-diagram staircases
/// are representable.
#[derive(Clone, Debug, PartialEq)]
pub struct MonotoneCurve {
    points: Vec<Point>,
    tails: CurveTails,
}

impl MonotoneCurve {
    pub fn new(points: Vec<Point>) -> Result<Self, GeomError> {
        Self::with_tails(points, CurveTails::default())
    }

    pub fn with_tails(points: Vec<Point>, tails: CurveTails) -> Result<Self, GeomError> {
        if points.len() < 2 {
            return Err(GeomError::InvalidCurve("need at least two points".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite()) || p.x < 0.0 || p.y < 0.0 {
                return Err(GeomError::InvalidCurve(format!(
                    "point {i} = ({}, {}) is outside the closed quadrant",
                    p.x, p.y
                )));
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].x < w[0].x {
                return Err(GeomError::InvalidCurve(format!("x decreases at segment {i}")));
            }
            if w[1].y > w[0].y {
                return Err(GeomError::InvalidCurve(format!("y increases at segment {i}")));
            }
            if w[0].dist(w[1]) <= GEOM_EPS {
                return Err(GeomError::InvalidCurve(format!("segment {i} has zero length")));
            }
        }
        if let Some(t) = tails.right {
            t.validate()?;
            let last = points[points.len() - 1];
            if !(last.x > 0.0 && last.y > 0.0) {
                return Err(GeomError::InvalidCurve("right tail needs a positive anchor".into()));
            }
        }
        if let Some(t) = tails.top {
            t.validate()?;
            if !(points[0].x > 0.0 && points[0].y > 0.0) {
                return Err(GeomError::InvalidCurve("top tail needs a positive anchor".into()));
            }
        }
        Ok(Self { points, tails })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn tails(&self) -> CurveTails {
        self.tails
    }

    pub fn first(&self) -> Point {
        self.points[0]
    }

    pub fn last(&self) -> Point {
        self.points[self.points.len() - 1]
    }

    /// Every coordinate multiplied by `s > 0`; tails follow the scaling.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            points: self.points.iter().map(|p| p.scale(s)).collect(),
            tails: CurveTails {
                right: self.tails.right.map(|t| t.scaled(s)),
                top: self.tails.top.map(|t| t.scaled(s)),
            },
        }
    }

    /// Closed interval of `x` on which `y_at` is defined (infinite or zero
    /// ends when tails are present).
    pub fn x_range(&self) -> (f64, f64) {
        let lo = if self.tails.top.is_some() { 0.0 } else { self.first().x };
        let hi = if self.tails.right.is_some() { f64::INFINITY } else { self.last().x };
        (lo, hi)
    }

    /// Left-continuous height of the graph at `x`.
    pub fn y_at(&self, x: f64) -> Option<f64> {
        let first = self.first();
        let last = self.last();
        if x < first.x {
            let top = self.tails.top?;
            if x <= 0.0 {
                return None;
            }
            return Some(top.inverse(first.y, first.x, x));
        }
        if x > last.x {
            let right = self.tails.right?;
            return Some(right.value(last.x, last.y, x));
        }
        let i = self.points.partition_point(|p| p.x < x);
        if i == 0 {
            return Some(first.y);
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let t = (x - a.x) / (b.x - a.x);
        Some(a.y + t * (b.y - a.y))
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    kind: String,
    points: Vec<Point>,
    #[serde(default)]
    tail: Option<CurveTails>,
}

impl Serialize for MonotoneCurve {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let tail = (self.tails != CurveTails::default()).then_some(self.tails);
        CurveRepr {
            kind: "monotone_curve".into(),
            points: self.points.clone(),
            tail,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MonotoneCurve {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let repr = CurveRepr::deserialize(d)?;
        if repr.kind != "monotone_curve" {
            return Err(serde::de::Error::custom(format!("unexpected kind {:?}", repr.kind)));
        }
        MonotoneCurve::with_tails(repr.points, repr.tail.unwrap_or_default())
            .map_err(serde::de::Error::custom)
    }
}

/// Area between the axes and the curve: the polyline, the rectangle to the
/// left of the first point, and the tail integrals. A missing tail closes the
/// region with an axis-parallel segment.
pub fn curve_volume(c: &MonotoneCurve) -> Volume {
    let first = c.first();
    let last = c.last();
    let mut area = first.x * first.y;
    for w in c.points.windows(2) {
        area += 0.5 * (w[1].x - w[0].x) * (w[0].y + w[1].y);
    }
    if let Some(right) = c.tails.right {
        match right.integral(last.x, last.y) {
            Some(v) => area += v,
            None => return Volume::Divergent,
        }
    }
    if let Some(top) = c.tails.top {
        match top.integral(first.y, first.x) {
            Some(v) => area += v,
            None => return Volume::Divergent,
        }
    }
    Volume::Finite(area)
}

/// Weighted length `sum w(n) |segment|` of an open polyline, with `n` the
/// unit normal `(-dy, dx)/len` (away from the origin for monotone curves), or
/// its opposite when `reversed`.
pub fn functional_on_polyline(
    w: &DirectionWeight,
    points: &[Point],
    reversed: bool,
) -> Result<f64, GeomError> {
    let mut total = 0.0;
    for (i, seg) in points.windows(2).enumerate() {
        let d = seg[1].sub(seg[0]);
        let len = d.norm();
        if len == 0.0 {
            continue;
        }
        let (n1, n2) = if reversed { (d.y, -d.x) } else { (-d.y, d.x) };
        if w.class() == ProblemClass::Maximizing
            && (n1 < -GEOM_EPS * len || n2 < -GEOM_EPS * len)
        {
            return Err(GeomError::Inadmissible {
                segment: i,
                n1: n1 / len,
                n2: n2 / len,
            });
        }
        let (n1, n2) = if w.class() == ProblemClass::Maximizing {
            (n1.max(0.0), n2.max(0.0))
        } else {
            (n1, n2)
        };
        let n = Direction::from_components(n1, n2).expect("non-zero segment");
        total += w.evaluate(n)? * len;
    }
    Ok(total)
}

/// Weighted length of a closed counterclockwise polyline with outward normals.
pub fn functional_on_closed(w: &DirectionWeight, points: &[Point]) -> Result<f64, GeomError> {
    if points.is_empty() {
        return Ok(0.0);
    }
    let mut closed = points.to_vec();
    closed.push(points[0]);
    // Outward normal of a counterclockwise loop is (dy, -dx)/len.
    functional_on_polyline(w, &closed, true)
}

pub fn functional_on_polygon(w: &DirectionWeight, p: &ConvexPolygon) -> Result<f64, GeomError> {
    functional_on_closed(w, p.vertices())
}

/// Weighted length of the curve including its tails.
pub fn functional_on_curve(w: &DirectionWeight, c: &MonotoneCurve) -> Result<f64, GeomError> {
    let mut total = functional_on_polyline(w, &c.points, false)?;
    let first = c.first();
    let last = c.last();
    if let Some(right) = c.tails.right {
        total += tail_functional(w, right, last.x, last.y, false)?;
    }
    if let Some(top) = c.tails.top {
        total += tail_functional(w, top, first.y, first.x, true)?;
    }
    Ok(total)
}

/// Homogeneous extension `|v| w(v / |v|)` evaluated at `(a, b)`.
fn homogeneous(w: &DirectionWeight, a: f64, b: f64) -> Result<f64, WeightError> {
    match Direction::from_components(a, b) {
        Some(d) => Ok(a.hypot(b) * w.evaluate(d)?),
        None => Ok(0.0),
    }
}

/// Weighted length of a tail `v(t)` for `t` from the anchor to infinity; `t`
/// is `x` for the right tail and `y` for the top tail (`swap`).
fn tail_functional(
    w: &DirectionWeight,
    decay: Decay,
    t_e: f64,
    v_e: f64,
    swap: bool,
) -> Result<f64, GeomError> {
    let eval = |slope: f64| -> Result<f64, WeightError> {
        if swap {
            homogeneous(w, 1.0, slope)
        } else {
            homogeneous(w, slope, 1.0)
        }
    };
    // Integrand in a variable s in [0, inf) in which the tail decays
    // geometrically.
    let integrand = |s: f64| -> Result<f64, WeightError> {
        match decay {
            Decay::Exponential { rate } => Ok(eval(rate * v_e * (-s).exp())? / rate),
            Decay::Power { exponent } => {
                let slope = exponent * (v_e / t_e) * (-(exponent + 1.0) * s).exp();
                Ok(eval(slope)? * t_e * s.exp())
            }
        }
    };
    const CHUNK: f64 = 2.0;
    const PANELS: usize = 64;
    const S_MAX: f64 = 400.0;
    let mut total = 0.0;
    let mut s = 0.0;
    while s < S_MAX {
        let part = simpson_checked(&integrand, s, s + CHUNK, PANELS)?;
        total += part;
        s += CHUNK;
        if part <= 1e-17 * total.max(f64::MIN_POSITIVE) {
            return Ok(total);
        }
    }
    Ok(f64::INFINITY)
}

fn simpson_checked<F>(f: &F, a: f64, b: f64, panels: usize) -> Result<f64, WeightError>
where
    F: Fn(f64) -> Result<f64, WeightError>,
{
    let n = panels + panels % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a)? + f(b)?;
    for i in 1..n {
        let weight = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * f(a + h * i as f64)?;
    }
    Ok(sum * h / 3.0)
}

/// Composite Simpson rule with `panels` (rounded up to even) sub-intervals.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    simpson_checked(&|x| Ok(f(x)), a, b, panels).unwrap_or(f64::NAN)
}

fn window_grid(window: (f64, f64)) -> impl Iterator<Item = f64> {
    let (lo, hi) = window;
    (0..SUP_GRID).map(move |i| {
        if i + 1 == SUP_GRID {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (SUP_GRID - 1) as f64
        }
    })
}

fn check_window(c: &MonotoneCurve, window: (f64, f64)) -> Result<(), GeomError> {
    let (lo, hi) = c.x_range();
    let below = if c.tails.top.is_some() { window.0 <= lo } else { window.0 < lo };
    if !(window.0 < window.1) || below || window.1 > hi {
        return Err(GeomError::Domain(format!(
            "window [{}, {}] is not inside the curve's x-range [{lo}, {hi}]",
            window.0, window.1
        )));
    }
    Ok(())
}

/// Largest vertical gap between the curves on a uniform grid over `window`.
pub fn sup_distance(
    c1: &MonotoneCurve,
    c2: &MonotoneCurve,
    window: (f64, f64),
) -> Result<f64, GeomError> {
    check_window(c1, window)?;
    check_window(c2, window)?;
    Ok(window_grid(window)
        .map(|x| (c1.y_at(x).unwrap() - c2.y_at(x).unwrap()).abs())
        .fold(0.0, f64::max))
}

/// Largest vertical gap between the curve and the graph of `f` on `window`.
pub fn sup_distance_to_fn<F: Fn(f64) -> f64>(
    c: &MonotoneCurve,
    f: F,
    window: (f64, f64),
) -> Result<f64, GeomError> {
    check_window(c, window)?;
    Ok(window_grid(window)
        .map(|x| (c.y_at(x).unwrap() - f(x)).abs())
        .fold(0.0, f64::max))
}

/// Distance from `p` to the nearest polyline segment.
pub fn distance_to_polyline(p: Point, points: &[Point]) -> f64 {
    points
        .windows(2)
        .map(|w| point_segment_distance(p, w[0], w[1]))
        .fold(f64::INFINITY, f64::min)
}
