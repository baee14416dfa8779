//! Planar primitives: points, segments, discs, polygonal regions with holes,
//! clearance queries and the closest-approach predicate for two linearly
//! moving points.
//!
//! All comparisons against geometric thresholds go through [`EPS`]. A
//! configuration that touches a threshold within `EPS` is treated as a
//! violation (in collision / not clear).

use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

/// Tolerance, in meters, used for every geometric `>=` / `<=` decision.
pub const EPS: f64 = 1e-9;

/// Returns true when `value` is clear of `bound`, i.e. strictly above it by
/// more than [`EPS`]. Touching counts as not clear.
#[inline]
pub fn clear_of(value: f64, bound: f64) -> bool {
    value >= bound + EPS
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Point2 {
    fn from(v: [f64; 2]) -> Self {
        Point2::new(v[0], v[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn normalized_or_zero(self) -> Point2 {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            Point2::ZERO
        }
    }

    #[inline]
    pub fn lerp(self, o: Point2, s: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * s, self.y + (o.y - self.y) * s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    #[inline]
    pub const fn new(a: Point2, b: Point2) -> Self {
        Segment2 { a, b }
    }

    #[inline]
    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }

    pub fn is_degenerate(&self) -> bool {
        (self.b - self.a).norm_sq() == 0.0
    }

    #[inline]
    pub fn at(&self, s: f64) -> Point2 {
        self.a.lerp(self.b, s)
    }

    /// Parameter in `[0, 1]` of the point of the segment closest to `p`.
    pub fn closest_param(&self, p: Point2) -> f64 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq == 0.0 {
            return 0.0;
        }
        ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0)
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        self.at(self.closest_param(p)).dist(p)
    }

    /// Exact distance between two closed segments (zero when they touch or
    /// cross).
    pub fn distance_to_segment(&self, o: &Segment2) -> f64 {
        if segments_intersect(self, o) {
            return 0.0;
        }
        self.distance_to_point(o.a)
            .min(self.distance_to_point(o.b))
            .min(o.distance_to_point(self.a))
            .min(o.distance_to_point(self.b))
    }

    /// Parameters along `self` at which `o` meets it. Collinear overlaps
    /// report both ends of the shared interval.
    fn intersection_params(&self, o: &Segment2, out: &mut Vec<f64>) {
        let r = self.b - self.a;
        let s = o.b - o.a;
        let denom = r.cross(s);
        let qp = o.a - self.a;
        if denom.abs() > 1e-15 * (r.norm() * s.norm()).max(1e-300) {
            let t = qp.cross(s) / denom;
            let u = qp.cross(r) / denom;
            if (-1e-12..=1.0 + 1e-12).contains(&t) && (-1e-12..=1.0 + 1e-12).contains(&u) {
                out.push(t.clamp(0.0, 1.0));
            }
        } else if qp.cross(r).abs() <= 1e-12 * r.norm().max(1.0) {
            let len_sq = r.norm_sq();
            if len_sq == 0.0 {
                return;
            }
            for p in [o.a, o.b] {
                let t = (p - self.a).dot(r) / len_sq;
                if (0.0..=1.0).contains(&t) {
                    out.push(t);
                }
            }
        }
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection test (touching counts).
pub fn segments_intersect(s: &Segment2, o: &Segment2) -> bool {
    let d1 = orient(o.a, o.b, s.a);
    let d2 = orient(o.a, o.b, s.b);
    let d3 = orient(s.a, s.b, o.a);
    let d4 = orient(s.a, s.b, o.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(o.a, o.b, s.a))
        || (d2 == 0.0 && on_segment(o.a, o.b, s.b))
        || (d3 == 0.0 && on_segment(s.a, s.b, o.a))
        || (d4 == 0.0 && on_segment(s.a, s.b, o.b))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point2, radius: f64) -> Self {
        debug_assert!(radius > 0.0);
        Disc { center, radius }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum RegionError {
    #[error("ring {0} has fewer than 3 vertices")]
    TooFewVertices(usize),
    #[error("ring {0} contains a non-finite coordinate")]
    NonFinite(usize),
    #[error("ring {0} is self-intersecting")]
    SelfIntersecting(usize),
    #[error("hole {0} is not strictly inside the outer ring")]
    HoleOutside(usize),
    #[error("holes {0} and {1} overlap")]
    HolesOverlap(usize, usize),
}

/// Free region: the interior of `outer` minus the interiors of `holes`.
///
/// Orientation is normalized on construction (outer counter-clockwise,
/// holes clockwise), so callers may pass rings either way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolygonRegion {
    pub outer: Vec<Point2>,
    #[serde(default)]
    pub holes: Vec<Vec<Point2>>,
}

fn signed_area(ring: &[Point2]) -> f64 {
    let n = ring.len();
    (0..n).map(|i| ring[i].cross(ring[(i + 1) % n])).sum::<f64>() * 0.5
}

fn ring_edges(ring: &[Point2]) -> impl Iterator<Item = Segment2> + '_ {
    let n = ring.len();
    (0..n).map(move |i| Segment2::new(ring[i], ring[(i + 1) % n]))
}

/// Even-odd containment; boundary points may land on either side.
fn ring_contains(ring: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    let n = ring.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    let edges: Vec<Segment2> = ring_edges(ring).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(&edges[i], &edges[j]) {
                return false;
            }
        }
    }
    true
}

impl PolygonRegion {
    /// Validates and normalizes orientation.
    pub fn new(outer: Vec<Point2>, holes: Vec<Vec<Point2>>) -> Result<Self, RegionError> {
        let mut region = PolygonRegion { outer, holes };
        region.normalize()?;
        Ok(region)
    }

    pub fn rectangle(min: Point2, max: Point2) -> Self {
        PolygonRegion {
            outer: vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)],
            holes: Vec::new(),
        }
    }

    /// Axis-aligned rectangle as a clockwise hole ring.
    pub fn rect_ring(min: Point2, max: Point2) -> Vec<Point2> {
        vec![min, Point2::new(min.x, max.y), max, Point2::new(max.x, min.y)]
    }

    pub fn with_hole(mut self, ring: Vec<Point2>) -> Self {
        self.holes.push(ring);
        self
    }

    /// Checks well-formedness and fixes ring orientation in place.
    pub fn normalize(&mut self) -> Result<(), RegionError> {
        let rings = std::iter::once(&self.outer).chain(self.holes.iter());
        for (i, ring) in rings.enumerate() {
            if ring.len() < 3 {
                return Err(RegionError::TooFewVertices(i));
            }
            if ring.iter().any(|p| !p.is_finite()) {
                return Err(RegionError::NonFinite(i));
            }
            if !ring_is_simple(ring) {
                return Err(RegionError::SelfIntersecting(i));
            }
        }
        if signed_area(&self.outer) < 0.0 {
            self.outer.reverse();
        }
        for h in &mut self.holes {
            if signed_area(h) > 0.0 {
                h.reverse();
            }
        }
        let outer_edges: Vec<Segment2> = ring_edges(&self.outer).collect();
        for (i, h) in self.holes.iter().enumerate() {
            let crosses = ring_edges(h).any(|e| outer_edges.iter().any(|o| segments_intersect(&e, o)));
            if crosses || !h.iter().all(|&p| ring_contains(&self.outer, p)) {
                return Err(RegionError::HoleOutside(i));
            }
        }
        for i in 0..self.holes.len() {
            for j in (i + 1)..self.holes.len() {
                let (a, b) = (&self.holes[i], &self.holes[j]);
                let touch = ring_edges(a).any(|e| ring_edges(b).any(|f| segments_intersect(&e, &f)));
                if touch || ring_contains(a, b[0]) || ring_contains(b, a[0]) {
                    return Err(RegionError::HolesOverlap(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = Segment2> + '_ {
        self.rings().flat_map(ring_edges)
    }

    /// Axis-aligned bounding box of the outer ring as `(min, max)`.
    pub fn bounds(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.outer {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        (min, max)
    }

    /// True if `p` lies in the open free region (boundary excluded up to
    /// floating point).
    pub fn contains(&self, p: Point2) -> bool {
        ring_contains(&self.outer, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.boundary_edges()
            .map(|e| e.distance_to_point(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Signed distance from `p` to the boundary of the free region: positive
/// inside, negative outside, zero on the boundary.
pub fn point_clearance(p: Point2, region: &PolygonRegion) -> f64 {
    let d = region.boundary_distance(p);
    if d == 0.0 || region.contains(p) {
        d
    } else {
        -d
    }
}

/// Minimum of [`point_clearance`] over every point of `s`.
///
/// Exact while the segment stays inside the closed region. When part of the
/// segment lies outside, the result is negative and equals the deepest
/// penetration found among the segment endpoints, the midpoints of the
/// outside pieces and the projections of boundary vertices onto those
/// pieces; it is therefore an upper bound on the true (more negative)
/// minimum, which preserves every `>= r` decision for `r >= 0`.
pub fn segment_clearance(s: &Segment2, region: &PolygonRegion) -> f64 {
    if s.is_degenerate() {
        return point_clearance(s.a, region);
    }
    let mut params = vec![0.0, 1.0];
    for e in region.boundary_edges() {
        s.intersection_params(&e, &mut params);
    }
    params.sort_by(|a, b| a.total_cmp(b));
    params.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut worst = f64::INFINITY;
    let mut outside = false;
    for &t in &params {
        let c = point_clearance(s.at(t), region);
        if c < 0.0 {
            outside = true;
        }
        worst = worst.min(c);
    }
    let mut outside_pieces = Vec::new();
    for w in params.windows(2) {
        let mid = s.at(0.5 * (w[0] + w[1]));
        let c = point_clearance(mid, region);
        if c < 0.0 {
            outside = true;
            outside_pieces.push((w[0], w[1]));
            worst = worst.min(c);
        }
    }
    if outside {
        for ring in region.rings() {
            for &v in ring {
                let t = s.closest_param(v);
                if outside_pieces.iter().any(|&(lo, hi)| t > lo && t < hi) {
                    worst = worst.min(point_clearance(s.at(t), region));
                }
            }
        }
        return worst.min(0.0);
    }
    region
        .boundary_edges()
        .map(|e| e.distance_to_segment(s))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum over the points of `s` of the distance to the disc center, minus
/// the disc radius. Negative means the segment enters the disc.
pub fn segment_disc_min_distance(s: &Segment2, d: &Disc) -> f64 {
    s.distance_to_point(d.center) - d.radius
}

/// Parameter in `[0, 1]` minimizing `|a(t) - b(t)|` for two points moving
/// linearly over the same unit interval, together with that distance.
pub fn moving_points_closest(a0: Point2, a1: Point2, b0: Point2, b1: Point2) -> (f64, f64) {
    let d0 = a0 - b0;
    let dv = (a1 - b1) - d0;
    let vv = dv.norm_sq();
    let t = if vv > 0.0 {
        (-d0.dot(dv) / vv).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (t, (d0 + dv * t).norm())
}

/// Closed-form minimum distance between two points each moving linearly
/// over the same time interval.
pub fn moving_discs_min_separation(a_start: Point2, a_end: Point2, b_start: Point2, b_end: Point2) -> f64 {
    moving_points_closest(a_start, a_end, b_start, b_end).1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point2 {
        Point2::new(x, y)
    }

    fn square(side: f64) -> PolygonRegion {
        PolygonRegion::rectangle(p(0.0, 0.0), p(side, side))
    }

    fn l_room() -> PolygonRegion {
        PolygonRegion::new(
            vec![p(0.0, 0.0), p(10.0, 0.0), p(10.0, 4.0), p(4.0, 4.0), p(4.0, 10.0), p(0.0, 10.0)],
            vec![],
        )
        .unwrap()
    }

    /// Dense sampling of the boundary, used as an oracle.
    fn sampled_boundary_distance(region: &PolygonRegion, q: Point2, per_edge: usize) -> f64 {
        let mut best = f64::INFINITY;
        for e in region.boundary_edges() {
            for k in 0..=per_edge {
                best = best.min(e.at(k as f64 / per_edge as f64).dist(q));
            }
        }
        best
    }

    #[test]
    fn center_of_square() {
        assert_eq!(point_clearance(p(5.0, 5.0), &square(10.0)), 5.0);
    }

    #[test]
    fn on_boundary_is_zero() {
        assert_eq!(point_clearance(p(0.0, 3.0), &square(10.0)), 0.0);
        assert_eq!(point_clearance(p(10.0, 10.0), &square(10.0)), 0.0);
    }

    #[test]
    fn inside_hole_is_negative() {
        let region = PolygonRegion::rectangle(p(-10.0, -10.0), p(10.0, 10.0))
            .with_hole(PolygonRegion::rect_ring(p(0.5, 0.5), p(1.5, 1.5)));
        let c = point_clearance(p(1.0, 1.2), &region);
        let oracle = sampled_boundary_distance(&region, p(1.0, 1.2), 20_000);
        assert!(c < 0.0);
        assert!((c.abs() - oracle).abs() < 1e-4, "{c} vs {oracle}");
    }

    #[test]
    fn corridor_centerline() {
        let corridor = PolygonRegion::rectangle(p(0.0, 0.0), p(20.0, 4.0));
        let s = Segment2::new(p(2.0, 2.0), p(18.0, 2.0));
        assert!((segment_clearance(&s, &corridor) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn segment_touching_wall() {
        let corridor = PolygonRegion::rectangle(p(0.0, 0.0), p(20.0, 4.0));
        let s = Segment2::new(p(2.0, 2.0), p(2.0, 4.0));
        assert_eq!(segment_clearance(&s, &corridor), 0.0);
    }

    #[test]
    fn diagonal_in_l_room_matches_sampling() {
        let room = l_room();
        let s = Segment2::new(p(0.5, 9.0), p(9.0, 0.5));
        let exact = segment_clearance(&s, &room);
        let mut oracle = f64::INFINITY;
        for k in 0..=10_000 {
            let q = s.at(k as f64 / 10_000.0);
            oracle = oracle.min(point_clearance(q, &room));
        }
        // this segment cuts the reflex corner at (4,4), so both are negative
        assert!(exact < 0.0 && oracle < 0.0);

        let s = Segment2::new(p(0.7, 9.3), p(3.1, 3.9));
        let exact = segment_clearance(&s, &room);
        let mut oracle = f64::INFINITY;
        for k in 0..=10_000 {
            let q = s.at(k as f64 / 10_000.0);
            oracle = oracle.min(sampled_boundary_distance(&room, q, 2_000));
        }
        assert!(exact > 0.0);
        assert!((exact - oracle).abs() < 1e-6, "{exact} vs {oracle}");
    }

    #[test]
    fn segment_leaving_region_is_negative() {
        let region = square(10.0);
        let s = Segment2::new(p(5.0, 5.0), p(15.0, 5.0));
        let c = segment_clearance(&s, &region);
        assert!(c <= -4.9, "{c}");
        let through_hole = square(10.0).with_hole(PolygonRegion::rect_ring(p(4.0, 4.0), p(6.0, 6.0)));
        let s = Segment2::new(p(1.0, 5.0), p(9.0, 5.0));
        assert!(segment_clearance(&s, &through_hole) < -0.9);
    }

    #[test]
    fn degenerate_segment_is_a_point() {
        let s = Segment2::new(p(3.0, 4.0), p(3.0, 4.0));
        assert_eq!(segment_clearance(&s, &square(10.0)), 3.0);
    }

    #[test]
    fn segment_disc_cases() {
        let s = Segment2::new(p(0.0, 0.0), p(2.0, 0.0));
        assert!((segment_disc_min_distance(&s, &Disc::new(p(1.0, 1.0), 0.5)) - 0.5).abs() < 1e-15);
        assert!((segment_disc_min_distance(&s, &Disc::new(p(1.0, 0.0), 0.5)) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn segment_disc_oblique_matches_sampling() {
        let s = Segment2::new(p(-1.3, 0.4), p(2.7, 3.1));
        let d = Disc::new(p(1.9, 0.2), 0.75);
        let exact = segment_disc_min_distance(&s, &d);
        let n = 2_000_000;
        let oracle = (0..=n)
            .map(|k| s.at(k as f64 / n as f64).dist(d.center))
            .fold(f64::INFINITY, f64::min)
            - d.radius;
        assert!((exact - oracle).abs() < 1e-9, "{exact} vs {oracle}");
    }

    #[test]
    fn head_through_crossing() {
        let d = moving_discs_min_separation(p(0.0, 0.0), p(0.0, 0.0), p(10.0, 0.0), p(-10.0, 0.0));
        assert!(d.abs() < 1e-12);
        let (t, _) = moving_points_closest(p(0.0, 0.0), p(0.0, 0.0), p(10.0, 0.0), p(-10.0, 0.0));
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn parallel_translation_keeps_offset() {
        let d = moving_discs_min_separation(p(0.0, 0.0), p(5.0, 2.0), p(0.0, 3.0), p(5.0, 5.0));
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_paths_match_sampling() {
        let (a0, a1, b0, b1) = (p(0.0, 0.0), p(4.0, 0.0), p(2.0, 3.0), p(2.0, -3.0));
        let exact = moving_discs_min_separation(a0, a1, b0, b1);
        let n = 1_000_000;
        let oracle = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                a0.lerp(a1, t).dist(b0.lerp(b1, t))
            })
            .fold(f64::INFINITY, f64::min);
        assert!((exact - oracle).abs() < 1e-6, "{exact} vs {oracle}");
    }

    #[test]
    fn rejects_malformed_regions() {
        let bowtie = vec![p(0.0, 0.0), p(1.0, 1.0), p(1.0, 0.0), p(0.0, 1.0)];
        assert_eq!(PolygonRegion::new(bowtie, vec![]), Err(RegionError::SelfIntersecting(0)));
        let outer = square(10.0).outer;
        let stray = PolygonRegion::rect_ring(p(9.0, 9.0), p(11.0, 11.0));
        assert_eq!(PolygonRegion::new(outer.clone(), vec![stray]), Err(RegionError::HoleOutside(0)));
        let h1 = PolygonRegion::rect_ring(p(1.0, 1.0), p(3.0, 3.0));
        let h2 = PolygonRegion::rect_ring(p(2.0, 2.0), p(4.0, 4.0));
        assert_eq!(PolygonRegion::new(outer, vec![h1, h2]), Err(RegionError::HolesOverlap(0, 1)));
    }

    fn arb_point() -> impl Strategy<Value = Point2> {
        (-20.0f64..20.0, -20.0f64..20.0).prop_map(|(x, y)| p(x, y))
    }

    proptest! {
        #[test]
        fn separation_symmetric_and_rigid(a0 in arb_point(), a1 in arb_point(), b0 in arb_point(), b1 in arb_point(),
                                           theta in 0.0f64..std::f64::consts::TAU, shift in arb_point()) {
            let d = moving_discs_min_separation(a0, a1, b0, b1);
            prop_assert!((d - moving_discs_min_separation(b0, b1, a0, a1)).abs() < 1e-9);
            let (s, c) = theta.sin_cos();
            let tf = |q: Point2| p(c * q.x - s * q.y + shift.x, s * q.x + c * q.y + shift.y);
            let dt = moving_discs_min_separation(tf(a0), tf(a1), tf(b0), tf(b1));
            prop_assert!((d - dt).abs() < 1e-8);
        }

        #[test]
        fn clearance_predicate_matches_disc_containment(q in (0.0f64..12.0, 0.0f64..12.0), r in 0.0f64..3.0) {
            // Region: 12x12 square with a 2x2 hole; disc containment checked by
            // sampling the disc rim and interior against the region.
            let region = square(12.0).with_hole(PolygonRegion::rect_ring(p(5.0, 5.0), p(7.0, 7.0)));
            let q = p(q.0, q.1);
            let c = point_clearance(q, &region);
            prop_assume!((c - r).abs() > 1e-3);
            let mut inside = region.contains(q);
            for k in 0..720 {
                let a = k as f64 * std::f64::consts::TAU / 720.0;
                for rr in [r, 0.5 * r] {
                    let pt = q + p(a.cos(), a.sin()) * rr;
                    inside &= region.contains(pt);
                }
            }
            prop_assert_eq!(c >= r, inside);
        }

        #[test]
        fn segment_clearance_matches_sampling(a in (0.5f64..11.5, 0.5f64..11.5), b in (0.5f64..11.5, 0.5f64..11.5)) {
            let region = square(12.0)
                .with_hole(PolygonRegion::rect_ring(p(5.0, 5.0), p(7.0, 7.0)))
                .with_hole(vec![p(1.0, 9.0), p(2.0, 11.0), p(3.0, 9.0)]);
            let s = Segment2::new(p(a.0, a.1), p(b.0, b.1));
            let exact = segment_clearance(&s, &region);
            let sampled = (0..=2000)
                .map(|k| point_clearance(s.at(k as f64 / 2000.0), &region))
                .fold(f64::INFINITY, f64::min);
            if sampled > 1e-6 {
                // inside: exact minimum, sampling can only overestimate
                prop_assert!(exact <= sampled + 1e-12);
                prop_assert!(sampled - exact < 0.01 * s.length() + 1e-9);
                let endpoints_min = point_clearance(s.a, &region).min(point_clearance(s.b, &region));
                prop_assert!(exact <= endpoints_min + 1e-12);
            } else if sampled < -1e-6 {
                prop_assert!(exact < 0.0);
            }
        }
    }
}
