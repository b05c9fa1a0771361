//! Planar primitives shared by the planners: points, vectors, polyline
//! reference paths and heading-line intersections.
//!
//! Everything is plain `f64` Euclidean geometry. Angles are radians,
//! measured counterclockwise from the +x axis and normalized to the
//! half-open interval `(-pi, pi]`.

use std::f64::consts::PI;

use thiserror::Error;

/// Two headings are treated as parallel when the sine of their difference
/// falls below this bound.
pub const PARALLEL_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("polyline needs at least 2 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polyline vertices {0} and {1} coincide")]
    CoincidentVertices(usize, usize),
}

/// Wrap an angle into `(-pi, pi]`. Angles already in range pass through
/// unchanged, so repeated normalization never drifts.
pub fn normalize_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle.rem_euclid(2.0 * PI);
    if wrapped > PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// A position in the plane. Coordinates are finite by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        assert!(
            x.is_finite() && y.is_finite(),
            "point coordinates must be finite, got ({x}, {y})"
        );
        Self { x, y }
    }

    /// Euclidean distance to another point.
    pub fn dist(self, other: Point2) -> f64 {
        (other - self).norm()
    }
}

/// A displacement in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector pointing along `heading`.
    pub fn unit(heading: f64) -> Self {
        Self { x: heading.cos(), y: heading.sin() }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z component of the 3-d cross product; positive when `other` lies
    /// counterclockwise of `self`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }
}

impl std::ops::Sub for Point2 {
    type Output = Vec2;
    fn sub(self, rhs: Point2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Add<Vec2> for Point2 {
    type Output = Point2;
    fn add(self, rhs: Vec2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Closest point on the polyline.
    pub point: Point2,
    /// Arc length from the first vertex to `point`.
    pub arc: f64,
    /// Unit tangent of the segment the projection landed on.
    pub tangent: Vec2,
    /// Index of that segment.
    pub segment: usize,
}

/// An open polygonal path with at least two vertices and no zero-length
/// segments.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    vertices: Vec<Point2>,
    /// Cumulative arc length at each vertex; `cum[0] == 0`.
    cum: Vec<f64>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 2 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for i in 1..vertices.len() {
            let seg = vertices[i].dist(vertices[i - 1]);
            if seg == 0.0 {
                return Err(GeometryError::CoincidentVertices(i - 1, i));
            }
            cum.push(cum[i - 1] + seg);
        }
        Ok(Self { vertices, cum })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn total_len(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Closest point on the path to `p`. Ties between segments resolve to
    /// the smallest arc-length position.
    pub fn project(&self, p: Point2) -> Projection {
        let mut best: Option<(f64, Projection)> = None;
        for i in 0..self.vertices.len() - 1 {
            let a = self.vertices[i];
            let b = self.vertices[i + 1];
            let ab = b - a;
            let len = ab.norm();
            let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
            let q = a + ab * t;
            let d2 = (p - q).norm_sq();
            if best.is_none() || d2 < best.unwrap().0 {
                best = Some((
                    d2,
                    Projection {
                        point: q,
                        arc: self.cum[i] + t * len,
                        tangent: ab * (1.0 / len),
                        segment: i,
                    },
                ));
            }
        }
        best.unwrap().1
    }

    /// Point at arc length `s` from the start, clamped to the path ends.
    pub fn point_at_arc(&self, s: f64) -> Point2 {
        let s = s.clamp(0.0, self.total_len());
        // Find the segment containing s.
        let mut i = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        if i >= self.vertices.len() - 1 {
            i = self.vertices.len() - 2;
        }
        let a = self.vertices[i];
        let b = self.vertices[i + 1];
        let seg_len = self.cum[i + 1] - self.cum[i];
        let t = (s - self.cum[i]) / seg_len;
        a + (b - a) * t
    }

    /// Signed lateral offset of `p` from the path: positive when `p` lies
    /// left of the local tangent, negative when right.
    pub fn signed_offset(&self, p: Point2) -> f64 {
        let proj = self.project(p);
        proj.tangent.cross(p - proj.point)
    }
}

/// Intersection of the two lines spawned by `(p_e, phi_e)` and
/// `(p_n, phi_n)`. Returns `None` for (near-)parallel headings.
///
/// Solved in parametric form: with unit directions `d_e`, `d_n`, the point
/// is `p_e + t * d_e` where `t = cross(p_n - p_e, d_n) / cross(d_e, d_n)`.
/// The denominator equals `sin(phi_n - phi_e)`, so the parallel cutoff is a
/// bound on the heading difference, not on the distance between the lines.
pub fn heading_line_intersection(
    p_e: Point2,
    phi_e: f64,
    p_n: Point2,
    phi_n: f64,
) -> Option<Point2> {
    let d_e = Vec2::unit(phi_e);
    let d_n = Vec2::unit(phi_n);
    let denom = d_e.cross(d_n);
    if denom.abs() < PARALLEL_TOL {
        return None;
    }
    let t = (p_n - p_e).cross(d_n) / denom;
    Some(p_e + d_e * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dist_is_euclidean() {
        assert_eq!(Point2::new(0.0, 0.0).dist(Point2::new(3.0, 4.0)), 5.0);
        assert_eq!(Point2::new(1.0, 1.0).dist(Point2::new(1.0, 1.0)), 0.0);
    }

    #[test]
    fn normalize_angle_wraps_into_half_open_interval() {
        assert_relative_eq!(normalize_angle(3.0 * PI), PI);
        assert_relative_eq!(normalize_angle(-PI), PI);
        assert_relative_eq!(normalize_angle(-0.1), -0.1);
        assert_relative_eq!(normalize_angle(2.0 * PI + 0.25), 0.25);
        assert_eq!(normalize_angle(0.0), 0.0);
    }

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert_eq!(
            Polyline::new(vec![Point2::new(0.0, 0.0)]),
            Err(GeometryError::TooFewVertices(1))
        );
        assert_eq!(
            Polyline::new(vec![
                Point2::new(0.0, 0.0),
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
            ]),
            Err(GeometryError::CoincidentVertices(0, 1))
        );
    }

    #[test]
    fn projection_lands_on_interior_and_clamps_to_endpoints() {
        let path = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();

        let mid = path.project(Point2::new(3.0, 4.0));
        assert_eq!(mid.point, Point2::new(3.0, 0.0));
        assert_eq!(mid.arc, 3.0);

        let before = path.project(Point2::new(-1.0, 1.0));
        assert_eq!(before.point, Point2::new(0.0, 0.0));
        assert_eq!(before.arc, 0.0);

        let after = path.project(Point2::new(11.0, -2.0));
        assert_eq!(after.point, Point2::new(10.0, 0.0));
        assert_eq!(after.arc, 10.0);
    }

    #[test]
    fn projection_at_corner_prefers_earlier_arc() {
        // L-shaped path; (2, 2) is equidistant from both legs.
        let path = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
        ])
        .unwrap();
        let proj = path.project(Point2::new(2.0, 2.0));
        assert_eq!(proj.segment, 0);
        assert_eq!(proj.point, Point2::new(2.0, 0.0));
    }

    #[test]
    fn point_at_arc_walks_the_path() {
        let path = Polyline::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
        ])
        .unwrap();
        assert_eq!(path.point_at_arc(0.0), Point2::new(0.0, 0.0));
        assert_eq!(path.point_at_arc(4.0), Point2::new(4.0, 0.0));
        assert_eq!(path.point_at_arc(6.0), Point2::new(4.0, 2.0));
        assert_eq!(path.point_at_arc(99.0), Point2::new(4.0, 4.0));
        assert_eq!(path.point_at_arc(-1.0), Point2::new(0.0, 0.0));
    }

    #[test]
    fn signed_offset_is_positive_left_of_travel() {
        let path = Polyline::new(vec![Point2::new(0.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();
        assert!(path.signed_offset(Point2::new(5.0, 1.0)) > 0.0);
        assert!(path.signed_offset(Point2::new(5.0, -1.0)) < 0.0);
        assert_eq!(path.signed_offset(Point2::new(5.0, 0.0)), 0.0);
    }

    #[test]
    fn heading_lines_cross_where_expected() {
        // Eastbound ego, northbound other standing south of its track.
        let p = heading_line_intersection(
            Point2::new(0.0, 0.0),
            0.0,
            Point2::new(5.0, -5.0),
            PI / 2.0,
        )
        .unwrap();
        assert_relative_eq!(p.x, 5.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);

        // Diagonal crossing.
        let q = heading_line_intersection(
            Point2::new(0.0, 0.0),
            PI / 4.0,
            Point2::new(2.0, 0.0),
            3.0 * PI / 4.0,
        )
        .unwrap();
        assert_relative_eq!(q.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(q.y, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn parallel_and_antiparallel_headings_have_no_intersection() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(0.0, 1.0);
        assert_eq!(heading_line_intersection(a, 0.2, b, 0.2), None);
        assert_eq!(heading_line_intersection(a, 0.2, b, 0.2 + PI), None);
        // Offset below the sine cutoff still counts as parallel.
        assert_eq!(heading_line_intersection(a, 0.0, b, 1e-10), None);
    }

    #[test]
    fn intersection_point_lies_behind_when_geometry_says_so() {
        // The crossing can be at negative ego parameter; the caller decides
        // what to do with that.
        let p = heading_line_intersection(
            Point2::new(0.0, 0.0),
            0.0,
            Point2::new(-3.0, -1.0),
            PI / 2.0,
        )
        .unwrap();
        assert_relative_eq!(p.x, -3.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 0.0, epsilon = 1e-12);
    }
}
