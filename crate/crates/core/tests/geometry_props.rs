//! Property tests for the planar geometry helpers.

use std::f64::consts::PI;

use gtplan_core::geometry::{heading_line_intersection, normalize_angle};
use gtplan_core::{Point2, Polyline, Vec2};
use proptest::prelude::*;

fn finite_coord() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

/// A polyline from a random walk with steps long enough that consecutive
/// vertices never coincide.
fn polyline() -> impl Strategy<Value = Polyline> {
    (
        finite_coord(),
        finite_coord(),
        prop::collection::vec((0.5..5.0f64, -PI..PI), 1..6),
    )
        .prop_map(|(x0, y0, steps)| {
            let mut pts = vec![Point2::new(x0, y0)];
            for (len, dir) in steps {
                let last = *pts.last().unwrap();
                pts.push(last + Vec2::unit(dir) * len);
            }
            Polyline::new(pts).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn distance_is_a_metric(
        ax in finite_coord(), ay in finite_coord(),
        bx in finite_coord(), by in finite_coord(),
        cx in finite_coord(), cy in finite_coord(),
    ) {
        let a = Point2::new(ax, ay);
        let b = Point2::new(bx, by);
        let c = Point2::new(cx, cy);
        prop_assert!((a.dist(b) - b.dist(a)).abs() < 1e-12);
        prop_assert!(a.dist(a) == 0.0);
        prop_assert!(a.dist(c) <= a.dist(b) + b.dist(c) + 1e-9);
    }

    #[test]
    fn normalized_angles_stay_in_the_half_open_interval(angle in -50.0..50.0f64) {
        let n = normalize_angle(angle);
        prop_assert!(n > -PI && n <= PI, "{n} out of range");
        // Idempotent, bit for bit.
        prop_assert!(normalize_angle(n) == n);
        // Wrapping by full turns is a no-op up to arithmetic error.
        let shifted = normalize_angle(angle + 4.0 * PI);
        prop_assert!((shifted - n).abs() < 1e-9 || (shifted - n).abs() > 2.0 * PI - 1e-9);
    }

    #[test]
    fn projection_beats_dense_sampling(
        path in polyline(),
        qx in finite_coord(),
        qy in finite_coord(),
    ) {
        let q = Point2::new(qx, qy);
        let proj = path.project(q);
        let verts = path.vertices();
        let mut best = f64::INFINITY;
        for seg in 0..verts.len() - 1 {
            for k in 0..=100 {
                let t = k as f64 / 100.0;
                let p = verts[seg] + (verts[seg + 1] - verts[seg]) * t;
                best = best.min(q.dist(p));
            }
        }
        prop_assert!(
            q.dist(proj.point) <= best + 1e-9,
            "projection {} worse than sampled {best}",
            q.dist(proj.point)
        );
        prop_assert!(proj.arc >= 0.0 && proj.arc <= path.total_len() + 1e-9);
        // The arc length indexes back to the projected point.
        let back = path.point_at_arc(proj.arc);
        prop_assert!(back.dist(proj.point) < 1e-9);
    }

    #[test]
    fn intersection_point_lies_on_both_heading_lines(
        ex in finite_coord(), ey in finite_coord(), eh in -PI..PI,
        nx in finite_coord(), ny in finite_coord(), dh in 0.01..3.13f64,
        flip in prop::bool::ANY,
    ) {
        let e = Point2::new(ex, ey);
        let n = Point2::new(nx, ny);
        let nh = normalize_angle(eh + if flip { -dh } else { dh });
        let p = heading_line_intersection(e, eh, n, nh);
        prop_assert!(p.is_some(), "non-parallel headings must intersect");
        let p = p.unwrap();
        let scale = 1.0 + e.dist(p).max(n.dist(p));
        prop_assert!((p - e).cross(Vec2::unit(eh)).abs() / scale < 1e-6);
        prop_assert!((p - n).cross(Vec2::unit(nh)).abs() / scale < 1e-6);
    }

    #[test]
    fn reflected_queries_flip_the_signed_offset(
        x in finite_coord(),
        y in 0.1..50.0f64,
    ) {
        let path = Polyline::new(vec![Point2::new(-200.0, 0.0), Point2::new(200.0, 0.0)]).unwrap();
        let above = path.signed_offset(Point2::new(x, y));
        let below = path.signed_offset(Point2::new(x, -y));
        prop_assert!((above + below).abs() < 1e-9);
        prop_assert!(above > 0.0, "left of an eastbound path must be positive");
    }
}
