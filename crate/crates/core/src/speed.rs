//! Longitudinal speed adjustment for the ego vehicle.
//!
//! Each tick the ego looks at the closest other road user, intersects the
//! two heading lines to get a probable collision point, and asks where it
//! will be when the other agent arrives there. If that future position is
//! within the safe radius of the collision point, the ego speeds up or
//! slows down by a fixed increment depending on whether the point is still
//! ahead of it; otherwise it holds speed.

use crate::agents::AgentState;
use crate::geometry::{heading_line_intersection, Point2, Vec2};

/// Other agents slower than this (m/s) have no defined arrival time at the
/// collision point and trigger a hold.
pub const MIN_OTHER_SPEED: f64 = 1e-6;

/// Tuning of the speed rule.
#[derive(Debug, Clone, Copy)]
pub struct SpeedModParams {
    /// Safe radius around the collision point, meters.
    pub z: f64,
    /// Per-tick speed increment, m/s.
    pub delta_v: f64,
    /// Ego speed bounds, m/s.
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpeedAction {
    Decelerate,
    Accelerate,
    Hold,
}

/// Intermediate quantities of an evaluated (non-degenerate) decision,
/// recorded for traces and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedDiagnostics {
    /// Probable collision point of the two heading lines.
    pub collision_point: Point2,
    /// Time for the other agent to reach it, seconds.
    pub arrival_time: f64,
    /// Where the ego will be at that time, holding course and speed.
    pub ego_future: Point2,
    /// Distance between the two, meters.
    pub miss_distance: f64,
    /// Dot of the ego heading with (collision point - ego future); its
    /// sign says whether the point is still ahead of the ego then.
    pub approach_dot: f64,
}

/// Why the rule resolved the way it did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpeedDetail {
    /// The full rule ran; see the recorded quantities.
    Evaluated(SpeedDiagnostics),
    /// Headings (anti)parallel: no collision point exists.
    ParallelHeadings,
    /// The other agent is (nearly) stationary: no arrival time.
    StationaryOther,
    /// The collision point lies behind the other agent's heading.
    PointBehindOther,
    /// There was nobody to evaluate against.
    NoOtherAgent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedDecision {
    pub action: SpeedAction,
    /// Commanded speed for the next tick, clamped to `[v_min, v_max]`.
    pub new_speed: f64,
    pub detail: SpeedDetail,
}

fn hold(ego: &AgentState, params: &SpeedModParams, detail: SpeedDetail) -> SpeedDecision {
    SpeedDecision {
        action: SpeedAction::Hold,
        new_speed: ego.speed.clamp(params.v_min, params.v_max),
        detail,
    }
}

/// Index (into `others`) of the agent closest to the ego; ties go to the
/// lowest index. `None` when there is nobody.
pub fn closest_agent(ego: &AgentState, others: &[AgentState]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, other) in others.iter().enumerate() {
        let d = ego.position.dist(other.position);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// One evaluation of the speed rule for the ego against one other agent.
///
/// Degenerate geometries (parallel headings, stationary other, collision
/// point behind the other agent) resolve to a hold with the reason
/// recorded. Exactly one action fires per call and the commanded speed
/// differs from the current one by `delta_v` or not at all, before the
/// `[v_min, v_max]` clamp.
pub fn speed_update(
    ego: &AgentState,
    other: &AgentState,
    params: &SpeedModParams,
) -> SpeedDecision {
    let Some(collision_point) = heading_line_intersection(
        ego.position,
        ego.heading,
        other.position,
        other.heading,
    ) else {
        return hold(ego, params, SpeedDetail::ParallelHeadings);
    };
    if other.speed < MIN_OTHER_SPEED {
        return hold(ego, params, SpeedDetail::StationaryOther);
    }
    // The line intersection is orientation-blind; only a point the other
    // agent is actually driving toward counts.
    if Vec2::unit(other.heading).dot(collision_point - other.position) <= 0.0 {
        return hold(ego, params, SpeedDetail::PointBehindOther);
    }

    let arrival_time = other.position.dist(collision_point) / other.speed;
    let ego_dir = Vec2::unit(ego.heading);
    let ego_future = ego.position + ego_dir * (ego.speed * arrival_time);
    let to_collision = collision_point - ego_future;
    let miss_distance = to_collision.norm();
    let approach_dot = ego_dir.dot(to_collision);

    let action = if miss_distance < params.z {
        if approach_dot >= 0.0 {
            // The ego would still be short of the point: let the other
            // agent clear it first.
            SpeedAction::Decelerate
        } else {
            // The ego would already be past the point: get through sooner.
            SpeedAction::Accelerate
        }
    } else {
        SpeedAction::Hold
    };
    let target = match action {
        SpeedAction::Decelerate => ego.speed - params.delta_v,
        SpeedAction::Accelerate => ego.speed + params.delta_v,
        SpeedAction::Hold => ego.speed,
    };
    SpeedDecision {
        action,
        new_speed: target.clamp(params.v_min, params.v_max),
        detail: SpeedDetail::Evaluated(SpeedDiagnostics {
            collision_point,
            arrival_time,
            ego_future,
            miss_distance,
            approach_dot,
        }),
    }
}
