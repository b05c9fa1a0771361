//! Road users and their motion primitives.
//!
//! Each agent carries a pose plus scalar speed. The discrete planner moves
//! agents along straight displacement steps (length proportional to speed,
//! heading drawn from a symmetric fan around the current heading); the
//! continuous simulation and the MPC baseline integrate a kinematic bicycle
//! model instead.

use crate::geometry::{normalize_angle, Point2, Polyline, Vec2};

/// What kind of road user an agent is. The planner treats everyone the
/// same; role only drives collision radii and which agent the ego-specific
/// machinery (speed adjustment, tracking controller) applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Ego,
    Vehicle,
    Pedestrian,
}

impl Role {
    /// Collision radius used by the simulation's pairwise distance checks.
    pub fn collision_radius(self, vehicle_radius: f64, pedestrian_radius: f64) -> f64 {
        match self {
            Role::Ego | Role::Vehicle => vehicle_radius,
            Role::Pedestrian => pedestrian_radius,
        }
    }
}

/// Pose and speed of one agent at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub position: Point2,
    /// Radians, `(-pi, pi]`.
    pub heading: f64,
    /// Meters per second, never negative.
    pub speed: f64,
}

impl AgentState {
    pub fn new(position: Point2, heading: f64, speed: f64) -> Self {
        assert!(heading.is_finite() && speed.is_finite(), "non-finite agent state");
        assert!(speed >= 0.0, "speed must be non-negative, got {speed}");
        Self { position, heading: normalize_angle(heading), speed }
    }
}

/// Static description of one agent in a scenario.
#[derive(Debug, Clone)]
pub struct AgentSpec {
    pub id: String,
    pub role: Role,
    pub initial: AgentState,
    /// Lane center or other reference path the agent wants to stay on.
    pub path: Option<Polyline>,
    /// Target position the agent wants to reach.
    pub goal: Option<Point2>,
    /// Number of candidate headings in this agent's fan (at least 1).
    pub branches: usize,
}

/// Parameters of the discrete displacement search.
#[derive(Debug, Clone, Copy)]
pub struct SearchParams {
    /// Displacement length per planning step is `k_v * speed`.
    pub k_v: f64,
    /// Angular spacing between adjacent fan branches, radians.
    pub delta_theta: f64,
    /// Planning depth: how many consecutive displacement steps each
    /// strategy commits to.
    pub depth: usize,
}

/// Length of one displacement step for an agent moving at `state.speed`.
pub fn displacement_length(state: &AgentState, params: &SearchParams) -> f64 {
    params.k_v * state.speed
}

/// The fan of candidate headings around `heading`.
///
/// Branch 1 keeps the current heading; subsequent branches alternate
/// counterclockwise and clockwise in steps of `delta_theta`:
/// `[0, +1, -1, +2, -2, ...] * delta_theta`. An even count therefore leaves
/// the fan with one more counterclockwise branch than clockwise.
pub fn candidate_headings(heading: f64, branches: usize, delta_theta: f64) -> Vec<f64> {
    assert!(branches >= 1, "an agent needs at least one branch");
    (1..=branches)
        .map(|b| {
            let k: i64 = if b == 1 {
                0
            } else if b % 2 == 0 {
                (b / 2) as i64
            } else {
                -(((b - 1) / 2) as i64)
            };
            normalize_angle(heading + k as f64 * delta_theta)
        })
        .collect()
}

/// Candidate next positions for one displacement step: the current
/// position displaced by `k_v * speed` along each fan heading. Order
/// matches [`candidate_headings`].
pub fn candidate_positions(
    state: &AgentState,
    params: &SearchParams,
    branches: usize,
) -> Vec<Point2> {
    let len = displacement_length(state, params);
    candidate_headings(state.heading, branches, params.delta_theta)
        .into_iter()
        .map(|theta| state.position + Vec2::unit(theta) * len)
        .collect()
}

/// Kinematic bicycle model geometry and input bounds.
#[derive(Debug, Clone, Copy)]
pub struct BicycleParams {
    /// Distance from the reference point to the front axle, meters.
    pub l_f: f64,
    /// Distance from the reference point to the rear axle, meters.
    pub l_r: f64,
    /// Acceleration bound, m/s^2 (applied symmetrically).
    pub a_max: f64,
    /// Steering angle bound, radians.
    pub steer_max: f64,
}

impl BicycleParams {
    pub fn wheelbase(&self) -> f64 {
        self.l_f + self.l_r
    }

    pub fn clamp_input(&self, input: BicycleInput) -> BicycleInput {
        BicycleInput {
            accel: input.accel.clamp(-self.a_max, self.a_max),
            steer: input.steer.clamp(-self.steer_max, self.steer_max),
        }
    }
}

/// Control input of the bicycle model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BicycleInput {
    /// Longitudinal acceleration, m/s^2.
    pub accel: f64,
    /// Front steering angle, radians.
    pub steer: f64,
}

/// One forward-Euler step of the kinematic bicycle model.
///
/// The slip angle `beta = atan(l_r / (l_f + l_r) * tan(steer))` tilts the
/// velocity off the body heading; position advances along `heading + beta`,
/// heading rotates at `speed / l_r * sin(beta)`, and speed integrates the
/// acceleration, clamped at zero so the model never reverses.
pub fn bicycle_step(
    state: &AgentState,
    input: BicycleInput,
    params: &BicycleParams,
    dt: f64,
) -> AgentState {
    assert!(input.accel.is_finite() && input.steer.is_finite(), "non-finite control input");
    assert!(dt.is_finite() && dt > 0.0, "time step must be positive, got {dt}");
    let beta = (params.l_r / (params.l_f + params.l_r) * input.steer.tan()).atan();
    let position = state.position + Vec2::unit(state.heading + beta) * (state.speed * dt);
    let heading = normalize_angle(state.heading + state.speed / params.l_r * beta.sin() * dt);
    let speed = (state.speed + input.accel * dt).max(0.0);
    AgentState { position, heading, speed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn state(x: f64, y: f64, heading: f64, speed: f64) -> AgentState {
        AgentState::new(Point2::new(x, y), heading, speed)
    }

    const PARAMS: BicycleParams =
        BicycleParams { l_f: 1.2, l_r: 1.2, a_max: 3.0, steer_max: 0.6 };

    #[test]
    fn displacement_scales_with_speed() {
        let p = SearchParams { k_v: 0.5, delta_theta: 0.1, depth: 1 };
        assert_eq!(displacement_length(&state(0.0, 0.0, 0.0, 2.0), &p), 1.0);
        assert_eq!(displacement_length(&state(0.0, 0.0, 0.0, 0.0), &p), 0.0);
    }

    #[test]
    fn heading_fan_alternates_around_center() {
        let fan = candidate_headings(0.0, 5, 0.1);
        let expected = [0.0, 0.1, -0.1, 0.2, -0.2];
        assert_eq!(fan.len(), 5);
        for (got, want) in fan.iter().zip(expected) {
            assert_relative_eq!(got, &want, epsilon = 1e-15);
        }
    }

    #[test]
    fn even_branch_count_leans_counterclockwise() {
        let fan = candidate_headings(1.0, 4, 0.2);
        let expected = [1.0, 1.2, 0.8, 1.4];
        for (got, want) in fan.iter().zip(expected) {
            assert_relative_eq!(got, &want, epsilon = 1e-15);
        }
    }

    #[test]
    fn heading_fan_wraps_at_pi() {
        let fan = candidate_headings(PI - 0.05, 2, 0.2);
        assert_relative_eq!(fan[0], PI - 0.05, epsilon = 1e-12);
        // pi - 0.05 + 0.2 wraps to the negative side.
        assert_relative_eq!(fan[1], -PI + 0.15, epsilon = 1e-12);
    }

    #[test]
    fn candidate_positions_lie_on_the_displacement_circle() {
        let p = SearchParams { k_v: 0.5, delta_theta: PI / 2.0, depth: 1 };
        let cands = candidate_positions(&state(0.0, 0.0, 0.0, 2.0), &p, 3);
        let expected = [(1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];
        for (c, (x, y)) in cands.iter().zip(expected) {
            assert_relative_eq!(c.x, x, epsilon = 1e-12);
            assert_relative_eq!(c.y, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn stationary_agent_candidates_collapse_to_its_position() {
        let p = SearchParams { k_v: 0.5, delta_theta: 0.1, depth: 1 };
        for c in candidate_positions(&state(3.0, -2.0, 1.0, 0.0), &p, 5) {
            assert_eq!(c, Point2::new(3.0, -2.0));
        }
    }

    #[test]
    fn bicycle_coasts_straight_without_input() {
        let s0 = state(0.0, 0.0, 0.0, 2.0);
        let s1 = bicycle_step(&s0, BicycleInput::default(), &PARAMS, 0.1);
        assert_relative_eq!(s1.position.x, 0.2, epsilon = 1e-15);
        assert_eq!(s1.position.y, 0.0);
        assert_eq!(s1.heading, 0.0);
        assert_eq!(s1.speed, 2.0);
    }

    #[test]
    fn bicycle_slip_angle_matches_closed_form() {
        let s0 = state(0.0, 0.0, 0.0, 2.0);
        let input = BicycleInput { accel: 0.0, steer: 0.2 };
        let s1 = bicycle_step(&s0, input, &PARAMS, 0.1);
        let beta = (0.5 * 0.2f64.tan()).atan();
        assert_relative_eq!(s1.position.x, 0.2 * beta.cos(), epsilon = 1e-15);
        assert_relative_eq!(s1.position.y, 0.2 * beta.sin(), epsilon = 1e-15);
        assert_relative_eq!(s1.heading, 2.0 / 1.2 * beta.sin() * 0.1, epsilon = 1e-15);
    }

    #[test]
    fn bicycle_speed_clamps_at_zero() {
        let s0 = state(0.0, 0.0, 0.0, 0.1);
        let s1 = bicycle_step(
            &s0,
            BicycleInput { accel: -3.0, steer: 0.0 },
            &PARAMS,
            0.1,
        );
        assert_eq!(s1.speed, 0.0);
    }

    #[test]
    fn bicycle_heading_wraps() {
        let s0 = state(0.0, 0.0, PI - 1e-3, 5.0);
        let s1 = bicycle_step(
            &s0,
            BicycleInput { accel: 0.0, steer: 0.5 },
            &PARAMS,
            0.5,
        );
        assert!(s1.heading > -PI && s1.heading <= PI);
    }

    #[test]
    fn input_clamp_respects_bounds() {
        let clamped = PARAMS.clamp_input(BicycleInput { accel: 9.0, steer: -2.0 });
        assert_eq!(clamped, BicycleInput { accel: 3.0, steer: -0.6 });
    }
}
