//! One planning tick of the game-theoretic planner, and rolling-horizon
//! replanning on top of it.
//!
//! A tick expands every agent's candidate displacement tree, scores all
//! joint choices into a payoff tensor, commits a pure Nash equilibrium (or
//! the min-regret fallback), and finally adjusts the ego speed against the
//! closest other agent. The returned step carries each agent's chosen
//! position sequence: the ego's is its committed plan, the others' are the
//! planner's predictions.

use std::time::{Duration, Instant};

use crate::agents::{
    candidate_headings, displacement_length, AgentSpec, AgentState, SearchParams,
};
use crate::costs::{CandidateSet, CostWeights};
use crate::game::{
    build_payoff_tensor, find_pure_nash, select_equilibrium, EquilibriumResult, GameError,
    PayoffTensor, DEFAULT_CELL_BUDGET,
};
use crate::geometry::{Point2, Vec2};
use crate::speed::{closest_agent, speed_update, SpeedAction, SpeedDecision, SpeedDetail,
    SpeedModParams};

/// Everything the per-tick planner needs besides the scene itself.
#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub search: SearchParams,
    pub speed: SpeedModParams,
    pub weights: CostWeights,
    pub cell_budget: usize,
}

impl PlannerConfig {
    pub fn new(search: SearchParams, speed: SpeedModParams) -> Self {
        Self { search, speed, weights: CostWeights::default(), cell_budget: DEFAULT_CELL_BUDGET }
    }
}

/// A depth-d candidate expansion for one agent: `s^d` strategies, each a
/// sequence of positions with the headings that produced them.
#[derive(Debug, Clone)]
pub struct CandidateTree {
    /// `positions[strategy][step]`.
    pub positions: Vec<Vec<Point2>>,
    /// `headings[strategy][step]`, the fan heading chosen at each step.
    pub headings: Vec<Vec<f64>>,
}

/// Expand the candidate tree for one agent. Step length is fixed at
/// `k_v * speed` for the whole tree (speed is only adjusted between
/// ticks); each step's heading fan centers on the heading chosen one step
/// earlier, so deeper strategies bend progressively.
///
/// Strategies come out in lexicographic branch order with the first step
/// most significant: with depth 2 and 3 branches, strategies 0..2 share
/// first-step branch 0, strategies 3..5 share branch 1, and so on.
pub fn multi_step_candidates(
    state: &AgentState,
    search: &SearchParams,
    branches: usize,
    budget: usize,
) -> Result<CandidateTree, GameError> {
    assert!(search.depth >= 1, "planning depth must be at least 1");
    assert!(branches >= 1, "an agent needs at least one branch");
    let count = (branches as u128).pow(search.depth as u32);
    if count > budget as u128 {
        return Err(GameError::BudgetExceeded { cells: count, budget });
    }

    let step_len = displacement_length(state, search);
    let mut positions: Vec<Vec<Point2>> = vec![Vec::new()];
    let mut headings: Vec<Vec<f64>> = vec![Vec::new()];
    let mut tips = vec![(state.position, state.heading)];
    for _ in 0..search.depth {
        let mut next_positions = Vec::with_capacity(positions.len() * branches);
        let mut next_headings = Vec::with_capacity(positions.len() * branches);
        let mut next_tips = Vec::with_capacity(tips.len() * branches);
        for (idx, &(pos, heading)) in tips.iter().enumerate() {
            for theta in candidate_headings(heading, branches, search.delta_theta) {
                let new_pos = pos + Vec2::unit(theta) * step_len;
                let mut p = positions[idx].clone();
                let mut h = headings[idx].clone();
                p.push(new_pos);
                h.push(theta);
                next_positions.push(p);
                next_headings.push(h);
                next_tips.push((new_pos, theta));
            }
        }
        positions = next_positions;
        headings = next_headings;
        tips = next_tips;
    }
    Ok(CandidateTree { positions, headings })
}

/// The outcome of one planning tick.
#[derive(Debug, Clone)]
pub struct PlanStep {
    pub ego: usize,
    /// Chosen position sequence per agent (ego: committed plan; others:
    /// predictions). `positions[i][0]` is agent i's next position.
    pub positions: Vec<Vec<Point2>>,
    /// Headings that generated those positions, same shape.
    pub headings: Vec<Vec<f64>>,
    /// Ego speed for the next tick, from the longitudinal rule.
    pub ego_speed_next: f64,
    pub equilibrium: EquilibriumResult,
    pub speed_decision: SpeedDecision,
    pub solve_time: Duration,
}

impl PlanStep {
    pub fn ego_next(&self) -> Point2 {
        self.positions[self.ego][0]
    }

    /// The ego's committed waypoint sequence.
    pub fn ego_plan(&self) -> &[Point2] {
        &self.positions[self.ego]
    }

    /// Predicted next position of any agent.
    pub fn prediction(&self, agent: usize) -> Point2 {
        self.positions[agent][0]
    }
}

/// Plan one tick and also hand back the payoff tensor, so callers can
/// re-verify the committed equilibrium or inspect the game.
pub fn plan_step_detailed(
    states: &[AgentState],
    specs: &[AgentSpec],
    ego: usize,
    cfg: &PlannerConfig,
) -> Result<(PlanStep, PayoffTensor), GameError> {
    assert_eq!(states.len(), specs.len(), "one state per agent spec");
    assert!(!states.is_empty(), "planning needs at least one agent");
    assert!(ego < states.len(), "ego index out of range");
    let start = Instant::now();

    let trees: Vec<CandidateTree> = states
        .iter()
        .zip(specs)
        .map(|(state, spec)| {
            multi_step_candidates(state, &cfg.search, spec.branches, cfg.cell_budget)
        })
        .collect::<Result<_, _>>()?;
    let set = CandidateSet::new(
        states.iter().map(|s| s.position).collect(),
        trees.iter().map(|t| t.positions.clone()).collect(),
    );
    let tensor = build_payoff_tensor(&set, specs, cfg.weights, cfg.cell_budget)?;
    let equilibria = find_pure_nash(&tensor);
    let equilibrium = select_equilibrium(&tensor, &equilibria, ego);

    let positions: Vec<Vec<Point2>> = trees
        .iter()
        .zip(&equilibrium.profile)
        .map(|(tree, &s)| tree.positions[s].clone())
        .collect();
    let headings: Vec<Vec<f64>> = trees
        .iter()
        .zip(&equilibrium.profile)
        .map(|(tree, &s)| tree.headings[s].clone())
        .collect();

    let others: Vec<AgentState> =
        states.iter().enumerate().filter(|&(i, _)| i != ego).map(|(_, s)| *s).collect();
    let speed_decision = match closest_agent(&states[ego], &others) {
        Some(j) => speed_update(&states[ego], &others[j], &cfg.speed),
        None => SpeedDecision {
            action: SpeedAction::Hold,
            new_speed: states[ego].speed.clamp(cfg.speed.v_min, cfg.speed.v_max),
            detail: SpeedDetail::NoOtherAgent,
        },
    };

    let step = PlanStep {
        ego,
        positions,
        headings,
        ego_speed_next: speed_decision.new_speed,
        equilibrium,
        speed_decision,
        solve_time: start.elapsed(),
    };
    Ok((step, tensor))
}

/// Plan one tick.
pub fn plan_step(
    states: &[AgentState],
    specs: &[AgentSpec],
    ego: usize,
    cfg: &PlannerConfig,
) -> Result<PlanStep, GameError> {
    plan_step_detailed(states, specs, ego, cfg).map(|(step, _)| step)
}

/// A sequence of executed planning ticks.
#[derive(Debug, Clone)]
pub struct PlanTrace {
    pub steps: Vec<PlanStep>,
}

/// Replan for `ticks` consecutive ticks in open-loop prediction mode:
/// every agent advances to its chosen next position, non-ego agents keep
/// their speeds, and the ego takes the commanded speed into the next
/// tick's step length. Closed-loop execution against behavioral agents
/// lives in the simulation module instead.
pub fn plan_horizon(
    initial: &[AgentState],
    specs: &[AgentSpec],
    ego: usize,
    cfg: &PlannerConfig,
    ticks: usize,
) -> Result<PlanTrace, GameError> {
    assert!(ticks >= 1, "horizon needs at least one tick");
    let mut states = initial.to_vec();
    let mut steps = Vec::with_capacity(ticks);
    for _ in 0..ticks {
        let step = plan_step(&states, specs, ego, cfg)?;
        for (i, state) in states.iter_mut().enumerate() {
            state.position = step.positions[i][0];
            state.heading = step.headings[i][0];
            if i == ego {
                state.speed = step.ego_speed_next;
            }
        }
        steps.push(step);
    }
    Ok(PlanTrace { steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::Role;
    use crate::game::EquilibriumKind;
    use crate::geometry::Polyline;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn search(depth: usize) -> SearchParams {
        SearchParams { k_v: 1.0, delta_theta: 0.6, depth }
    }

    fn speed_params() -> SpeedModParams {
        SpeedModParams { z: 2.0, delta_v: 0.5, v_min: 0.0, v_max: 10.0 }
    }

    fn spec(id: &str, role: Role, state: AgentState, branches: usize) -> AgentSpec {
        AgentSpec { id: id.into(), role, initial: state, path: None, goal: None, branches }
    }

    #[test]
    fn tree_depth_one_matches_single_step_candidates() {
        let state = AgentState::new(Point2::new(1.0, 2.0), 0.3, 2.0);
        let s = search(1);
        let tree = multi_step_candidates(&state, &s, 5, DEFAULT_CELL_BUDGET).unwrap();
        let flat = crate::agents::candidate_positions(&state, &s, 5);
        assert_eq!(tree.positions.len(), 5);
        for (seq, expect) in tree.positions.iter().zip(flat) {
            assert_eq!(seq.len(), 1);
            assert_eq!(seq[0], expect);
        }
    }

    #[test]
    fn tree_depth_two_groups_by_first_step() {
        let state = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let tree = multi_step_candidates(&state, &search(2), 3, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(tree.positions.len(), 9);
        for group in 0..3 {
            let first = tree.positions[group * 3][0];
            for k in 1..3 {
                assert_eq!(tree.positions[group * 3 + k][0], first);
            }
        }
        // Second steps fan around the first step's heading.
        assert_relative_eq!(tree.headings[3][0], 0.6, epsilon = 1e-12);
        assert_relative_eq!(tree.headings[4][1], 1.2, epsilon = 1e-12);
    }

    #[test]
    fn tree_without_branching_goes_straight() {
        let state = AgentState::new(Point2::new(0.0, 0.0), 0.5, 2.0);
        let tree = multi_step_candidates(&state, &search(2), 1, DEFAULT_CELL_BUDGET).unwrap();
        assert_eq!(tree.positions.len(), 1);
        let seq = &tree.positions[0];
        assert_eq!(seq.len(), 2);
        assert_relative_eq!(seq[0].x, 2.0 * 0.5f64.cos(), epsilon = 1e-12);
        assert_relative_eq!(seq[1].x, 4.0 * 0.5f64.cos(), epsilon = 1e-12);
    }

    #[test]
    fn tree_budget_guard_trips() {
        let state = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let s = SearchParams { k_v: 1.0, delta_theta: 0.1, depth: 9 };
        let err = multi_step_candidates(&state, &s, 10, 100_000).unwrap_err();
        assert_eq!(err, GameError::BudgetExceeded { cells: 1_000_000_000, budget: 100_000 });
    }

    #[test]
    fn lone_on_path_ego_keeps_heading_and_speed() {
        let state = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let path =
            Polyline::new(vec![Point2::new(-10.0, 0.0), Point2::new(10.0, 0.0)]).unwrap();
        let mut sp = spec("ego", Role::Ego, state, 5);
        sp.path = Some(path);
        let cfg = PlannerConfig::new(search(1), speed_params());
        let step = plan_step(&[state], &[sp], 0, &cfg).unwrap();
        assert_eq!(step.equilibrium.kind, EquilibriumKind::PureNash);
        assert_eq!(step.equilibrium.profile, vec![0]);
        assert_eq!(step.headings[0][0], 0.0);
        assert_eq!(step.ego_speed_next, 1.0);
        assert_eq!(step.speed_decision.detail, SpeedDetail::NoOtherAgent);
    }

    #[test]
    fn head_on_pair_steers_apart() {
        let a = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let b = AgentState::new(Point2::new(2.0, 0.0), PI, 1.0);
        let specs =
            vec![spec("a", Role::Ego, a, 3), spec("b", Role::Vehicle, b, 3)];
        let cfg = PlannerConfig::new(search(1), speed_params());
        let step = plan_step(&[a, b], &specs, 0, &cfg).unwrap();
        assert_eq!(step.equilibrium.kind, EquilibriumKind::PureNash);
        // Straight-straight would collide head on; the committed profile
        // sends the two to opposite lateral sides.
        let ya = step.positions[0][0].y;
        let yb = step.positions[1][0].y;
        assert!(ya * yb < 0.0, "expected opposite sides, got y {ya} and {yb}");
        assert!(step.positions[0][0].dist(step.positions[1][0]) > 1.0);
    }

    #[test]
    fn crossing_agent_inside_safe_radius_slows_the_ego() {
        let ego = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let other = AgentState::new(Point2::new(5.0, -5.0), PI / 2.0, 1.0);
        let specs =
            vec![spec("ego", Role::Ego, ego, 3), spec("v", Role::Vehicle, other, 3)];
        let cfg = PlannerConfig::new(search(1), speed_params());
        let step = plan_step(&[ego, other], &specs, 0, &cfg).unwrap();
        assert_eq!(step.speed_decision.action, SpeedAction::Decelerate);
        assert_relative_eq!(step.ego_speed_next, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn horizon_replans_and_advances_predictions() {
        let ego = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let other = AgentState::new(Point2::new(6.0, -6.0), PI / 2.0, 1.0);
        let mut ego_spec = spec("ego", Role::Ego, ego, 3);
        ego_spec.goal = Some(Point2::new(12.0, 0.0));
        let mut other_spec = spec("v", Role::Vehicle, other, 3);
        other_spec.goal = Some(Point2::new(6.0, 6.0));
        let cfg = PlannerConfig::new(search(1), speed_params());
        let trace =
            plan_horizon(&[ego, other], &[ego_spec, other_spec], 0, &cfg, 8).unwrap();
        assert_eq!(trace.steps.len(), 8);
        // The predicted crossing never collapses to contact.
        for step in &trace.steps {
            assert!(step.positions[0][0].dist(step.positions[1][0]) > 0.0);
        }
    }

    #[test]
    fn stationary_ego_stays_put_over_the_horizon() {
        let ego = AgentState::new(Point2::new(3.0, 4.0), 1.0, 0.0);
        // Keep the speed rule inert with an empty scene.
        let sp = spec("ego", Role::Ego, ego, 5);
        let cfg = PlannerConfig::new(search(1), speed_params());
        let trace = plan_horizon(&[ego], &[sp], 0, &cfg, 5).unwrap();
        for step in &trace.steps {
            assert_eq!(step.ego_next(), Point2::new(3.0, 4.0));
            assert_eq!(step.headings[0][0], 1.0);
        }
    }

    #[test]
    fn single_tick_horizon_is_one_step() {
        let ego = AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0);
        let sp = spec("ego", Role::Ego, ego, 3);
        let cfg = PlannerConfig::new(search(1), speed_params());
        let trace = plan_horizon(&[ego], &[sp], 0, &cfg, 1).unwrap();
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn committed_waypoint_is_a_generated_candidate() {
        let ego = AgentState::new(Point2::new(0.0, 0.0), 0.2, 1.5);
        let other = AgentState::new(Point2::new(3.0, 1.0), PI, 1.0);
        let specs =
            vec![spec("ego", Role::Ego, ego, 5), spec("v", Role::Vehicle, other, 3)];
        let cfg = PlannerConfig::new(search(2), speed_params());
        let step = plan_step(&[ego, other], &specs, 0, &cfg).unwrap();
        let tree = multi_step_candidates(&ego, &cfg.search, 5, cfg.cell_budget).unwrap();
        assert!(tree.positions.iter().any(|seq| seq == &step.positions[0]));
        // Step length stays locked to k_v * speed at the tick start.
        let len = step.ego_next().dist(ego.position);
        assert_relative_eq!(len, 1.5, epsilon = 1e-12);
    }
}
