//! The objective terms that score one joint move of all agents.
//!
//! Each agent pays three costs for a candidate step: a lane term (product
//! of current and candidate distances to its reference path), a goal term
//! (same product against its goal point), and an inter-agent distance term
//! (reciprocal of summed pairwise separation products, so closing in on
//! others gets expensive and touching them costs infinity). The terms have
//! mixed units and are summed as they are; optional per-term weights
//! default to 1.

use crate::agents::AgentSpec;
use crate::geometry::{Point2, Polyline};

/// Below this denominator (in m²) the distance cost is treated as a
/// collision and collapses to the infinite sentinel.
pub const DIST_DENOM_EPS: f64 = 1e-9;

/// Per-term multipliers on the cost sum. Defaults keep the plain sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostWeights {
    pub lane: f64,
    pub dist: f64,
    pub goal: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self { lane: 1.0, dist: 1.0, goal: 1.0 }
    }
}

/// The joint strategy space of one planning tick: every agent's current
/// position and its candidate step sequences. With planning depth 1 each
/// "sequence" is a single next position; deeper searches store one position
/// per step.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    currents: Vec<Point2>,
    /// `options[i][s]` is agent i's strategy s: its positions at steps
    /// 1..=depth. All sequences share the same depth.
    options: Vec<Vec<Vec<Point2>>>,
    depth: usize,
}

impl CandidateSet {
    pub fn new(currents: Vec<Point2>, options: Vec<Vec<Vec<Point2>>>) -> Self {
        assert_eq!(currents.len(), options.len(), "one option list per agent");
        assert!(!options.is_empty(), "candidate set needs at least one agent");
        let depth = options
            .first()
            .and_then(|o| o.first())
            .map(|seq| seq.len())
            .expect("every agent needs at least one candidate");
        assert!(depth >= 1, "candidate sequences must have at least one step");
        for per_agent in &options {
            assert!(!per_agent.is_empty(), "every agent needs at least one candidate");
            for seq in per_agent {
                assert_eq!(seq.len(), depth, "all candidate sequences must share one depth");
            }
        }
        Self { currents, options, depth }
    }

    /// Convenience constructor for depth-1 sets where each candidate is a
    /// single next position.
    pub fn single_step(currents: Vec<Point2>, candidates: Vec<Vec<Point2>>) -> Self {
        let options = candidates
            .into_iter()
            .map(|per_agent| per_agent.into_iter().map(|p| vec![p]).collect())
            .collect();
        Self::new(currents, options)
    }

    pub fn n_agents(&self) -> usize {
        self.currents.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn current(&self, agent: usize) -> Point2 {
        self.currents[agent]
    }

    /// Number of strategies available to `agent`.
    pub fn n_options(&self, agent: usize) -> usize {
        self.options[agent].len()
    }

    /// Agent `agent`'s strategy `s` as its step positions.
    pub fn option(&self, agent: usize, s: usize) -> &[Point2] {
        &self.options[agent][s]
    }

    /// Position of `agent` at step `step` (0 = current position) under
    /// strategy `s`.
    fn position_at(&self, agent: usize, s: usize, step: usize) -> Point2 {
        if step == 0 {
            self.currents[agent]
        } else {
            self.options[agent][s][step - 1]
        }
    }
}

/// Per-term cost decomposition for one agent under one profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub lane: f64,
    pub dist: f64,
    pub goal: f64,
    pub total: f64,
}

/// Lane-keeping cost of one step: the product of the current and candidate
/// distances to the reference path, or 0 without a path.
///
/// Note the product form: an agent currently sitting exactly on its path
/// pays 0 for every candidate, however far the candidate strays. That
/// asymmetry is part of the cost definition and is kept as is.
pub fn cost_lane(current: Point2, candidate: Point2, path: Option<&Polyline>) -> f64 {
    match path {
        None => 0.0,
        Some(path) => {
            let d_cur = current.dist(path.project(current).point);
            let d_cand = candidate.dist(path.project(candidate).point);
            d_cur * d_cand
        }
    }
}

/// Goal cost of one step: the product of the current and candidate
/// distances to the goal, or 0 without a goal.
pub fn cost_goal(current: Point2, candidate: Point2, goal: Option<Point2>) -> f64 {
    match goal {
        None => 0.0,
        Some(goal) => current.dist(goal) * candidate.dist(goal),
    }
}

/// One step of the inter-agent distance cost for agent `i`: the reciprocal
/// of the sum, over every other agent `l`, of (current separation) times
/// (candidate separation). A vanishing denominator means two agents meet
/// and returns `f64::INFINITY`. A lone agent pays 0 (no coupling).
fn dist_term(i: usize, prev: &[Point2], next: &[Point2]) -> f64 {
    if prev.len() < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for l in 0..prev.len() {
        if l == i {
            continue;
        }
        sum += prev[i].dist(prev[l]) * next[i].dist(next[l]);
    }
    if sum < DIST_DENOM_EPS {
        f64::INFINITY
    } else {
        1.0 / sum
    }
}

/// Inter-agent distance cost of agent `i` under `profile`, summed over the
/// set's steps. Step k couples everyone's step-k positions (and step-(k-1)
/// positions as the "current" factor), so deeper plans are compared
/// move-by-move.
pub fn cost_distance(i: usize, profile: &[usize], set: &CandidateSet) -> f64 {
    let n = set.n_agents();
    assert_eq!(profile.len(), n, "profile must choose one strategy per agent");
    let mut total = 0.0;
    let mut prev: Vec<Point2> = (0..n).map(|l| set.current(l)).collect();
    let mut next = vec![Point2::new(0.0, 0.0); n];
    for step in 1..=set.depth() {
        for l in 0..n {
            next[l] = set.position_at(l, profile[l], step);
        }
        let term = dist_term(i, &prev, &next);
        if term.is_infinite() {
            return f64::INFINITY;
        }
        total += term;
        prev.copy_from_slice(&next);
    }
    total
}

/// Full cost of agent `i` under `profile`: weighted lane + distance + goal
/// terms, each summed over the set's steps. An infinite distance term
/// absorbs the total regardless of weights; a colliding move must never
/// look acceptable.
pub fn total_cost(
    i: usize,
    profile: &[usize],
    set: &CandidateSet,
    specs: &[AgentSpec],
    weights: CostWeights,
) -> CostBreakdown {
    assert_eq!(specs.len(), set.n_agents(), "one spec per agent");
    let path = specs[i].path.as_ref();
    let goal = specs[i].goal;

    let mut lane = 0.0;
    let mut goal_cost = 0.0;
    for step in 1..=set.depth() {
        let cur = set.position_at(i, profile[i], step - 1);
        let cand = set.position_at(i, profile[i], step);
        lane += cost_lane(cur, cand, path);
        goal_cost += cost_goal(cur, cand, goal);
    }
    let dist = cost_distance(i, profile, set);

    let lane = weights.lane * lane;
    let goal_cost = weights.goal * goal_cost;
    let dist = if dist.is_infinite() { dist } else { weights.dist * dist };
    let total = if dist.is_infinite() { f64::INFINITY } else { lane + dist + goal_cost };
    CostBreakdown { lane, dist, goal: goal_cost, total }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentState, Role};
    use approx::assert_relative_eq;

    fn x_axis() -> Polyline {
        Polyline::new(vec![Point2::new(-10.0, 0.0), Point2::new(10.0, 0.0)]).unwrap()
    }

    fn spec(path: Option<Polyline>, goal: Option<Point2>) -> AgentSpec {
        AgentSpec {
            id: "a".into(),
            role: Role::Vehicle,
            initial: AgentState::new(Point2::new(0.0, 0.0), 0.0, 1.0),
            path,
            goal,
            branches: 1,
        }
    }

    #[test]
    fn lane_cost_multiplies_both_offsets() {
        let path = x_axis();
        let c = cost_lane(Point2::new(0.0, 1.0), Point2::new(1.0, 2.0), Some(&path));
        assert_relative_eq!(c, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lane_cost_vanishes_without_path_or_on_path() {
        let path = x_axis();
        assert_eq!(cost_lane(Point2::new(0.0, 1.0), Point2::new(1.0, 2.0), None), 0.0);
        // Current position on the path kills the cost for any candidate.
        assert_eq!(
            cost_lane(Point2::new(0.0, 0.0), Point2::new(3.0, 7.0), Some(&path)),
            0.0
        );
    }

    #[test]
    fn goal_cost_multiplies_both_distances() {
        let goal = Some(Point2::new(3.0, 4.0));
        let c = cost_goal(Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), goal);
        assert_relative_eq!(c, 20.0, epsilon = 1e-12);
        assert_eq!(cost_goal(Point2::new(0.0, 0.0), Point2::new(3.0, 0.0), None), 0.0);
        assert_eq!(cost_goal(Point2::new(9.0, 9.0), Point2::new(3.0, 4.0), goal), 0.0);
    }

    #[test]
    fn distance_cost_two_agents() {
        let set = CandidateSet::single_step(
            vec![Point2::new(0.0, 0.0), Point2::new(3.0, 0.0)],
            vec![vec![Point2::new(1.0, 0.0)], vec![Point2::new(3.0, 1.0)]],
        );
        let c = cost_distance(0, &[0, 0], &set);
        assert_relative_eq!(c, 1.0 / (3.0 * 5.0f64.sqrt()), epsilon = 1e-12);
        // Symmetric for the other agent in a 2-agent set.
        assert_relative_eq!(c, cost_distance(1, &[0, 0], &set), epsilon = 1e-15);
    }

    #[test]
    fn distance_cost_collision_is_infinite() {
        let p = Point2::new(1.0, 1.0);
        let set = CandidateSet::single_step(vec![p, p], vec![vec![p], vec![p]]);
        assert_eq!(cost_distance(0, &[0, 0], &set), f64::INFINITY);
    }

    #[test]
    fn distance_cost_three_agents_sums_pairs() {
        // Equilateral-ish setup: agent 0 at distance 1 from both others,
        // before and after the step.
        let h = 3.0f64.sqrt() / 2.0;
        let currents =
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, h)];
        let nexts =
            vec![Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), Point2::new(0.5, 1.0 + h)];
        let set = CandidateSet::single_step(
            currents,
            nexts.into_iter().map(|p| vec![p]).collect(),
        );
        assert_relative_eq!(cost_distance(0, &[0, 0, 0], &set), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn lone_agent_pays_no_distance_cost() {
        let set = CandidateSet::single_step(
            vec![Point2::new(0.0, 0.0)],
            vec![vec![Point2::new(1.0, 0.0)]],
        );
        assert_eq!(cost_distance(0, &[0], &set), 0.0);
    }

    #[test]
    fn total_composes_the_three_terms() {
        // Agent 0 set up so each term reproduces the hand-checked values:
        // lane 1*2 = 2, goal sqrt(2)*0 = 0, distance 1/(3*2).
        let set = CandidateSet::single_step(
            vec![Point2::new(0.0, 1.0), Point2::new(3.0, 1.0)],
            vec![vec![Point2::new(1.0, 2.0)], vec![Point2::new(3.0, 2.0)]],
        );
        // Distances: current separation 3, candidate separation 2.
        let specs = vec![
            spec(Some(x_axis()), Some(Point2::new(1.0, 2.0))),
            spec(None, None),
        ];
        let b = total_cost(0, &[0, 0], &set, &specs, CostWeights::default());
        assert_relative_eq!(b.lane, 2.0, epsilon = 1e-12);
        let goal = Point2::new(1.0, 2.0);
        assert_relative_eq!(
            b.goal,
            Point2::new(0.0, 1.0).dist(goal) * 0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(b.dist, 1.0 / (3.0 * 2.0), epsilon = 1e-12);
        assert_relative_eq!(b.total, b.lane + b.dist + b.goal, epsilon = 1e-12);
    }

    #[test]
    fn total_is_distance_only_for_pathless_goalless_agent() {
        let set = CandidateSet::single_step(
            vec![Point2::new(0.0, 0.0), Point2::new(50.0, 0.0)],
            vec![vec![Point2::new(1.0, 0.0)], vec![Point2::new(51.0, 0.0)]],
        );
        let specs = vec![spec(None, None), spec(None, None)];
        let b = total_cost(0, &[0, 0], &set, &specs, CostWeights::default());
        assert_eq!(b.lane, 0.0);
        assert_eq!(b.goal, 0.0);
        assert_eq!(b.total, b.dist);
    }

    #[test]
    fn total_absorbs_the_collision_sentinel() {
        let p = Point2::new(0.0, 0.0);
        let q = Point2::new(1.0, 0.0);
        let set = CandidateSet::single_step(vec![p, q], vec![vec![q], vec![q]]);
        let specs = vec![
            spec(Some(x_axis()), Some(Point2::new(5.0, 5.0))),
            spec(None, None),
        ];
        let b = total_cost(0, &[0, 0], &set, &specs, CostWeights::default());
        assert_eq!(b.dist, f64::INFINITY);
        assert_eq!(b.total, f64::INFINITY);
        // Zeroing the distance weight must not launder a collision.
        let w = CostWeights { lane: 1.0, dist: 0.0, goal: 1.0 };
        assert_eq!(total_cost(0, &[0, 0], &set, &specs, w).total, f64::INFINITY);
    }

    #[test]
    fn multi_step_costs_accumulate_per_step() {
        // Two steps along the x axis, one agent with a goal at (2, 0).
        let goal = Point2::new(2.0, 0.0);
        let set = CandidateSet::new(
            vec![Point2::new(0.0, 0.0)],
            vec![vec![vec![Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]]],
        );
        let specs = vec![spec(None, Some(goal))];
        let b = total_cost(0, &[0], &set, &specs, CostWeights::default());
        // Step 1: 2 * 1; step 2: 1 * 0.
        assert_relative_eq!(b.goal, 2.0, epsilon = 1e-12);
        assert_eq!(b.dist, 0.0);
    }
}
