//! Closed-loop scenario execution.
//!
//! Every tick the discrete game is solved for the whole scene. Non-ego
//! agents then replay their own component of the committed profile with
//! Gaussian heading noise on top (they are reactive but imperfect). The
//! ego executes its plan through a kinematic bicycle: steering from pure
//! pursuit over the planned waypoints, speed from the longitudinal rule,
//! or, with the distributed-MPC planner selected, acceleration straight
//! from the MPC solution against the closest other agent. Per-tick poses,
//! planner timings and separation metrics are recorded for the trace
//! writers.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::agents::{
    bicycle_step, displacement_length, AgentSpec, AgentState, BicycleInput, BicycleParams,
    SearchParams,
};
use crate::dmpc_planner::{
    dmpc_iterate, rollout, shift_warm_start, ControlSequence, DmpcConfig, DmpcWeights,
};
use crate::game::{is_pure_nash, EquilibriumKind};
use crate::geometry::{normalize_angle, Point2, Polyline, Vec2};
use crate::nash_planner::{plan_step_detailed, PlannerConfig};

/// Which planner drives the ego.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    Nash,
    Dmpc,
}

/// Simulation-level settings.
#[derive(Debug, Clone, Copy)]
pub struct SimParams {
    /// Simulated time span, seconds.
    pub duration: f64,
    /// Step length, seconds.
    pub tick: f64,
    /// Seed of the behavioral noise stream.
    pub seed: u64,
    /// Heading noise of behavioral agents, radians (standard deviation).
    pub noise_std: f64,
    pub planner: PlannerKind,
    /// Pure-pursuit lookahead, meters.
    pub lookahead: f64,
    /// Collision radius of vehicles (the ego included), meters.
    pub vehicle_radius: f64,
    /// Collision radius of pedestrians, meters.
    pub pedestrian_radius: f64,
    /// Uniform perturbation range for initial positions in randomized
    /// trials, meters per axis.
    pub position_jitter: f64,
    /// Uniform perturbation range for initial speeds, m/s.
    pub speed_jitter: f64,
}

/// A complete executable scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub agents: Vec<AgentSpec>,
    /// Index of the ego agent in `agents`.
    pub ego: usize,
    pub nash: PlannerConfig,
    pub dmpc: DmpcConfig,
    /// Objective weights applied to both MPC agents.
    pub dmpc_weights: DmpcWeights,
    pub bicycle: BicycleParams,
    pub sim: SimParams,
}

/// How the tick's ego decision came about.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    PureNash,
    FallbackMinRegret,
    DmpcConverged,
    DmpcMaxIters,
}

impl TickOutcome {
    pub fn label(self) -> &'static str {
        match self {
            TickOutcome::PureNash => "pure_nash",
            TickOutcome::FallbackMinRegret => "fallback_min_regret",
            TickOutcome::DmpcConverged => "dmpc_converged",
            TickOutcome::DmpcMaxIters => "dmpc_max_iters",
        }
    }
}

/// One executed tick: the scene at its start plus what the planner wanted.
#[derive(Debug, Clone)]
pub struct TickRecord {
    pub tick: usize,
    pub time: f64,
    /// Agent states at the start of the tick.
    pub states: Vec<AgentState>,
    /// Planned (ego) or predicted (others) next position per agent.
    pub planned: Vec<Point2>,
    /// Signed lateral offset of the ego from its reference path, if it has
    /// one. Positive is left of the path direction.
    pub ego_offset: Option<f64>,
    /// Wall time the selected planner spent this tick, seconds.
    pub solver_seconds: f64,
    pub outcome: TickOutcome,
}

/// Cross-track error statistics for one agent with a reference path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackingStats {
    pub mean_abs: f64,
    pub rms: f64,
    pub max_abs: f64,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub ticks: Vec<TickRecord>,
    /// Smallest center distance between any agent pair over all recorded
    /// ticks; `None` with fewer than two agents or no ticks.
    pub min_separation: Option<f64>,
    /// Whether any pair got closer than the sum of its collision radii.
    pub collision: bool,
    /// Per-agent tracking statistics (None without a reference path).
    pub tracking: Vec<Option<TrackingStats>>,
    /// Committed pure-Nash profiles that failed re-verification.
    pub equilibrium_violations: usize,
    /// Ticks where the game had no pure equilibrium.
    pub fallback_ticks: usize,
    /// Ticks where the MPC hit its iteration cap unconverged.
    pub unconverged_ticks: usize,
    pub total_solver_seconds: f64,
    /// A planner error that ended the run early, with the partial record
    /// kept.
    pub error: Option<String>,
    /// All agents reached their goals or path ends before the duration.
    pub completed_early: bool,
}

/// An agent counts as arrived when it is inside this radius of its goal.
const GOAL_RADIUS: f64 = 1.0;
/// Without a goal, an agent is done this close to its path's end.
const PATH_END_MARGIN: f64 = 0.25;

/// Pure-pursuit steering toward the point of the path at exactly
/// `lookahead` distance from the vehicle, searched forward of the
/// projection. Returns the steering angle (clamped to bounds) and a flag
/// set when the remaining path lies entirely inside the lookahead circle
/// (nothing left to chase).
pub fn pure_pursuit_steer(
    state: &AgentState,
    path: &Polyline,
    lookahead: f64,
    params: &BicycleParams,
) -> (f64, bool) {
    assert!(lookahead > 0.0, "lookahead must be positive");
    let pos = state.position;
    let proj = path.project(pos);
    let verts = path.vertices();

    let mut target = None;
    for seg in proj.segment..verts.len() - 1 {
        let a = if seg == proj.segment { proj.point } else { verts[seg] };
        let b = verts[seg + 1];
        if let Some(p) = circle_exit(a, b, pos, lookahead) {
            target = Some(p);
            break;
        }
    }
    let target = match target {
        Some(p) => p,
        None => {
            let end = *verts.last().unwrap();
            if pos.dist(end) < lookahead {
                // Path exhausted: the goal region is inside the circle.
                return (0.0, true);
            }
            // Far off the path: head back to the projection point.
            proj.point
        }
    };

    let to_target = target - pos;
    if to_target.norm() < 1e-12 {
        return (0.0, false);
    }
    let eta = normalize_angle(to_target.y.atan2(to_target.x) - state.heading);
    let steer = (2.0 * params.wheelbase() * eta.sin() / lookahead).atan();
    (steer.clamp(-params.steer_max, params.steer_max), false)
}

/// Where the segment a-b leaves the circle around `center` with radius
/// `r`, taking the root furthest along the segment (the exit point in the
/// direction of travel).
fn circle_exit(a: Point2, b: Point2, center: Point2, r: f64) -> Option<Point2> {
    let d = b - a;
    let f = a - center;
    let qa = d.norm_sq();
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.norm_sq() - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let t = (-qb + disc.sqrt()) / (2.0 * qa);
    if (0.0..=1.0).contains(&t) {
        Some(a + d * t)
    } else {
        None
    }
}

/// One tick of a behavioral (non-ego) agent: play the heading the game
/// chose for it, perturbed by Gaussian noise, at constant speed.
pub fn behavioral_step<R: Rng>(
    state: &AgentState,
    chosen_heading: f64,
    search: &SearchParams,
    noise_std: f64,
    rng: &mut R,
) -> AgentState {
    let noise = if noise_std > 0.0 {
        Normal::new(0.0, noise_std).unwrap().sample(rng)
    } else {
        0.0
    };
    let heading = normalize_angle(chosen_heading + noise);
    let position = state.position + Vec2::unit(heading) * displacement_length(state, search);
    AgentState { position, heading, speed: state.speed }
}

fn agent_done(spec: &AgentSpec, state: &AgentState) -> bool {
    if let Some(goal) = spec.goal {
        state.position.dist(goal) <= GOAL_RADIUS
    } else if let Some(path) = &spec.path {
        path.project(state.position).arc >= path.total_len() - PATH_END_MARGIN
    } else {
        true
    }
}

/// Waypoint path for the ego's tracking controller: current position plus
/// the planned points, deduplicated, and extended along the final
/// direction so a lookahead target always exists.
fn tracking_path(pos: Point2, heading: f64, waypoints: &[Point2], min_len: f64) -> Polyline {
    let mut pts = vec![pos];
    for &w in waypoints {
        if w.dist(*pts.last().unwrap()) > 1e-9 {
            pts.push(w);
        }
    }
    let total: f64 = pts.windows(2).map(|w| w[0].dist(w[1])).sum();
    if total < min_len {
        let dir = if pts.len() >= 2 {
            let last = pts[pts.len() - 1] - pts[pts.len() - 2];
            last * (1.0 / last.norm())
        } else {
            Vec2::unit(heading)
        };
        let tip = *pts.last().unwrap();
        pts.push(tip + dir * (min_len - total + 1.0));
    }
    Polyline::new(pts).expect("deduplicated waypoints form a valid path")
}

/// Per-step reference positions for one MPC agent: walk its reference
/// path (or the straight line to its goal, or its current heading) at its
/// current speed.
fn dmpc_reference(spec: &AgentSpec, state: &AgentState, horizon: usize, dt: f64) -> Vec<Point2> {
    if let Some(path) = &spec.path {
        let arc0 = path.project(state.position).arc;
        (1..=horizon)
            .map(|k| path.point_at_arc(arc0 + state.speed * dt * k as f64))
            .collect()
    } else if let Some(goal) = spec.goal {
        let to_goal = goal - state.position;
        let dist = to_goal.norm();
        if dist < 1e-9 {
            return vec![goal; horizon];
        }
        let dir = to_goal * (1.0 / dist);
        (1..=horizon)
            .map(|k| state.position + dir * (state.speed * dt * k as f64).min(dist))
            .collect()
    } else {
        (1..=horizon)
            .map(|k| state.position + Vec2::unit(state.heading) * (state.speed * dt * k as f64))
            .collect()
    }
}

/// Run one scenario to completion (duration reached, everyone done, or a
/// planner error).
pub fn simulate(scenario: &Scenario) -> SimResult {
    let n = scenario.agents.len();
    let ego = scenario.ego;
    assert!(ego < n, "ego index out of range");
    let sim = &scenario.sim;
    assert!(sim.duration > 0.0 && sim.tick > 0.0, "duration and tick must be positive");
    if sim.planner == PlannerKind::Dmpc {
        assert!(n >= 2, "the distributed planner needs a second agent");
    }

    let specs = &scenario.agents;
    let mut states: Vec<AgentState> = specs.iter().map(|s| s.initial).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sim.seed);
    let max_ticks = (sim.duration / sim.tick).ceil() as usize;

    let radii: Vec<f64> = specs
        .iter()
        .map(|s| s.role.collision_radius(sim.vehicle_radius, sim.pedestrian_radius))
        .collect();

    let mut ticks: Vec<TickRecord> = Vec::with_capacity(max_ticks);
    let mut min_separation: Option<f64> = None;
    let mut collision = false;
    let mut abs_offsets: Vec<Vec<f64>> = vec![Vec::new(); n];
    let mut equilibrium_violations = 0;
    let mut fallback_ticks = 0;
    let mut unconverged_ticks = 0;
    let mut total_solver_seconds = 0.0;
    let mut error = None;
    let mut completed_early = false;
    // Warm start of the MPC, tagged with the partner it was solved against.
    let mut dmpc_warm: Option<(usize, [ControlSequence; 2])> = None;

    for tick_idx in 0..max_ticks {
        if specs.iter().zip(&states).all(|(sp, st)| agent_done(sp, st)) {
            completed_early = true;
            break;
        }

        let (plan, tensor) = match plan_step_detailed(&states, specs, ego, &scenario.nash) {
            Ok(x) => x,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        match plan.equilibrium.kind {
            EquilibriumKind::PureNash => {
                if !is_pure_nash(&tensor, &plan.equilibrium.profile) {
                    equilibrium_violations += 1;
                }
            }
            EquilibriumKind::FallbackMinRegret => fallback_ticks += 1,
        }

        let mut planned: Vec<Point2> = (0..n).map(|i| plan.prediction(i)).collect();
        let solver_seconds;
        let outcome;
        let ego_input;
        match sim.planner {
            PlannerKind::Nash => {
                solver_seconds = plan.solve_time.as_secs_f64();
                outcome = match plan.equilibrium.kind {
                    EquilibriumKind::PureNash => TickOutcome::PureNash,
                    EquilibriumKind::FallbackMinRegret => TickOutcome::FallbackMinRegret,
                };
                let track = tracking_path(
                    states[ego].position,
                    states[ego].heading,
                    plan.ego_plan(),
                    sim.lookahead,
                );
                let (steer, _) =
                    pure_pursuit_steer(&states[ego], &track, sim.lookahead, &scenario.bicycle);
                let accel = (plan.ego_speed_next - states[ego].speed) / sim.tick;
                ego_input = BicycleInput { accel, steer };
            }
            PlannerKind::Dmpc => {
                let partner = (0..n)
                    .filter(|&i| i != ego)
                    .min_by(|&a, &b| {
                        let da = states[ego].position.dist(states[a].position);
                        let db = states[ego].position.dist(states[b].position);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                let started = Instant::now();
                let refs_ego =
                    dmpc_reference(&specs[ego], &states[ego], scenario.dmpc.horizon, scenario.dmpc.dt);
                let refs_other = dmpc_reference(
                    &specs[partner],
                    &states[partner],
                    scenario.dmpc.horizon,
                    scenario.dmpc.dt,
                );
                let warm = match &dmpc_warm {
                    Some((who, seqs)) if *who == partner => seqs.clone(),
                    _ => [
                        vec![BicycleInput::default(); scenario.dmpc.horizon],
                        vec![BicycleInput::default(); scenario.dmpc.horizon],
                    ],
                };
                let sol = dmpc_iterate(
                    [states[ego], states[partner]],
                    [&refs_ego, &refs_other],
                    [&scenario.dmpc_weights, &scenario.dmpc_weights],
                    warm,
                    &scenario.bicycle,
                    &scenario.dmpc,
                );
                solver_seconds = started.elapsed().as_secs_f64();
                outcome = if sol.converged {
                    TickOutcome::DmpcConverged
                } else {
                    unconverged_ticks += 1;
                    TickOutcome::DmpcMaxIters
                };
                let ego_traj =
                    rollout(&states[ego], &sol.controls[0], &scenario.bicycle, scenario.dmpc.dt);
                planned[ego] = ego_traj[0].position;
                let waypoints: Vec<Point2> = ego_traj.iter().map(|s| s.position).collect();
                let track = tracking_path(
                    states[ego].position,
                    states[ego].heading,
                    &waypoints,
                    sim.lookahead,
                );
                let (steer, _) =
                    pure_pursuit_steer(&states[ego], &track, sim.lookahead, &scenario.bicycle);
                ego_input = BicycleInput { accel: sol.controls[0][0].accel, steer };
                dmpc_warm = Some((
                    partner,
                    [shift_warm_start(&sol.controls[0]), shift_warm_start(&sol.controls[1])],
                ));
            }
        }

        for i in 0..n {
            for j in i + 1..n {
                let d = states[i].position.dist(states[j].position);
                if min_separation.is_none_or(|m| d < m) {
                    min_separation = Some(d);
                }
                if d < radii[i] + radii[j] {
                    collision = true;
                }
            }
            if let Some(path) = &specs[i].path {
                abs_offsets[i].push(path.signed_offset(states[i].position).abs());
            }
        }
        let ego_offset = specs[ego].path.as_ref().map(|p| p.signed_offset(states[ego].position));

        total_solver_seconds += solver_seconds;
        ticks.push(TickRecord {
            tick: tick_idx,
            time: tick_idx as f64 * sim.tick,
            states: states.clone(),
            planned,
            ego_offset,
            solver_seconds,
            outcome,
        });

        for i in 0..n {
            if i == ego {
                continue;
            }
            states[i] = behavioral_step(
                &states[i],
                plan.headings[i][0],
                &scenario.nash.search,
                sim.noise_std,
                &mut rng,
            );
        }
        let input = scenario.bicycle.clamp_input(ego_input);
        states[ego] = bicycle_step(&states[ego], input, &scenario.bicycle, sim.tick);
    }

    let tracking = abs_offsets
        .iter()
        .map(|offsets| {
            if offsets.is_empty() {
                None
            } else {
                let samples = offsets.len();
                let sum: f64 = offsets.iter().sum();
                let sum_sq: f64 = offsets.iter().map(|o| o * o).sum();
                let max_abs = offsets.iter().cloned().fold(0.0, f64::max);
                Some(TrackingStats {
                    mean_abs: sum / samples as f64,
                    rms: (sum_sq / samples as f64).sqrt(),
                    max_abs,
                    samples,
                })
            }
        })
        .collect();

    SimResult {
        ticks,
        min_separation,
        collision,
        tracking,
        equilibrium_violations,
        fallback_ticks,
        unconverged_ticks,
        total_solver_seconds,
        error,
        completed_early,
    }
}

/// Run `trials` simulations of the scenario with initial positions and
/// speeds perturbed uniformly within the configured jitter ranges. The
/// perturbations come from their own seeded stream, so a given
/// (scenario, trials, seed) triple always produces the same list; with
/// zero jitter ranges every trial is identical.
pub fn randomized_trials(template: &Scenario, trials: usize, seed: u64) -> Vec<SimResult> {
    assert!(trials >= 1, "need at least one trial");
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let mut scenario = template.clone();
            let pj = scenario.sim.position_jitter;
            let sj = scenario.sim.speed_jitter;
            for spec in &mut scenario.agents {
                if pj > 0.0 {
                    let dx: f64 = jitter_rng.random_range(-pj..=pj);
                    let dy: f64 = jitter_rng.random_range(-pj..=pj);
                    spec.initial.position =
                        Point2::new(spec.initial.position.x + dx, spec.initial.position.y + dy);
                }
                if sj > 0.0 {
                    let dv: f64 = jitter_rng.random_range(-sj..=sj);
                    spec.initial.speed = (spec.initial.speed + dv).max(0.0);
                }
            }
            simulate(&scenario)
        })
        .collect()
}
