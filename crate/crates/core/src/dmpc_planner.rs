//! Distributed MPC baseline for two interacting agents.
//!
//! Each agent tracks a per-step reference with quadratic position and
//! input costs plus one repulsive term that grows as the two trajectories
//! come together over the horizon. The agents alternate: both solve their
//! own horizon problem against the other's assumed controls, compare the
//! fresh solutions with the previous round's, and either stop (all four
//! control-change norms under their thresholds) or blend the iterates with
//! a relaxation factor and go again.
//!
//! The inner solver is projected gradient descent with a backtracking line
//! search; gradients come from central finite differences through the
//! bicycle rollout.

use crate::agents::{bicycle_step, AgentState, BicycleInput, BicycleParams};
use crate::geometry::Point2;

/// Objective weights for one agent, one entry per horizon step for the
/// quadratic terms.
#[derive(Debug, Clone)]
pub struct DmpcWeights {
    /// Tracking weight on x error per step.
    pub track_x: Vec<f64>,
    /// Tracking weight on y error per step.
    pub track_y: Vec<f64>,
    /// Weight on squared acceleration per step.
    pub input_accel: Vec<f64>,
    /// Weight on squared steering per step.
    pub input_steer: Vec<f64>,
    /// Gain of the repulsive coupling term.
    pub repulsion_gain: f64,
    /// Softening constant keeping the repulsive denominator positive.
    pub repulsion_soft: f64,
}

impl DmpcWeights {
    pub fn uniform(
        horizon: usize,
        track_x: f64,
        track_y: f64,
        input_accel: f64,
        input_steer: f64,
        repulsion_gain: f64,
        repulsion_soft: f64,
    ) -> Self {
        assert!(repulsion_soft > 0.0, "repulsion softening must be positive");
        Self {
            track_x: vec![track_x; horizon],
            track_y: vec![track_y; horizon],
            input_accel: vec![input_accel; horizon],
            input_steer: vec![input_steer; horizon],
            repulsion_gain,
            repulsion_soft,
        }
    }

    fn check(&self, horizon: usize) {
        assert_eq!(self.track_x.len(), horizon);
        assert_eq!(self.track_y.len(), horizon);
        assert_eq!(self.input_accel.len(), horizon);
        assert_eq!(self.input_steer.len(), horizon);
        assert!(self.repulsion_soft > 0.0);
    }
}

/// Inner gradient-descent settings.
#[derive(Debug, Clone, Copy)]
pub struct InnerSolverConfig {
    /// Maximum accepted descent steps per solve.
    pub max_iters: usize,
    /// Initial line-search step size.
    pub step_init: f64,
    /// Stop when the gradient norm falls below this.
    pub grad_tol: f64,
    /// Central-difference probe size.
    pub fd_step: f64,
    /// Give up backtracking below this step size.
    pub min_step: f64,
}

impl Default for InnerSolverConfig {
    fn default() -> Self {
        Self { max_iters: 80, step_init: 1.0, grad_tol: 1e-6, fd_step: 1e-6, min_step: 1e-12 }
    }
}

/// Convergence thresholds for one agent's control change norms.
#[derive(Debug, Clone, Copy)]
pub struct AgentThresholds {
    pub accel: f64,
    pub steer: f64,
}

/// Settings of the alternating scheme.
#[derive(Debug, Clone)]
pub struct DmpcConfig {
    pub horizon: usize,
    pub dt: f64,
    /// Relaxation factor in (0, 1]: 1 keeps the fresh solve, smaller
    /// values blend it with the previous iterate.
    pub alpha: f64,
    pub q_max: usize,
    pub thresholds: [AgentThresholds; 2],
    pub inner: InnerSolverConfig,
}

pub type ControlSequence = Vec<BicycleInput>;

/// Integrate `controls` from `initial`, returning the state after each
/// step (same length as `controls`).
pub fn rollout(
    initial: &AgentState,
    controls: &[BicycleInput],
    params: &BicycleParams,
    dt: f64,
) -> Vec<AgentState> {
    let mut states = Vec::with_capacity(controls.len());
    let mut state = *initial;
    for &u in controls {
        state = bicycle_step(&state, u, params, dt);
        states.push(state);
    }
    states
}

/// The horizon objective of one agent.
///
/// `0.5 * (sum_k qx_k (x_ref - x)^2 + qy_k (y_ref - y)^2 + pa_k a^2
/// + ps_k steer^2 + gain / (sum_k dist^2(own_k, other_k) + soft))`.
/// The repulsive part is a single scalar over the whole horizon, not a
/// per-step penalty.
pub fn dmpc_objective(
    own: &[AgentState],
    other: &[AgentState],
    controls: &[BicycleInput],
    reference: &[Point2],
    w: &DmpcWeights,
) -> f64 {
    let h = own.len();
    assert_eq!(other.len(), h, "trajectories must align stepwise");
    assert_eq!(controls.len(), h);
    assert_eq!(reference.len(), h);
    w.check(h);

    let mut cost = 0.0;
    let mut sep_sq = 0.0;
    for k in 0..h {
        let ex = reference[k].x - own[k].position.x;
        let ey = reference[k].y - own[k].position.y;
        cost += w.track_x[k] * ex * ex + w.track_y[k] * ey * ey;
        cost += w.input_accel[k] * controls[k].accel * controls[k].accel;
        cost += w.input_steer[k] * controls[k].steer * controls[k].steer;
        let dx = own[k].position.x - other[k].position.x;
        let dy = own[k].position.y - other[k].position.y;
        sep_sq += dx * dx + dy * dy;
    }
    cost += w.repulsion_gain / (sep_sq + w.repulsion_soft);
    0.5 * cost
}

/// Outcome of one agent's horizon solve.
#[derive(Debug, Clone)]
pub struct OcpOutcome {
    pub controls: ControlSequence,
    pub objective: f64,
    /// Objective after the warm start and after each accepted step.
    pub objective_history: Vec<f64>,
    /// A non-finite objective was encountered (the returned iterate is the
    /// last finite one).
    pub hit_nonfinite: bool,
}

fn objective_of(
    controls: &[BicycleInput],
    initial: &AgentState,
    other: &[AgentState],
    reference: &[Point2],
    w: &DmpcWeights,
    bike: &BicycleParams,
    dt: f64,
) -> f64 {
    let own = rollout(initial, controls, bike, dt);
    dmpc_objective(&own, other, controls, reference, w)
}

fn fd_gradient(
    controls: &[BicycleInput],
    initial: &AgentState,
    other: &[AgentState],
    reference: &[Point2],
    w: &DmpcWeights,
    bike: &BicycleParams,
    dt: f64,
    fd_step: f64,
) -> Vec<BicycleInput> {
    let mut probe = controls.to_vec();
    let mut grad = vec![BicycleInput::default(); controls.len()];
    for k in 0..controls.len() {
        let base = probe[k].accel;
        probe[k].accel = base + fd_step;
        let plus = objective_of(&probe, initial, other, reference, w, bike, dt);
        probe[k].accel = base - fd_step;
        let minus = objective_of(&probe, initial, other, reference, w, bike, dt);
        probe[k].accel = base;
        grad[k].accel = (plus - minus) / (2.0 * fd_step);

        let base = probe[k].steer;
        probe[k].steer = base + fd_step;
        let plus = objective_of(&probe, initial, other, reference, w, bike, dt);
        probe[k].steer = base - fd_step;
        let minus = objective_of(&probe, initial, other, reference, w, bike, dt);
        probe[k].steer = base;
        grad[k].steer = (plus - minus) / (2.0 * fd_step);
    }
    grad
}

/// Central-difference gradient of the objective in control space,
/// exposed for verification against independent derivative estimates.
pub fn objective_gradient(
    initial: &AgentState,
    controls: &[BicycleInput],
    other: &[AgentState],
    reference: &[Point2],
    w: &DmpcWeights,
    bike: &BicycleParams,
    dt: f64,
    fd_step: f64,
) -> Vec<BicycleInput> {
    fd_gradient(controls, initial, other, reference, w, bike, dt, fd_step)
}

fn grad_norm(grad: &[BicycleInput]) -> f64 {
    grad.iter()
        .map(|g| g.accel * g.accel + g.steer * g.steer)
        .sum::<f64>()
        .sqrt()
}

fn project(controls: &mut [BicycleInput], bike: &BicycleParams) {
    for u in controls.iter_mut() {
        *u = bike.clamp_input(*u);
    }
}

/// Solve one agent's horizon problem with the other's trajectory held
/// fixed. Projected gradient descent from the warm start; every accepted
/// step strictly lowers the objective.
pub fn agent_ocp_solve(
    initial: &AgentState,
    other: &[AgentState],
    warm: &[BicycleInput],
    reference: &[Point2],
    w: &DmpcWeights,
    bike: &BicycleParams,
    cfg: &DmpcConfig,
) -> OcpOutcome {
    let mut u = warm.to_vec();
    project(&mut u, bike);
    let mut f = objective_of(&u, initial, other, reference, w, bike, cfg.dt);
    let mut history = vec![f];
    let mut hit_nonfinite = !f.is_finite();
    if hit_nonfinite {
        return OcpOutcome { controls: u, objective: f, objective_history: history, hit_nonfinite };
    }

    for _ in 0..cfg.inner.max_iters {
        let grad = fd_gradient(&u, initial, other, reference, w, bike, cfg.dt, cfg.inner.fd_step);
        if grad_norm(&grad) < cfg.inner.grad_tol {
            break;
        }
        let mut step = cfg.inner.step_init;
        let mut accepted = false;
        while step >= cfg.inner.min_step {
            let mut cand: ControlSequence = u
                .iter()
                .zip(&grad)
                .map(|(c, g)| BicycleInput {
                    accel: c.accel - step * g.accel,
                    steer: c.steer - step * g.steer,
                })
                .collect();
            project(&mut cand, bike);
            let fc = objective_of(&cand, initial, other, reference, w, bike, cfg.dt);
            if fc.is_finite() && fc < f {
                u = cand;
                f = fc;
                history.push(f);
                accepted = true;
                break;
            }
            if !fc.is_finite() {
                hit_nonfinite = true;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    OcpOutcome { controls: u, objective: f, objective_history: history, hit_nonfinite }
}

/// Relaxation blend of two control sequences: `alpha * fresh +
/// (1 - alpha) * previous`, componentwise.
pub fn relax_blend(alpha: f64, fresh: &[BicycleInput], previous: &[BicycleInput]) -> ControlSequence {
    assert_eq!(fresh.len(), previous.len());
    fresh
        .iter()
        .zip(previous)
        .map(|(a, b)| BicycleInput {
            accel: alpha * a.accel + (1.0 - alpha) * b.accel,
            steer: alpha * a.steer + (1.0 - alpha) * b.steer,
        })
        .collect()
}

/// Receding-horizon warm start: drop the executed first input, repeat the
/// last one.
pub fn shift_warm_start(previous: &[BicycleInput]) -> ControlSequence {
    assert!(!previous.is_empty());
    let mut shifted: ControlSequence = previous[1..].to_vec();
    shifted.push(*previous.last().unwrap());
    shifted
}

/// Per-agent control change norms of the last compared rounds:
/// `[agent][0]` for acceleration, `[agent][1]` for steering.
pub type ChangeNorms = [[f64; 2]; 2];

#[derive(Debug, Clone)]
pub struct DmpcSolution {
    /// Final freshly solved control sequences per agent.
    pub controls: [ControlSequence; 2],
    /// Solve rounds performed.
    pub iterations: usize,
    pub converged: bool,
    /// Norms from the final comparison (infinite before any comparison).
    pub final_norms: ChangeNorms,
}

fn change_norms(a: &[BicycleInput], b: &[BicycleInput]) -> [f64; 2] {
    let mut accel = 0.0;
    let mut steer = 0.0;
    for (x, y) in a.iter().zip(b) {
        accel += (x.accel - y.accel) * (x.accel - y.accel);
        steer += (x.steer - y.steer) * (x.steer - y.steer);
    }
    [accel.sqrt(), steer.sqrt()]
}

/// Run the alternating scheme until the four control-change norms pass
/// their thresholds or `q_max` rounds elapse.
///
/// Both agents solve in Jacobi style against the other's assumption from
/// the previous round. Convergence compares consecutive freshly solved
/// iterates, so the first possible exit is after round 2; with no coupling
/// the second round reproduces the first and the scheme stops there.
pub fn dmpc_iterate(
    initial: [AgentState; 2],
    references: [&[Point2]; 2],
    weights: [&DmpcWeights; 2],
    warm: [ControlSequence; 2],
    bike: &BicycleParams,
    cfg: &DmpcConfig,
) -> DmpcSolution {
    assert!(cfg.horizon >= 1);
    assert!(cfg.q_max >= 1);
    assert!(cfg.alpha > 0.0 && cfg.alpha <= 1.0, "relaxation factor must be in (0, 1]");
    for i in 0..2 {
        assert_eq!(references[i].len(), cfg.horizon);
        assert_eq!(warm[i].len(), cfg.horizon);
        weights[i].check(cfg.horizon);
    }

    let mut assumed = warm;
    for seq in assumed.iter_mut() {
        project(seq, bike);
    }
    let mut prev_solved: Option<[ControlSequence; 2]> = None;
    let mut latest = assumed.clone();
    let mut converged = false;
    let mut final_norms: ChangeNorms = [[f64::INFINITY; 2]; 2];
    let mut iterations = 0;

    for _ in 0..cfg.q_max {
        iterations += 1;
        let other_trajs = [
            rollout(&initial[1], &assumed[1], bike, cfg.dt),
            rollout(&initial[0], &assumed[0], bike, cfg.dt),
        ];
        let solved = [
            agent_ocp_solve(
                &initial[0],
                &other_trajs[0],
                &assumed[0],
                references[0],
                weights[0],
                bike,
                cfg,
            )
            .controls,
            agent_ocp_solve(
                &initial[1],
                &other_trajs[1],
                &assumed[1],
                references[1],
                weights[1],
                bike,
                cfg,
            )
            .controls,
        ];
        latest = solved.clone();

        if let Some(prev) = &prev_solved {
            let norms = [change_norms(&solved[0], &prev[0]), change_norms(&solved[1], &prev[1])];
            final_norms = norms;
            if norms[0][0] <= cfg.thresholds[0].accel
                && norms[0][1] <= cfg.thresholds[0].steer
                && norms[1][0] <= cfg.thresholds[1].accel
                && norms[1][1] <= cfg.thresholds[1].steer
            {
                converged = true;
                break;
            }
        }

        assumed = [
            relax_blend(cfg.alpha, &solved[0], &assumed[0]),
            relax_blend(cfg.alpha, &solved[1], &assumed[1]),
        ];
        prev_solved = Some(solved);
    }

    DmpcSolution { controls: latest, iterations, converged, final_norms }
}
