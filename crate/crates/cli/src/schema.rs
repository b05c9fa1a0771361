//! JSON scenario documents: parsing, semantic validation, and conversion
//! into an executable `Scenario`.
//!
//! All units are SI: meters, seconds, radians, meters per second. Parsing
//! keeps going after the first problem so one failed load reports every
//! offending field at once.

use std::fmt;
use std::fs;
use std::path::Path;

use gtplan_core::agents::Role;
use gtplan_core::costs::CostWeights;
use gtplan_core::dmpc_planner::{AgentThresholds, DmpcConfig, DmpcWeights, InnerSolverConfig};
use gtplan_core::game::DEFAULT_CELL_BUDGET;
use gtplan_core::nash_planner::PlannerConfig;
use gtplan_core::sim::{PlannerKind, Scenario, SimParams};
use gtplan_core::speed::SpeedModParams;
use gtplan_core::{AgentSpec, AgentState, BicycleParams, Point2, Polyline, SearchParams};
use serde::Deserialize;

/// Everything wrong with a scenario document, one message per field.
#[derive(Debug)]
pub struct ValidationErrors(pub Vec<String>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario validation failed:")?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationErrors {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub agents: Vec<AgentEntry>,
    pub search: SearchSection,
    pub speed_mod: SpeedSection,
    #[serde(default)]
    pub cost_weights: Option<WeightsSection>,
    pub dmpc: DmpcSection,
    pub sim: SimSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentEntry {
    pub id: String,
    pub role: RoleEntry,
    pub initial: InitialState,
    #[serde(default)]
    pub reference_path: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub goal: Option<[f64; 2]>,
    pub branch_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleEntry {
    Ego,
    Vehicle,
    Pedestrian,
}

impl RoleEntry {
    fn to_role(self) -> Role {
        match self {
            RoleEntry::Ego => Role::Ego,
            RoleEntry::Vehicle => Role::Vehicle,
            RoleEntry::Pedestrian => Role::Pedestrian,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    /// Displacement gain: step length = k_v * speed.
    pub k_v: f64,
    /// Heading fan spacing, radians.
    pub delta_theta: f64,
    /// Game tree depth in ticks.
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedSection {
    /// Safe radius around the projected conflict, meters.
    pub z: f64,
    /// Speed adjustment step, m/s.
    pub delta_v: f64,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsSection {
    pub lane: f64,
    pub dist: f64,
    pub goal: f64,
}

impl Default for WeightsSection {
    fn default() -> Self {
        Self { lane: 1.0, dist: 1.0, goal: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpcSection {
    pub weights: DmpcWeightsSection,
    pub horizon: usize,
    pub dt: f64,
    /// Relaxation blend factor in (0, 1].
    pub alpha: f64,
    /// Convergence thresholds on the control change norms.
    pub epsilons: EpsilonSection,
    /// Outer iteration cap.
    pub q_max: usize,
    #[serde(default)]
    pub inner: Option<InnerSection>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmpcWeightsSection {
    pub track_x: f64,
    pub track_y: f64,
    pub accel: f64,
    pub steer: f64,
    pub repulsion_gain: f64,
    pub repulsion_soft: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSection {
    pub accel: f64,
    pub steer: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerSection {
    pub max_iters: usize,
    pub step_init: f64,
    pub grad_tol: f64,
    pub fd_step: f64,
    pub min_step: f64,
}

impl Default for InnerSection {
    fn default() -> Self {
        let d = InnerSolverConfig::default();
        Self {
            max_iters: d.max_iters,
            step_init: d.step_init,
            grad_tol: d.grad_tol,
            fd_step: d.fd_step,
            min_step: d.min_step,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub duration: f64,
    pub tick: f64,
    pub seed: u64,
    /// Heading noise of behavioral agents, radians.
    pub noise_std: f64,
    pub planner: PlannerEntry,
    #[serde(default = "default_lookahead")]
    pub lookahead: f64,
    #[serde(default = "default_vehicle_radius")]
    pub collision_radius_vehicle: f64,
    #[serde(default = "default_pedestrian_radius")]
    pub collision_radius_pedestrian: f64,
    #[serde(default)]
    pub position_jitter: f64,
    #[serde(default)]
    pub speed_jitter: f64,
    #[serde(default)]
    pub vehicle: Option<VehicleSection>,
}

fn default_lookahead() -> f64 {
    3.0
}

fn default_vehicle_radius() -> f64 {
    1.0
}

fn default_pedestrian_radius() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerEntry {
    Nash,
    Dmpc,
}

impl PlannerEntry {
    pub fn to_kind(self) -> PlannerKind {
        match self {
            PlannerEntry::Nash => PlannerKind::Nash,
            PlannerEntry::Dmpc => PlannerKind::Dmpc,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VehicleSection {
    pub l_f: f64,
    pub l_r: f64,
    pub a_max: f64,
    pub delta_max: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        Self { l_f: 1.2, l_r: 1.2, a_max: 3.0, delta_max: 0.6 }
    }
}

/// Parse the document text into a JSON tree. Syntax errors come back with
/// line and column.
pub fn parse_value(text: &str) -> Result<serde_json::Value, ValidationErrors> {
    serde_json::from_str(text)
        .map_err(|e| ValidationErrors(vec![format!("invalid JSON: {e}")]))
}

/// Deserialize the JSON tree into the schema, reporting the offending
/// field path on failure.
pub fn from_value(value: serde_json::Value) -> Result<ScenarioFile, ValidationErrors> {
    let de = value;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().to_string();
        ValidationErrors(vec![format!("{path}: {msg}")])
    })
}

/// Semantic checks plus conversion. Returns the runnable scenario and any
/// non-fatal warnings, or every validation error found.
pub fn build(file: &ScenarioFile) -> Result<(Scenario, Vec<String>), ValidationErrors> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    if file.agents.is_empty() {
        errors.push("agents: must not be empty".to_string());
    }
    let ego_count = file.agents.iter().filter(|a| a.role == RoleEntry::Ego).count();
    if ego_count != 1 {
        errors.push(format!(
            "agents: exactly one ego agent required, found {ego_count}"
        ));
    }

    let mut specs = Vec::with_capacity(file.agents.len());
    let mut seen_ids: Vec<&str> = Vec::new();
    for (i, agent) in file.agents.iter().enumerate() {
        let at = format!("agents[{i}]");
        if agent.id.is_empty() {
            errors.push(format!("{at}.id: must not be empty"));
        }
        if agent.id.contains([',', '\n', '\r']) {
            errors.push(format!(
                "{at}.id: must not contain commas or line breaks (ids go into CSV rows)"
            ));
        }
        if seen_ids.contains(&agent.id.as_str()) {
            errors.push(format!("{at}.id: duplicate id '{}'", agent.id));
        }
        seen_ids.push(&agent.id);

        if !agent.initial.x.is_finite() || !agent.initial.y.is_finite() {
            errors.push(format!("{at}.initial: coordinates must be finite"));
        }
        if agent.initial.speed < 0.0 {
            errors.push(format!(
                "{at}.initial.speed: must be non-negative, got {}",
                agent.initial.speed
            ));
        }
        if agent.branch_count == 0 {
            errors.push(format!("{at}.branch_count: must be at least 1"));
        } else if agent.branch_count % 2 == 0 {
            warnings.push(format!(
                "{at}.branch_count: {} is even, the heading fan gains an extra \
                 counterclockwise branch",
                agent.branch_count
            ));
        }

        let path = match &agent.reference_path {
            None => None,
            Some(vertices) => {
                let pts: Vec<Point2> =
                    vertices.iter().map(|v| Point2::new(v[0], v[1])).collect();
                match Polyline::new(pts) {
                    Ok(p) => Some(p),
                    Err(e) => {
                        errors.push(format!("{at}.reference_path: {e}"));
                        None
                    }
                }
            }
        };
        if agent.reference_path.is_none() && agent.goal.is_none() {
            warnings.push(format!(
                "{at}: no reference_path or goal, the agent has nothing to steer toward"
            ));
        }
        if agent.role == RoleEntry::Ego && agent.reference_path.is_none() {
            warnings.push(format!(
                "{at}: the ego has no reference_path, lateral-offset metrics stay empty"
            ));
        }

        if agent.initial.speed >= 0.0 && agent.initial.x.is_finite() && agent.initial.y.is_finite()
        {
            specs.push(AgentSpec {
                id: agent.id.clone(),
                role: agent.role.to_role(),
                initial: AgentState::new(
                    Point2::new(agent.initial.x, agent.initial.y),
                    agent.initial.heading,
                    agent.initial.speed,
                ),
                path,
                goal: agent.goal.map(|g| Point2::new(g[0], g[1])),
                branches: agent.branch_count.max(1),
            });
        }
    }

    let s = &file.search;
    if s.k_v <= 0.0 {
        errors.push(format!("search.k_v: must be positive, got {}", s.k_v));
    }
    if s.delta_theta <= 0.0 {
        errors.push(format!(
            "search.delta_theta: must be positive, got {}",
            s.delta_theta
        ));
    }
    if s.depth == 0 {
        errors.push("search.depth: must be at least 1".to_string());
    }

    let sp = &file.speed_mod;
    if sp.z <= 0.0 {
        errors.push(format!("speed_mod.z: safe radius must be positive, got {}", sp.z));
    }
    if sp.delta_v <= 0.0 {
        errors.push(format!(
            "speed_mod.delta_v: must be positive, got {}",
            sp.delta_v
        ));
    }
    if sp.v_min < 0.0 {
        errors.push(format!("speed_mod.v_min: must be non-negative, got {}", sp.v_min));
    }
    if sp.v_max < sp.v_min {
        errors.push(format!(
            "speed_mod.v_max: must be at least v_min, got {} < {}",
            sp.v_max, sp.v_min
        ));
    }

    if let Some(w) = &file.cost_weights {
        for (name, v) in [("lane", w.lane), ("dist", w.dist), ("goal", w.goal)] {
            if v < 0.0 {
                errors.push(format!("cost_weights.{name}: must be non-negative, got {v}"));
            }
        }
    }

    let d = &file.dmpc;
    if d.horizon == 0 {
        errors.push("dmpc.horizon: must be at least 1".to_string());
    }
    if d.dt <= 0.0 {
        errors.push(format!("dmpc.dt: must be positive, got {}", d.dt));
    }
    if !(d.alpha > 0.0 && d.alpha <= 1.0) {
        errors.push(format!("dmpc.alpha: must be in (0, 1], got {}", d.alpha));
    }
    if d.q_max == 0 {
        errors.push("dmpc.q_max: must be at least 1".to_string());
    }
    if d.epsilons.accel <= 0.0 || d.epsilons.steer <= 0.0 {
        errors.push(format!(
            "dmpc.epsilons: thresholds must be positive, got accel {} steer {}",
            d.epsilons.accel, d.epsilons.steer
        ));
    }
    let w = &d.weights;
    for (name, v) in [
        ("track_x", w.track_x),
        ("track_y", w.track_y),
        ("accel", w.accel),
        ("steer", w.steer),
        ("repulsion_gain", w.repulsion_gain),
    ] {
        if v < 0.0 {
            errors.push(format!("dmpc.weights.{name}: must be non-negative, got {v}"));
        }
    }
    if w.repulsion_soft <= 0.0 {
        errors.push(format!(
            "dmpc.weights.repulsion_soft: must be positive, got {}",
            w.repulsion_soft
        ));
    }
    if let Some(inner) = &d.inner {
        if inner.max_iters == 0 {
            errors.push("dmpc.inner.max_iters: must be at least 1".to_string());
        }
        if inner.step_init <= 0.0 || inner.fd_step <= 0.0 || inner.min_step <= 0.0 {
            errors.push(
                "dmpc.inner: step_init, fd_step, and min_step must be positive".to_string(),
            );
        }
        if inner.grad_tol < 0.0 {
            errors.push(format!(
                "dmpc.inner.grad_tol: must be non-negative, got {}",
                inner.grad_tol
            ));
        }
    }

    let sim = &file.sim;
    if sim.duration <= 0.0 {
        errors.push(format!("sim.duration: must be positive, got {}", sim.duration));
    }
    if sim.tick <= 0.0 {
        errors.push(format!("sim.tick: must be positive, got {}", sim.tick));
    }
    if sim.noise_std < 0.0 {
        errors.push(format!("sim.noise_std: must be non-negative, got {}", sim.noise_std));
    }
    if sim.lookahead <= 0.0 {
        errors.push(format!("sim.lookahead: must be positive, got {}", sim.lookahead));
    }
    if sim.collision_radius_vehicle <= 0.0 || sim.collision_radius_pedestrian <= 0.0 {
        errors.push("sim: collision radii must be positive".to_string());
    }
    if sim.position_jitter < 0.0 || sim.speed_jitter < 0.0 {
        errors.push("sim: jitter ranges must be non-negative".to_string());
    }
    if sim.planner == PlannerEntry::Dmpc && file.agents.len() < 2 {
        errors.push(
            "sim.planner: the distributed planner needs at least two agents".to_string(),
        );
    }
    let vehicle = sim.vehicle.unwrap_or_default();
    if vehicle.l_f <= 0.0 || vehicle.l_r <= 0.0 {
        errors.push("sim.vehicle: axle distances must be positive".to_string());
    }
    if vehicle.a_max <= 0.0 {
        errors.push(format!(
            "sim.vehicle.a_max: must be positive, got {}",
            vehicle.a_max
        ));
    }
    if !(vehicle.delta_max > 0.0 && vehicle.delta_max < std::f64::consts::FRAC_PI_2) {
        errors.push(format!(
            "sim.vehicle.delta_max: must be in (0, pi/2), got {}",
            vehicle.delta_max
        ));
    }

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let ego = file
        .agents
        .iter()
        .position(|a| a.role == RoleEntry::Ego)
        .expect("ego presence checked above");
    let weights = file.cost_weights.unwrap_or_default();
    let inner = d.inner.unwrap_or_default();
    let scenario = Scenario {
        agents: specs,
        ego,
        nash: PlannerConfig {
            search: SearchParams {
                k_v: s.k_v,
                delta_theta: s.delta_theta,
                depth: s.depth,
            },
            speed: SpeedModParams {
                z: sp.z,
                delta_v: sp.delta_v,
                v_min: sp.v_min,
                v_max: sp.v_max,
            },
            weights: CostWeights {
                lane: weights.lane,
                dist: weights.dist,
                goal: weights.goal,
            },
            cell_budget: DEFAULT_CELL_BUDGET,
        },
        dmpc: DmpcConfig {
            horizon: d.horizon,
            dt: d.dt,
            alpha: d.alpha,
            q_max: d.q_max,
            thresholds: [AgentThresholds {
                accel: d.epsilons.accel,
                steer: d.epsilons.steer,
            }; 2],
            inner: InnerSolverConfig {
                max_iters: inner.max_iters,
                step_init: inner.step_init,
                grad_tol: inner.grad_tol,
                fd_step: inner.fd_step,
                min_step: inner.min_step,
            },
        },
        dmpc_weights: DmpcWeights::uniform(
            d.horizon.max(1),
            w.track_x,
            w.track_y,
            w.accel,
            w.steer,
            w.repulsion_gain,
            w.repulsion_soft,
        ),
        bicycle: BicycleParams {
            l_f: vehicle.l_f,
            l_r: vehicle.l_r,
            a_max: vehicle.a_max,
            steer_max: vehicle.delta_max,
        },
        sim: SimParams {
            duration: sim.duration,
            tick: sim.tick,
            seed: sim.seed,
            noise_std: sim.noise_std,
            planner: sim.planner.to_kind(),
            lookahead: sim.lookahead,
            vehicle_radius: sim.collision_radius_vehicle,
            pedestrian_radius: sim.collision_radius_pedestrian,
            position_jitter: sim.position_jitter,
            speed_jitter: sim.speed_jitter,
        },
    };
    Ok((scenario, warnings))
}

/// Load a scenario file, apply dotted-path overrides, validate, convert.
pub fn load(
    path: &Path,
    overrides: &[String],
) -> Result<(Scenario, Vec<String>), ValidationErrors> {
    let text = fs::read_to_string(path).map_err(|e| {
        ValidationErrors(vec![format!("cannot read {}: {e}", path.display())])
    })?;
    let mut value = parse_value(&text)?;
    for spec in overrides {
        crate::overrides::apply(&mut value, spec).map_err(|e| ValidationErrors(vec![e]))?;
    }
    let file = from_value(value)?;
    build(&file)
}
