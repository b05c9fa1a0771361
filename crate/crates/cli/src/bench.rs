//! Planner comparison harness: run randomized trials of one scenario per
//! planner and aggregate timing, divergence, and collision counts.

use gtplan_core::sim::{randomized_trials, PlannerKind, Scenario};
use serde::Serialize;

pub fn planner_label(kind: PlannerKind) -> &'static str {
    match kind {
        PlannerKind::Nash => "nash",
        PlannerKind::Dmpc => "dmpc",
    }
}

/// Aggregates for one planner across all trials. Field order is the JSON
/// schema and stays fixed.
#[derive(Debug, Clone, Serialize)]
pub struct PlannerReport {
    pub planner: String,
    pub trials: usize,
    pub ticks_total: usize,
    pub mean_tick_solver_s: f64,
    pub max_tick_solver_s: f64,
    pub mean_scenario_solver_s: f64,
    pub max_scenario_solver_s: f64,
    /// Fallback-equilibrium ticks (nash) or unconverged ticks (dmpc),
    /// summed over trials.
    pub divergences: usize,
    /// Trials that ended with the collision flag set.
    pub collisions: usize,
    /// Trials that aborted with a planner error.
    pub errors: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub scenario: String,
    pub trials: usize,
    pub planners: Vec<PlannerReport>,
}

pub fn run(
    scenario: &Scenario,
    name: &str,
    planners: &[PlannerKind],
    trials: usize,
) -> BenchReport {
    assert!(trials >= 1, "need at least one trial");
    let mut reports = Vec::with_capacity(planners.len());
    for &kind in planners {
        let mut sc = scenario.clone();
        sc.sim.planner = kind;
        let results = randomized_trials(&sc, trials, sc.sim.seed);

        let mut ticks_total = 0;
        let mut tick_sum = 0.0;
        let mut tick_max = 0.0f64;
        let mut scenario_sum = 0.0;
        let mut scenario_max = 0.0f64;
        let mut divergences = 0;
        let mut collisions = 0;
        let mut errors = 0;
        for r in &results {
            ticks_total += r.ticks.len();
            for rec in &r.ticks {
                tick_sum += rec.solver_seconds;
                tick_max = tick_max.max(rec.solver_seconds);
            }
            scenario_sum += r.total_solver_seconds;
            scenario_max = scenario_max.max(r.total_solver_seconds);
            divergences += match kind {
                PlannerKind::Nash => r.fallback_ticks,
                PlannerKind::Dmpc => r.unconverged_ticks,
            };
            collisions += usize::from(r.collision);
            errors += usize::from(r.error.is_some());
        }
        reports.push(PlannerReport {
            planner: planner_label(kind).to_string(),
            trials,
            ticks_total,
            mean_tick_solver_s: if ticks_total > 0 { tick_sum / ticks_total as f64 } else { 0.0 },
            max_tick_solver_s: tick_max,
            mean_scenario_solver_s: scenario_sum / trials as f64,
            max_scenario_solver_s: scenario_max,
            divergences,
            collisions,
            errors,
        });
    }
    BenchReport { scenario: name.to_string(), trials, planners: reports }
}

/// Fixed-width text table for terminals.
pub fn table(report: &BenchReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario: {}  trials per planner: {}\n",
        report.scenario, report.trials
    ));
    out.push_str(&format!(
        "{:<8} {:>14} {:>14} {:>16} {:>16} {:>12} {:>11} {:>7}\n",
        "planner",
        "mean tick ms",
        "max tick ms",
        "mean scenario s",
        "max scenario s",
        "divergences",
        "collisions",
        "errors"
    ));
    for p in &report.planners {
        out.push_str(&format!(
            "{:<8} {:>14.4} {:>14.4} {:>16.4} {:>16.4} {:>12} {:>11} {:>7}\n",
            p.planner,
            p.mean_tick_solver_s * 1000.0,
            p.max_tick_solver_s * 1000.0,
            p.mean_scenario_solver_s,
            p.max_scenario_solver_s,
            p.divergences,
            p.collisions,
            p.errors
        ));
    }
    out
}
