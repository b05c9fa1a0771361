//! Trace CSV and summary JSON emission, plus the parser used to check
//! round-trips.
//!
//! One CSV row per (tick, agent). Floats are written with Rust's shortest
//! round-trip formatting, so a parsed trace reproduces the exact values
//! the simulation computed, and aggregate metrics recomputed from rows
//! match the summary bit for bit.

use std::fs;
use std::path::Path;

use anyhow::Context;
use gtplan_core::sim::{SimResult, TickOutcome};
use serde::Serialize;

pub const TRACE_HEADER: &str =
    "tick,time_s,agent_id,x,y,heading,speed,planned_x,planned_y,solver_ms,equilibrium_kind";

/// Render the whole trace as CSV text. With `zero_timing` the solver_ms
/// column is written as 0 everywhere, which makes equal-seed runs
/// byte-identical.
pub fn trace_csv(ids: &[String], result: &SimResult, zero_timing: bool) -> String {
    let mut out = String::with_capacity(64 * result.ticks.len() * ids.len() + 128);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for rec in &result.ticks {
        let solver_ms = if zero_timing { 0.0 } else { rec.solver_seconds * 1000.0 };
        for (i, id) in ids.iter().enumerate() {
            let st = &rec.states[i];
            let planned = rec.planned[i];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                rec.tick,
                rec.time,
                id,
                st.position.x,
                st.position.y,
                st.heading,
                st.speed,
                planned.x,
                planned.y,
                solver_ms,
                rec.outcome.label()
            ));
        }
    }
    out
}

/// A parsed trace row, field for field.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub tick: usize,
    pub time_s: f64,
    pub agent_id: String,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub planned_x: f64,
    pub planned_y: f64,
    pub solver_ms: f64,
    pub equilibrium_kind: String,
}

/// Parse trace CSV text back into rows, verifying the header and that
/// every numeric field is finite.
pub fn parse_trace(csv: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = csv.lines();
    let header = lines.next().ok_or("empty trace")?;
    if header != TRACE_HEADER {
        return Err(format!("unexpected header: {header}"));
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!("line {}: expected 11 fields, got {}", lineno + 2, fields.len()));
        }
        let num = |idx: usize| -> Result<f64, String> {
            let v: f64 = fields[idx]
                .parse()
                .map_err(|e| format!("line {}: field {}: {e}", lineno + 2, idx))?;
            if !v.is_finite() {
                return Err(format!("line {}: field {} is not finite", lineno + 2, idx));
            }
            Ok(v)
        };
        rows.push(TraceRow {
            tick: fields[0]
                .parse()
                .map_err(|e| format!("line {}: tick: {e}", lineno + 2))?,
            time_s: num(1)?,
            agent_id: fields[2].to_string(),
            x: num(3)?,
            y: num(4)?,
            heading: num(5)?,
            speed: num(6)?,
            planned_x: num(7)?,
            planned_y: num(8)?,
            solver_ms: num(9)?,
            equilibrium_kind: fields[10].to_string(),
        });
    }
    Ok(rows)
}

/// Per-kind tick counts, one field per known kind so the JSON schema is
/// fixed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub pure_nash: usize,
    pub fallback_min_regret: usize,
    pub dmpc_converged: usize,
    pub dmpc_max_iters: usize,
}

impl KindCounts {
    pub fn count(&mut self, outcome: TickOutcome) {
        match outcome {
            TickOutcome::PureNash => self.pure_nash += 1,
            TickOutcome::FallbackMinRegret => self.fallback_min_regret += 1,
            TickOutcome::DmpcConverged => self.dmpc_converged += 1,
            TickOutcome::DmpcMaxIters => self.dmpc_max_iters += 1,
        }
    }

    pub fn count_label(&mut self, label: &str) -> Result<(), String> {
        match label {
            "pure_nash" => self.pure_nash += 1,
            "fallback_min_regret" => self.fallback_min_regret += 1,
            "dmpc_converged" => self.dmpc_converged += 1,
            "dmpc_max_iters" => self.dmpc_max_iters += 1,
            other => return Err(format!("unknown equilibrium kind '{other}'")),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TrackingSummary {
    pub mean_abs_m: f64,
    pub rms_m: f64,
    pub max_abs_m: f64,
    pub samples: usize,
}

/// Aggregate metrics for one run. Field order is the JSON schema; fields
/// derivable from trace rows (counts, solver totals, separation) are
/// computed with the exact values the rows carry.
#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub scenario: String,
    pub planner: String,
    pub agents: usize,
    pub ticks: usize,
    pub rows: usize,
    pub tick_s: f64,
    pub simulated_s: f64,
    pub completed_early: bool,
    pub collision: bool,
    pub min_separation_m: Option<f64>,
    pub total_solver_ms: f64,
    pub mean_solver_ms_per_tick: f64,
    pub max_solver_ms: f64,
    pub equilibrium_counts: KindCounts,
    pub equilibrium_violations: usize,
    pub unconverged_ticks: usize,
    pub ego_tracking: Option<TrackingSummary>,
    pub error: Option<String>,
}

pub fn summarize(
    scenario: &str,
    planner: &str,
    ego: usize,
    agents: usize,
    tick_s: f64,
    result: &SimResult,
    zero_timing: bool,
) -> TraceSummary {
    let ticks = result.ticks.len();
    let mut total_solver_ms = 0.0;
    let mut max_solver_ms = 0.0f64;
    let mut counts = KindCounts::default();
    for rec in &result.ticks {
        let ms = if zero_timing { 0.0 } else { rec.solver_seconds * 1000.0 };
        total_solver_ms += ms;
        max_solver_ms = max_solver_ms.max(ms);
        counts.count(rec.outcome);
    }
    let ego_tracking = result.tracking.get(ego).and_then(|t| t.as_ref()).map(|t| {
        TrackingSummary {
            mean_abs_m: t.mean_abs,
            rms_m: t.rms,
            max_abs_m: t.max_abs,
            samples: t.samples,
        }
    });
    TraceSummary {
        scenario: scenario.to_string(),
        planner: planner.to_string(),
        agents,
        ticks,
        rows: ticks * agents,
        tick_s,
        simulated_s: ticks as f64 * tick_s,
        completed_early: result.completed_early,
        collision: result.collision,
        min_separation_m: result.min_separation,
        total_solver_ms,
        mean_solver_ms_per_tick: if ticks > 0 { total_solver_ms / ticks as f64 } else { 0.0 },
        max_solver_ms,
        equilibrium_counts: counts,
        equilibrium_violations: result.equilibrium_violations,
        unconverged_ticks: result.unconverged_ticks,
        ego_tracking,
        error: result.error.clone(),
    }
}

/// Write a file atomically: the content lands under a temporary name in
/// the target directory and is renamed over the destination.
pub fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => Path::new(".").to_path_buf(),
    };
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "out".to_string());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)
        .with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    Ok(())
}
