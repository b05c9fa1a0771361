//! `gtplan`: run, validate, and benchmark motion-planning scenarios.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gtplan_cli::{bench, schema, trace};
use gtplan_core::sim::{simulate, PlannerKind};

#[derive(Parser)]
#[command(
    name = "gtplan",
    version,
    about = "Game-theoretic motion planning: scenario runner and planner benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlannerArg {
    Nash,
    Dmpc,
}

impl PlannerArg {
    fn kind(self) -> PlannerKind {
        match self {
            PlannerArg::Nash => PlannerKind::Nash,
            PlannerArg::Dmpc => PlannerKind::Dmpc,
        }
    }

    fn label(self) -> &'static str {
        match self {
            PlannerArg::Nash => "nash",
            PlannerArg::Dmpc => "dmpc",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write the trace CSV plus a summary JSON.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Directory for the trace and summary files.
        #[arg(long, default_value = ".")]
        output: PathBuf,
        /// Dotted-path overrides, e.g. --override sim.seed=7.
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
        /// Planner to use, overriding the scenario's sim.planner.
        #[arg(long)]
        planner: Option<PlannerArg>,
        /// Write solver_ms as 0 so equal-seed runs are byte-identical.
        #[arg(long)]
        zero_timing: bool,
    },
    /// Check a scenario file and report every problem without running it.
    Validate {
        scenario: PathBuf,
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
    /// Compare planners over randomized trials of one scenario.
    Bench {
        scenario: PathBuf,
        /// Randomized trials per planner.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        /// Planners to compare; repeat the flag. Defaults to nash and dmpc.
        #[arg(long = "planner")]
        planners: Vec<PlannerArg>,
        /// Directory for the JSON report.
        #[arg(long, default_value = ".")]
        output: PathBuf,
        #[arg(long = "override", value_name = "PATH=VALUE")]
        overrides: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { scenario, output, overrides, planner, zero_timing } => {
            run_command(&scenario, &output, &overrides, planner, zero_timing)
        }
        Command::Validate { scenario, overrides } => validate_command(&scenario, &overrides),
        Command::Bench { scenario, trials, planners, output, overrides } => {
            bench_command(&scenario, trials, &planners, &output, &overrides)
        }
    };
    ExitCode::from(code)
}

fn scenario_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "scenario".to_string())
}

fn load_or_report(
    path: &Path,
    overrides: &[String],
) -> Result<(gtplan_core::sim::Scenario, Vec<String>), u8> {
    match schema::load(path, overrides) {
        Ok(loaded) => Ok(loaded),
        Err(e) => {
            eprint!("{e}");
            Err(1)
        }
    }
}

fn run_command(
    scenario_path: &Path,
    output: &Path,
    overrides: &[String],
    planner: Option<PlannerArg>,
    zero_timing: bool,
) -> u8 {
    let mut overrides = overrides.to_vec();
    if let Some(p) = planner {
        overrides.push(format!("sim.planner={}", p.label()));
    }
    let (scenario, warnings) = match load_or_report(scenario_path, &overrides) {
        Ok(x) => x,
        Err(code) => return code,
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let result = simulate(&scenario);

    let stem = scenario_stem(scenario_path);
    let ids: Vec<String> = scenario.agents.iter().map(|a| a.id.clone()).collect();
    let csv = trace::trace_csv(&ids, &result, zero_timing);
    let summary = trace::summarize(
        &stem,
        bench::planner_label(scenario.sim.planner),
        scenario.ego,
        ids.len(),
        scenario.sim.tick,
        &result,
        zero_timing,
    );
    let summary_json = match serde_json::to_string_pretty(&summary) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: serializing summary: {e}");
            return 2;
        }
    };

    let trace_path = output.join(format!("{stem}_trace.csv"));
    let summary_path = output.join(format!("{stem}_summary.json"));
    if let Err(e) = trace::write_atomic(&trace_path, &csv) {
        eprintln!("error: {e:#}");
        return 2;
    }
    if let Err(e) = trace::write_atomic(&summary_path, &summary_json) {
        eprintln!("error: {e:#}");
        return 2;
    }

    println!("trace:   {}", trace_path.display());
    println!("summary: {}", summary_path.display());
    println!(
        "ticks: {}  collision: {}  min separation: {}  solver total: {:.3} ms",
        summary.ticks,
        summary.collision,
        summary
            .min_separation_m
            .map(|v| format!("{v:.3} m"))
            .unwrap_or_else(|| "n/a".to_string()),
        summary.total_solver_ms
    );

    if let Some(err) = &result.error {
        eprintln!("error: simulation aborted early: {err}");
        return 2;
    }
    0
}

fn validate_command(scenario_path: &Path, overrides: &[String]) -> u8 {
    match load_or_report(scenario_path, overrides) {
        Ok((scenario, warnings)) => {
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "ok: {} agents, planner {}, {:.1} s at {:.2} s ticks",
                scenario.agents.len(),
                bench::planner_label(scenario.sim.planner),
                scenario.sim.duration,
                scenario.sim.tick
            );
            0
        }
        Err(code) => code,
    }
}

fn bench_command(
    scenario_path: &Path,
    trials: usize,
    planners: &[PlannerArg],
    output: &Path,
    overrides: &[String],
) -> u8 {
    if trials == 0 {
        eprintln!("error: --trials must be at least 1");
        return 1;
    }
    let (scenario, warnings) = match load_or_report(scenario_path, overrides) {
        Ok(x) => x,
        Err(code) => return code,
    };
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let kinds: Vec<PlannerKind> = if planners.is_empty() {
        vec![PlannerKind::Nash, PlannerKind::Dmpc]
    } else {
        planners.iter().map(|p| p.kind()).collect()
    };
    if kinds.contains(&PlannerKind::Dmpc) && scenario.agents.len() < 2 {
        eprintln!("error: the dmpc planner needs at least two agents");
        return 1;
    }

    let stem = scenario_stem(scenario_path);
    let report = bench::run(&scenario, &stem, &kinds, trials);
    print!("{}", bench::table(&report));

    let json = match serde_json::to_string_pretty(&report) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: serializing report: {e}");
            return 2;
        }
    };
    let report_path = output.join(format!("{stem}_bench.json"));
    if let Err(e) = trace::write_atomic(&report_path, &json) {
        eprintln!("error: {e:#}");
        return 2;
    }
    println!("report:  {}", report_path.display());

    let failed: usize = report.planners.iter().map(|p| p.errors).sum();
    if failed > 0 {
        eprintln!("error: {failed} trial(s) aborted with planner errors");
        return 2;
    }
    0
}
