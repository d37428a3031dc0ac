use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use tailsitter::config::{ControllerFile, MissionFile, SweepManifest, VehicleFile};
use tailsitter::pipeline::{flyable_duration, fly, plan_mission};
use tailsitter::planner::{PlannerSolution, ReferenceTrajectory};
use tailsitter::sim::{monte_carlo_sweep, ErrorSample, FeedforwardMode, SimConfig, SimLog, SweepMission};
use tailsitter::stability::{
    compute_invariant_set, fit_uncertainty_bound, verify_containment, LyapunovForm,
};
use tailsitter::{Error, Result};

#[derive(Parser)]
#[command(name = "tailsitter", version, about = "Transition planning, simulation and stability analysis for a quadrotor biplane tailsitter")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a minimum-time transition and write the reference trajectory.
    Plan {
        #[arg(long)]
        mission: PathBuf,
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Collocation node count; overrides the mission file.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Fly a planned trajectory in closed loop and write the log.
    Fly {
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        /// Feedforward source: none, optimal or perturbed.
        #[arg(long, default_value = "optimal")]
        mode: FeedforwardMode,
        #[arg(long)]
        out: PathBuf,
        /// Simulated time, s; defaults to the whole trajectory.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Run missions x gains x perturbations and write one log per run.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the manifest seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the load-error bound to a sweep and check containment per run.
    Analyze {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long)]
        gains: PathBuf,
        #[arg(long)]
        vehicle: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        confidence: f64,
        /// Allowed excursion above V_lim after entry, as a fraction.
        #[arg(long, default_value_t = 0.05)]
        tolerance: f64,
    },
}

#[derive(Serialize)]
struct PlanReport {
    mission: String,
    final_time: f64,
    max_defect: f64,
    violation: f64,
    kkt: f64,
    outer_iterations: usize,
    inner_iterations: usize,
    min_clearance: Option<f64>,
    altitude_change: f64,
    flight_duration: f64,
}

impl PlanReport {
    fn new(file: &MissionFile, sol: &PlannerSolution, flight_duration: f64) -> Self {
        let first = sol.nodes[0][1];
        let last = sol.nodes[sol.nodes.len() - 1][1];
        let obstacles = &file.mission.obstacles;
        PlanReport {
            mission: file.mission.name.clone(),
            final_time: sol.final_time,
            max_defect: sol.max_defect,
            violation: sol.violation,
            kkt: sol.kkt,
            outer_iterations: sol.outer_iterations,
            inner_iterations: sol.inner_iterations,
            min_clearance: (!obstacles.is_empty()).then(|| sol.min_clearance(obstacles)),
            altitude_change: last - first,
            flight_duration,
        }
    }
}

#[derive(Serialize)]
struct FlySummary {
    mode: String,
    duration: f64,
    samples: usize,
    rms_position_error: f64,
    max_position_error: f64,
    rms_velocity_error: f64,
    max_velocity_error: f64,
    saturated_samples: usize,
    failure: Option<String>,
}

impl FlySummary {
    fn new(mode: FeedforwardMode, duration: f64, log: &SimLog, failure: Option<String>) -> Self {
        let s = log.summary();
        FlySummary {
            mode: mode.to_string(),
            duration,
            samples: log.len(),
            rms_position_error: s.rms_position,
            max_position_error: s.max_position,
            rms_velocity_error: s.rms_velocity,
            max_velocity_error: s.max_velocity,
            saturated_samples: s.saturated_samples,
            failure,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct IndexRow {
    id: usize,
    mission: String,
    gains_index: usize,
    perturbation_index: usize,
    dy: f64,
    dz: f64,
    dx: f64,
    dvx: f64,
    dvy: f64,
    dvz: f64,
    status: String,
    log: String,
    rms_position_error: f64,
    max_position_error: f64,
    failure: String,
}

#[derive(Serialize)]
struct RunVerdict {
    id: usize,
    initial_value: f64,
    started_outside: bool,
    entry_time: Option<f64>,
    violations: usize,
    max_after_entry: f64,
    contained: bool,
}

#[derive(Serialize)]
struct AnalysisReport {
    sample_count: usize,
    confidence: f64,
    alpha0: f64,
    alpha1: f64,
    v_lim: f64,
    position_axis_sq: f64,
    velocity_axis_sq: f64,
    position_semi_axis: f64,
    velocity_semi_axis: f64,
    runs: Vec<RunVerdict>,
}

fn write_toml<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

/// Wall-clock time goes here and nowhere else, so every other output is reproducible.
fn write_metadata(dir: &Path, command: &str) -> Result<()> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let text = format!("command = \"{command}\"\nunix_time = {secs}\nversion = \"{}\"\n", env!("CARGO_PKG_VERSION"));
    fs::write(dir.join("metadata.toml"), text)?;
    Ok(())
}

fn write_log(log: &SimLog, path: &Path) -> Result<()> {
    log.write_csv(BufWriter::new(File::create(path)?))
}

fn cmd_plan(mission: &Path, vehicle: &Path, out: &Path, nodes: Option<usize>) -> Result<()> {
    let params = VehicleFile::load(vehicle)?;
    let file = MissionFile::load(mission)?;
    fs::create_dir_all(out)?;
    write_metadata(out, "plan")?;
    match plan_mission(&file, &params, nodes) {
        Ok(planned) => {
            planned.reference.write_csv(BufWriter::new(File::create(out.join("trajectory.csv"))?))?;
            let report = PlanReport::new(&file, &planned.solution, planned.flight_duration);
            write_toml(&report, &out.join("plan_report.toml"))?;
            println!("t_f = {:.3} s, max defect {:.2e}", report.final_time, report.max_defect);
            Ok(())
        }
        Err(Error::SolverFailed(failure)) => {
            let report = PlanReport::new(&file, &failure.best, 0.0);
            let text = toml::to_string_pretty(&report).map_err(|e| Error::InvalidParameter(e.to_string()))?;
            fs::write(out.join("diagnostics.toml"), format!("reason = \"{}\"\n{text}", failure.reason))?;
            Err(Error::SolverFailed(failure))
        }
        Err(e) => Err(e),
    }
}

fn cmd_fly(
    trajectory: &Path,
    vehicle: &Path,
    gains: &Path,
    mode: FeedforwardMode,
    out: &Path,
    duration: Option<f64>,
) -> Result<()> {
    let params = VehicleFile::load(vehicle)?;
    let controller = ControllerFile::load(gains)?;
    let reference = ReferenceTrajectory::read_csv(File::open(trajectory)?)?;
    let duration = duration.unwrap_or_else(|| flyable_duration(&reference, controller.rates.outer_hz));
    fs::create_dir_all(out)?;
    write_metadata(out, "fly")?;
    let (log, result) = match fly(&reference, duration, &controller, mode, &params, None) {
        Ok(log) => (log, Ok(())),
        Err(Error::Diverged { time, error, log }) => {
            let log = *log;
            (log.clone(), Err(Error::Diverged { time, error, log: Box::new(log) }))
        }
        Err(e) => return Err(e),
    };
    write_log(&log, &out.join("log.csv"))?;
    let failure = result.as_ref().err().map(|e| e.to_string());
    let summary = FlySummary::new(mode, duration, &log, failure);
    write_toml(&summary, &out.join("summary.toml"))?;
    println!(
        "{mode}: RMS |P_e| {:.4} m, max {:.4} m, RMS |P_e'| {:.4} m/s, max {:.4} m/s",
        summary.rms_position_error, summary.max_position_error, summary.rms_velocity_error, summary.max_velocity_error
    );
    result
}

fn cmd_sweep(manifest: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let m = SweepManifest::load(manifest)?;
    let params = VehicleFile::load(&m.vehicle)?;
    let controller = ControllerFile::load(&m.controller)?;
    let seed = seed.unwrap_or(m.seed);
    let mut missions = Vec::new();
    for path in &m.missions {
        let file = MissionFile::load(path)?;
        let planned = plan_mission(&file, &params, None)?;
        missions.push(SweepMission {
            name: file.mission.name.clone(),
            trajectory: planned.reference,
            duration: planned.flight_duration,
        });
    }
    let gains = m.gains.iter().map(|g| g.resolve()).collect::<Result<Vec<_>>>()?;
    let perturbations = m.perturbations.generate(seed);
    let cfg = SimConfig { feedforward: m.mode, seed, ..controller.sim_config() };
    let result = monte_carlo_sweep(&missions, &gains, &perturbations, &cfg, &params)?;

    let runs_dir = out.join("runs");
    fs::create_dir_all(&runs_dir)?;
    write_metadata(out, "sweep")?;
    let mut index = csv::Writer::from_path(out.join("index.csv"))?;
    for run in &result.runs {
        let name = format!("run_{:05}.csv", run.id);
        if let Some(log) = &run.log {
            write_log(log, &runs_dir.join(&name))?;
        }
        let p = &perturbations[run.perturbation_index];
        let (rms, max) = run.log.as_ref().map_or((f64::NAN, f64::NAN), |l| (l.rms_position_error(), l.max_position_error()));
        index.serialize(IndexRow {
            id: run.id,
            mission: run.mission.clone(),
            gains_index: run.gains_index,
            perturbation_index: run.perturbation_index,
            dx: p.position[0],
            dy: p.position[1],
            dz: p.position[2],
            dvx: p.velocity[0],
            dvy: p.velocity[1],
            dvz: p.velocity[2],
            status: if run.failure.is_some() { "failed" } else { "ok" }.into(),
            log: if run.log.is_some() { format!("runs/{name}") } else { String::new() },
            rms_position_error: rms,
            max_position_error: max,
            failure: run.failure.clone().unwrap_or_default(),
        })?;
    }
    index.flush()?;
    let failed = result.failure_count();
    println!("{} runs, {failed} failed", result.runs.len());
    if failed == result.runs.len() {
        return Err(Error::InvalidParameter("every run in the sweep failed".into()));
    }
    Ok(())
}

fn cmd_analyze(sweep: &Path, gains: &Path, vehicle: &Path, out: &Path, confidence: f64, tolerance: f64) -> Result<()> {
    let params = VehicleFile::load(vehicle)?;
    let controller = ControllerFile::load(gains)?;
    let g = controller.gains.resolve()?;
    let mut reader = csv::Reader::from_path(sweep.join("index.csv"))?;
    let mut logs = Vec::new();
    for row in reader.deserialize() {
        let row: IndexRow = row?;
        if row.status == "ok" {
            logs.push((row.id, SimLog::read_csv(File::open(sweep.join(&row.log))?)?));
        }
    }
    if logs.is_empty() {
        return Err(Error::DegenerateRegression("sweep has no completed runs".into()));
    }
    let samples: Vec<ErrorSample> = logs
        .iter()
        .flat_map(|(id, log)| {
            (0..log.len()).map(move |k| ErrorSample {
                run: *id,
                time: log.time[k],
                velocity_error: log.velocity_error[k].norm(),
                load_error: log.load_error[k],
            })
        })
        .collect();
    let bound = fit_uncertainty_bound(&samples, confidence)?;
    let set = compute_invariant_set(&g, &bound, params.mass)?;
    let form = LyapunovForm::canonical_default(&g)?;

    fs::create_dir_all(out)?;
    write_metadata(out, "analyze")?;
    let mut scatter = csv::Writer::from_path(out.join("scatter.csv"))?;
    scatter.write_record(["run", "t", "velocity_error", "load_error"])?;
    for s in &samples {
        scatter.write_record(&[s.run.to_string(), s.time.to_string(), s.velocity_error.to_string(), s.load_error.to_string()])?;
    }
    scatter.flush()?;

    let mut traces = csv::Writer::from_path(out.join("lyapunov.csv"))?;
    traces.write_record(["run", "t", "v", "v_lim", "position_error", "velocity_error"])?;
    let mut runs = Vec::new();
    for (id, log) in &logs {
        let r = verify_containment(log, &set, &form, tolerance);
        for s in &r.trace {
            traces.write_record(&[
                id.to_string(),
                s.time.to_string(),
                s.value.to_string(),
                set.v_lim.to_string(),
                s.position_error.to_string(),
                s.velocity_error.to_string(),
            ])?;
        }
        let v0 = r.trace.first().map_or(0.0, |s| s.value);
        runs.push(RunVerdict {
            id: *id,
            initial_value: v0,
            started_outside: v0 > set.v_lim,
            entry_time: r.entry_time,
            violations: r.violations.len(),
            max_after_entry: r.max_after_entry,
            contained: r.contained(),
        });
    }
    traces.flush()?;
    let contained = runs.iter().filter(|r| r.contained).count();
    let report = AnalysisReport {
        sample_count: bound.sample_count,
        confidence,
        alpha0: bound.alpha0,
        alpha1: bound.alpha1,
        v_lim: set.v_lim,
        position_axis_sq: set.position_axis_sq,
        velocity_axis_sq: set.velocity_axis_sq,
        position_semi_axis: set.position_semi_axis(),
        velocity_semi_axis: set.velocity_semi_axis(),
        runs,
    };
    write_toml(&report, &out.join("report.toml"))?;
    println!(
        "alpha0 = {:.3} N, alpha1 = {:.3} N s/m, V_lim = {:.3}; {contained}/{} runs contained",
        report.alpha0,
        report.alpha1,
        report.v_lim,
        report.runs.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan { mission, vehicle, out, nodes } => cmd_plan(&mission, &vehicle, &out, nodes),
        Command::Fly { trajectory, vehicle, gains, mode, out, duration } => {
            cmd_fly(&trajectory, &vehicle, &gains, mode, &out, duration)
        }
        Command::Sweep { manifest, out, seed } => cmd_sweep(&manifest, &out, seed),
        Command::Analyze { sweep, gains, vehicle, out, confidence, tolerance } => {
            cmd_analyze(&sweep, &gains, &vehicle, &out, confidence, tolerance)
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
