//! Command-line front end: `simulate`, `plan`, `map` and `report` over
//! scenario files.
//!
//! Exit codes: 0 on success, 1 when the scenario or arguments are invalid,
//! 2 when the vehicle gets stuck or flips.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::locomotion::{half_cycle, SimParams, Site, StrokeCommand, VehicleSpec, VehicleState};
use crate::mission::{Mission, TrajectoryRow};
use crate::planner::{
    execute_plan, plan_pad, validate_plan, EnergyBreakdown, MissionReport, Pass, PassKind,
    PassPlan, PlanOptions, RefPoint, Violation,
};
use crate::raster::{fmt9, write_ascii};
use crate::scenario::{DriveStep, MissionSpec, Scenario};
use crate::sensing::{
    build_raster, read_events_csv, write_events_csv, Aggregation, EventRecord, Property, Sensor,
};
use crate::soil::{Environment, SoilProfile};
use crate::traction::{
    anchoring_slip, anchoring_work, friction_baseline, pull_weight_ratio, tractive_efficiency,
    CycleRecord,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const TRAJECTORY_HEADER: [&str; 9] = [
    "half_cycle",
    "pass",
    "phase",
    "x",
    "y",
    "heading",
    "separation",
    "slip",
    "advance",
];
pub const ENERGY_HEADER: [&str; 11] = [
    "half_cycle",
    "slip",
    "advance",
    "draft",
    "anchoring_work",
    "extraction_work",
    "useful_work",
    "cutting_work",
    "pushing_work",
    "spilled",
    "stuck",
];

#[derive(Debug, Parser)]
#[command(
    name = "interlock",
    version,
    about = "Push-pull spike vehicle and earthworks simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute the scenario's drive script or pad plan.
    Simulate(Common),
    /// Plan a pad and write the plan with its predicted energy.
    Plan(Common),
    /// Build sensing rasters from an event log.
    Map {
        #[command(flatten)]
        common: Common,
        /// Event CSV; when absent the scenario is simulated first.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Tabulate pull/weight, anchoring work and tractive efficiency.
    Report(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario JSON; repeat to run several.
    #[arg(long)]
    pub scenario: Vec<PathBuf>,
    /// Output directory; one subdirectory per scenario when several are given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Scenarios run concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Allow pad depths outside the 0.30 to 0.50 m band.
    #[arg(long)]
    pub force_depth_override: bool,
}

/// Map an error to the process exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Stuck { .. } | Error::Flip { .. } | Error::Degenerate(_) | Error::Io(_) => {
            EXIT_RUNTIME
        }
        _ => EXIT_INVALID,
    }
}

/// Parse `args` (including the program name), run, print diagnostics, and
/// return the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let outcomes = run(&cli.command);
    let mut code = EXIT_OK;
    for o in outcomes {
        if !o.stdout.is_empty() {
            print!("{}", o.stdout);
        }
        if let Some(msg) = &o.error {
            eprintln!("error: {msg}");
        }
        code = code.max(o.code);
    }
    code
}

/// Result of one scenario run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub error: Option<String>,
}

/// Run a command over all its scenarios, `--jobs` at a time. Outcomes come
/// back in scenario order.
pub fn run(command: &Command) -> Vec<Outcome> {
    let common = match command {
        Command::Simulate(c)
        | Command::Plan(c)
        | Command::Report(c)
        | Command::Map { common: c, .. } => c,
    };
    let paths: Vec<Option<&Path>> = if common.scenario.is_empty() {
        vec![None]
    } else {
        common.scenario.iter().map(|p| Some(p.as_path())).collect()
    };
    let many = paths.len() > 1;
    let job = |path: Option<&Path>| -> Outcome {
        let out = out_dir(common, path, many);
        match run_one(command, common, path, out.as_deref()) {
            Ok((code, stdout)) => {
                // a mission that failed part-way still reports; surface why
                let error = stdout
                    .lines()
                    .find_map(|l| l.strip_prefix("status failed: "))
                    .map(str::to_string);
                Outcome {
                    code,
                    stdout,
                    error,
                }
            }
            Err(e) => Outcome {
                code: exit_code(&e),
                stdout: String::new(),
                error: Some(e.to_string()),
            },
        }
    };
    let jobs = common.jobs.clamp(1, paths.len());
    if jobs == 1 {
        return paths.into_iter().map(job).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Outcome>>> = Mutex::new(vec![None; paths.len()]);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&path) = paths.get(i) else { break };
                let o = job(path);
                slots
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(o);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|o| o.expect("every scenario ran"))
        .collect()
}

fn out_dir(common: &Common, scenario: Option<&Path>, many: bool) -> Option<PathBuf> {
    let base = common.out.clone()?;
    Some(match (many, scenario.and_then(|p| p.file_stem())) {
        (true, Some(stem)) => base.join(stem),
        _ => base,
    })
}

fn run_one(
    command: &Command,
    common: &Common,
    path: Option<&Path>,
    out: Option<&Path>,
) -> Result<(i32, String)> {
    let mut scenario = match path {
        Some(p) => Scenario::load(p)?,
        None => Scenario::parse("{}", "<default>")?,
    };
    if let Some(seed) = common.seed {
        scenario.seed = seed;
    }
    let out = out
        .map(Path::to_path_buf)
        .or_else(|| scenario.output.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    match command {
        Command::Simulate(_) => simulate(&scenario, common, &out),
        Command::Plan(_) => plan(&scenario, common, &out),
        Command::Map { events, .. } => map(&scenario, common, events.as_deref(), &out),
        Command::Report(_) => report(&scenario, &out),
    }
}

fn write(out: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    fs::write(out.join(name), contents)?;
    Ok(())
}

fn csv_text<const N: usize>(
    header: [&str; N],
    rows: impl Iterator<Item = [String; N]>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(&r).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv of ASCII fields"))
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> Result<String> {
    csv_text(
        TRAJECTORY_HEADER,
        rows.iter().map(|r| {
            let phase = match r.phase {
                crate::locomotion::StrokePhase::Expanding => "expanding",
                crate::locomotion::StrokePhase::Contracting => "contracting",
            };
            [
                r.half_cycle.to_string(),
                r.pass.to_string(),
                phase.into(),
                fmt9(r.x),
                fmt9(r.y),
                fmt9(r.heading),
                fmt9(r.separation),
                fmt9(r.slip),
                fmt9(r.advance),
            ]
        }),
    )
}

pub fn energy_csv(records: &[CycleRecord]) -> Result<String> {
    csv_text(
        ENERGY_HEADER,
        records.iter().map(|r| {
            [
                r.half_cycle.to_string(),
                fmt9(r.slip),
                fmt9(r.stroke_advance),
                fmt9(r.draft),
                fmt9(r.anchoring_work),
                fmt9(r.extraction_work),
                fmt9(r.useful_work),
                fmt9(r.cutting_work),
                fmt9(r.pushing_work),
                fmt9(r.spilled),
                u8::from(r.stuck).to_string(),
            ]
        }),
    )
}

fn events_csv(events: &[EventRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_events_csv(events, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv of ASCII fields"))
}

fn write_terrain(out: &Path, site: &Site) -> Result<()> {
    let t = &site.terrain;
    let g = &t.spec;
    let surface: Vec<Option<f64>> = t.surfaces().into_iter().map(Some).collect();
    let bank: Vec<Option<f64>> = t.bank_floors().iter().copied().map(Some).collect();
    let loose: Vec<Option<f64>> = t.loose_depths().iter().copied().map(Some).collect();
    write(out, "surface.asc", &write_ascii(g, &surface))?;
    write(out, "bank.asc", &write_ascii(g, &bank))?;
    write(out, "loose.asc", &write_ascii(g, &loose))
}

/// Maps are built from the events as logged, so `map --events` on the
/// written log reproduces them byte for byte.
fn write_sensing(out: &Path, events: &[EventRecord], grid: &crate::raster::GridSpec) -> Result<()> {
    let events = read_events_csv(events_csv(events)?.as_bytes())?;
    let events = events.as_slice();
    let rasters = [
        (
            "strength_min.asc",
            Property::StrengthLowerBound,
            Aggregation::Min,
        ),
        (
            "strength_mean.asc",
            Property::StrengthMean,
            Aggregation::Mean,
        ),
        ("temperature.asc", Property::Temperature, Aggregation::Mean),
    ];
    for (name, property, aggregation) in rasters {
        write(
            out,
            name,
            &build_raster(events, grid, property, aggregation).to_ascii(),
        )?;
    }
    Ok(())
}

fn energy_lines(s: &mut String, label: &str, e: &EnergyBreakdown) {
    let _ = writeln!(s, "{label}_anchoring_j {}", fmt9(e.anchoring));
    let _ = writeln!(s, "{label}_extraction_j {}", fmt9(e.extraction));
    let _ = writeln!(s, "{label}_cutting_j {}", fmt9(e.cutting));
    let _ = writeln!(s, "{label}_pushing_j {}", fmt9(e.pushing));
    let _ = writeln!(s, "{label}_travel_j {}", fmt9(e.travel));
    let _ = writeln!(s, "{label}_total_j {}", fmt9(e.total));
    let eff = e.efficiency.map_or("none".into(), fmt9);
    let _ = writeln!(s, "{label}_efficiency {eff}");
}

fn violation_lines(s: &mut String, violations: &[Violation]) {
    let _ = writeln!(s, "violations {}", violations.len());
    for v in violations {
        let _ = writeln!(s, "violation pass {} {:?}: {}", v.pass, v.kind, v.message);
    }
}

struct DriveRun {
    mission: Mission,
    failure: Option<Error>,
}

/// Run a drive script; a stuck or flip event ends the script early.
fn drive(scenario: &Scenario, steps: &[DriveStep]) -> Result<DriveRun> {
    let site = scenario.site()?;
    let spec = scenario.vehicle().clone();
    let start = scenario.start(&site.terrain.spec);
    let state = VehicleState::new(&spec, (start.x, start.y), start.heading);
    let sensor = Sensor::new(scenario.sensor.clone(), scenario.seed);
    let mut mission = Mission::new(spec, state, site, scenario.params).with_sensor(sensor);
    let mut failure = None;
    for (i, step) in steps.iter().enumerate() {
        if let Err(e) = drive_step(&mut mission, step, i) {
            if exit_code(&e) == EXIT_RUNTIME {
                failure = Some(e);
                break;
            }
            return Err(e);
        }
    }
    Ok(DriveRun { mission, failure })
}

fn drive_step(m: &mut Mission, step: &DriveStep, index: usize) -> Result<()> {
    let toward = |m: &Mission, reference: RefPoint, kind: PassKind, to: (f64, f64)| Pass {
        kind,
        reference,
        ..Pass::travel(m.reference_point(reference), to)
    };
    match step {
        DriveStep::Stroke {
            count,
            travel,
            curvature,
            external_draft,
            selection,
        } => {
            let cmd = StrokeCommand {
                selection: selection.clone(),
                travel: *travel,
                external_draft: *external_draft,
                curvature: *curvature,
            };
            for _ in 0..*count {
                m.stroke(&cmd, false)?;
            }
        }
        DriveStep::Turn { heading } => {
            m.run_pass(&Pass::turn(m.pose(), *heading), index)?;
        }
        DriveStep::Goto {
            x,
            y,
            reference,
            external_draft,
        } => {
            let pass = Pass {
                external_draft: *external_draft,
                ..toward(m, *reference, PassKind::Travel, (*x, *y))
            };
            m.run_pass(&pass, index)?;
        }
        DriveStep::Rip { x, y, depth } => {
            let pass = Pass {
                depth: *depth,
                ..toward(m, RefPoint::RipperTine, PassKind::Rip, (*x, *y))
            };
            m.run_pass(&pass, index)?;
        }
        DriveStep::Doze { x, y, depth } => {
            let pass = Pass {
                depth: *depth,
                ..toward(m, RefPoint::BladeEdge, PassKind::Doze, (*x, *y))
            };
            m.run_pass(&pass, index)?;
        }
        DriveStep::Deposit => {
            let pass = Pass {
                kind: PassKind::Deposit,
                path: vec![m.pose()],
                ..Pass::travel((0.0, 0.0), (0.0, 0.0))
            };
            m.run_pass(&pass, index)?;
        }
    }
    Ok(())
}

fn plan_for(scenario: &Scenario, common: &Common) -> Result<(PassPlan, Site)> {
    let MissionSpec::Pad(p) = &scenario.mission else {
        return Err(Error::Config("scenario has no pad mission".into()));
    };
    let site = scenario.site()?;
    let opts = PlanOptions {
        force_depth_override: common.force_depth_override,
        start: Some(scenario.start(&site.terrain.spec)),
    };
    let plan = plan_pad(&p.pad, scenario.vehicle(), &site, &scenario.params, &opts)?;
    Ok((plan, site))
}

fn simulate(scenario: &Scenario, common: &Common, out: &Path) -> Result<(i32, String)> {
    match &scenario.mission {
        MissionSpec::Drive(script) => {
            let run = drive(scenario, &script.steps)?;
            let m = &run.mission;
            write(out, "trajectory.csv", &trajectory_csv(&m.trajectory)?)?;
            write(out, "energy.csv", &energy_csv(&m.records)?)?;
            write(out, "events.csv", &events_csv(&m.events)?)?;
            write_terrain(out, &m.site)?;
            write_sensing(out, &m.events, &m.site.terrain.spec)?;
            let mut s = String::new();
            let status = run
                .failure
                .as_ref()
                .map_or("ok".into(), |e| format!("failed: {e}"));
            let _ = writeln!(s, "status {status}");
            let _ = writeln!(s, "half_cycles {}", m.state.half_cycles);
            let _ = writeln!(s, "cycles {}", m.state.half_cycles / 2);
            let p = m.pose();
            let _ = writeln!(
                s,
                "final_pose {} {} {}",
                fmt9(p.x),
                fmt9(p.y),
                fmt9(p.heading)
            );
            let _ = writeln!(s, "events {}", m.events.len());
            energy_lines(
                &mut s,
                "executed",
                &EnergyBreakdown::from_records(&m.records),
            );
            write(out, "report.txt", &s)?;
            let code = if run.failure.is_some() {
                EXIT_RUNTIME
            } else {
                EXIT_OK
            };
            Ok((code, s))
        }
        MissionSpec::Pad(_) => {
            let (plan, site) = plan_for(scenario, common)?;
            let sensor = Sensor::new(scenario.sensor.clone(), scenario.seed);
            let run = execute_plan(
                &plan,
                scenario.vehicle(),
                &site,
                &scenario.params,
                Some(sensor),
            );
            write(out, "plan.txt", &plan.to_text()?)?;
            write(out, "trajectory.csv", &trajectory_csv(&run.trajectory)?)?;
            write(out, "energy.csv", &energy_csv(&run.records)?)?;
            write(out, "events.csv", &events_csv(&run.events)?)?;
            write_terrain(out, &run.site)?;
            write_sensing(out, &run.events, &run.site.terrain.spec)?;
            let r = &run.report;
            write(
                out,
                "achieved_depth.asc",
                &write_ascii(&r.grid, &r.achieved_depth),
            )?;
            let mut s = String::new();
            energy_lines(&mut s, "predicted", &plan.predicted_energy);
            pad_report(&mut s, r);
            write(out, "report.txt", &s)?;
            let code = if r.failure.is_some() {
                EXIT_RUNTIME
            } else {
                EXIT_OK
            };
            Ok((code, s))
        }
    }
}

fn pad_report(s: &mut String, r: &MissionReport) {
    let status = r.failure.as_ref().map_or("ok".into(), |f| {
        format!(
            "failed at pass {} half-cycle {}: {}",
            f.pass, f.half_cycle, f.reason
        )
    });
    let _ = writeln!(s, "status {status}");
    let _ = writeln!(s, "passes_completed {}", r.passes_completed);
    let _ = writeln!(s, "half_cycles {}", r.half_cycles);
    let _ = writeln!(s, "cycles {}", r.cycles);
    energy_lines(s, "executed", &r.energy);
    let a = &r.audit;
    let _ = writeln!(s, "target_depth_m {}", fmt9(r.target_depth));
    let _ = writeln!(
        s,
        "depth_within_tolerance {}",
        fmt9(r.depth_within_tolerance)
    );
    let _ = writeln!(s, "max_loose_slope_deg {}", fmt9(r.max_loose_slope));
    let _ = writeln!(s, "excavated_bank_m3 {}", fmt9(a.excavated));
    let _ = writeln!(s, "excavated_in_pad_bank_m3 {}", fmt9(a.excavated_in_pad));
    let _ = writeln!(s, "berm_bank_m3 {}", fmt9(a.berm));
    let _ = writeln!(s, "pad_residual_bank_m3 {}", fmt9(a.pad_residual));
    let _ = writeln!(s, "on_blade_bank_m3 {}", fmt9(a.on_blade));
    let _ = writeln!(s, "audit_relative_error {}", fmt9(a.relative_error));
    let _ = writeln!(s, "closure_error {}", fmt9(a.closure_error));
    let _ = writeln!(s, "berm_profile inner_m outer_m mean_height_m max_height_m");
    for b in &r.berm_profile {
        let _ = writeln!(
            s,
            "berm {} {} {} {}",
            fmt9(b.inner),
            fmt9(b.outer),
            fmt9(b.mean_height),
            fmt9(b.max_height)
        );
    }
    violation_lines(s, &r.violations);
}

fn plan(scenario: &Scenario, common: &Common, out: &Path) -> Result<(i32, String)> {
    let (plan, site) = plan_for(scenario, common)?;
    write(out, "plan.txt", &plan.to_text()?)?;
    let mut s = String::new();
    let _ = writeln!(s, "passes {}", plan.passes.len());
    let _ = writeln!(s, "layers {}", plan.layer_floors.len());
    let limit = plan.load_limit.map_or("none".into(), fmt9);
    let _ = writeln!(s, "blade_load_limit_m3 {limit}");
    energy_lines(&mut s, "predicted", &plan.predicted_energy);
    violation_lines(&mut s, &validate_plan(&plan, scenario.vehicle(), &site));
    write(out, "report.txt", &s)?;
    Ok((EXIT_OK, s))
}

fn map(
    scenario: &Scenario,
    common: &Common,
    events: Option<&Path>,
    out: &Path,
) -> Result<(i32, String)> {
    let (events, grid) = match events {
        Some(p) => {
            let f =
                fs::File::open(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            (read_events_csv(f)?, scenario.terrain()?.spec)
        }
        None => {
            let steps = match &scenario.mission {
                MissionSpec::Drive(d) => d.steps.clone(),
                MissionSpec::Pad(_) => {
                    let (plan, site) = plan_for(scenario, common)?;
                    let sensor = Sensor::new(scenario.sensor.clone(), scenario.seed);
                    let run = execute_plan(
                        &plan,
                        scenario.vehicle(),
                        &site,
                        &scenario.params,
                        Some(sensor),
                    );
                    return finish_map(out, &run.events, &site.terrain.spec);
                }
            };
            let run = drive(scenario, &steps)?;
            (run.mission.events, run.mission.site.terrain.spec)
        }
    };
    finish_map(out, &events, &grid)
}

fn finish_map(
    out: &Path,
    events: &[EventRecord],
    grid: &crate::raster::GridSpec,
) -> Result<(i32, String)> {
    write_sensing(out, events, grid)?;
    let covered = events
        .iter()
        .filter(|e| grid.cell_of(e.x, e.y).is_some())
        .count();
    let s = format!("events {}\nevents_on_grid {covered}\n", events.len());
    Ok((EXIT_OK, s))
}

/// Pull/weight, anchoring and efficiency figures for the scenario's vehicle
/// and soil.
pub fn checks_table(vehicle: &VehicleSpec, soil: &SoilProfile) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "# pull/weight over thrust angle (safety factor 2)");
    let _ = writeln!(s, "beta_deg tan_beta pull_weight operational");
    for beta in (1..=9).map(|k| 5.0 * k as f64) {
        let r = pull_weight_ratio(beta)?;
        let _ = writeln!(
            s,
            "{} {} {} {}",
            fmt9(beta),
            fmt9(beta.to_radians().tan()),
            fmt9(r),
            fmt9(r / 2.0)
        );
    }
    let g = &vehicle.front_spikes[0].geometry;
    let _ = writeln!(s, "# thrust angle of {} spikes", vehicle.name);
    let _ = writeln!(s, "depth_m beta_deg");
    for d in [0.0, 0.5 * g.max_depth, g.max_depth] {
        let _ = writeln!(s, "{} {}", fmt9(d), fmt9(g.thrust_angle(d)?));
    }
    let _ = writeln!(s, "# anchoring work on {} soil", soil.name);
    let _ = writeln!(s, "draft_n anchoring_j slip_m");
    for f in [0.0, 100.0, 200.0, 300.0, 400.0, 600.0] {
        let _ = writeln!(
            s,
            "{} {} {}",
            fmt9(f),
            fmt9(anchoring_work(f, soil)),
            fmt9(anchoring_slip(f, soil))
        );
    }
    let _ = writeln!(
        s,
        "# tractive efficiency, 2 m advance against 300 N, field vehicle"
    );
    let _ = writeln!(
        s,
        "extraction_ratio useful_j anchoring_j extraction_j efficiency"
    );
    for ratio in [0.0, 0.5] {
        let rec = push_test(soil, ratio)?;
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            fmt9(ratio),
            fmt9(rec.useful_work),
            fmt9(rec.anchoring_work),
            fmt9(rec.extraction_work),
            fmt9(tractive_efficiency(&rec)?)
        );
    }
    let _ = writeln!(s, "# friction traction pull per kg");
    let _ = writeln!(s, "environment coefficient pull_n_per_kg");
    for (env, coeff) in [(Environment::earth(), 0.4), (Environment::moon(), 0.21)] {
        let _ = writeln!(
            s,
            "{} {} {}",
            env.name,
            fmt9(coeff),
            fmt9(friction_baseline(1.0, &env, coeff))
        );
    }
    Ok(s)
}

/// One expanding half-cycle of the field vehicle pulling 300 N for 2 m.
fn push_test(soil: &SoilProfile, extraction_ratio: f64) -> Result<CycleRecord> {
    let spec = VehicleSpec::field();
    let mut site = Site {
        terrain: crate::earthworks::TerrainGrid::flat(
            crate::raster::GridSpec::centered((0.0, 0.0), 12.0, 0.25)?,
            0.0,
            1.3,
        )?,
        soils: crate::soil::SoilMap::uniform(soil.clone()),
        env: Environment::earth(),
    };
    let params = SimParams {
        rolling_resistance: 0.0,
        extraction_ratio,
        ..Default::default()
    };
    let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
    let draft = 300.0;
    let cmd = StrokeCommand {
        external_draft: draft,
        travel: Some(2.0 + anchoring_slip(draft, soil)),
        ..Default::default()
    };
    Ok(half_cycle(&mut state, &spec, &mut site, &cmd, None, &params)?.record)
}

fn report(scenario: &Scenario, out: &Path) -> Result<(i32, String)> {
    let s = checks_table(scenario.vehicle(), &scenario.soil.0)?;
    write(out, "report.txt", &s)?;
    Ok((EXIT_OK, s))
}
