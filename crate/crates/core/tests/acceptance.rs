//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one PASS/FAIL line; the process fails if any criterion fails.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

use interlock::cli::Cli;
use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{
    half_cycle, traverse_check, turn_in_place, SimParams, Site, StrokeCommand, VehicleSpec,
    VehicleState,
};
use interlock::mission::Mission;
use interlock::planner::{Pass, RefPoint};
use interlock::raster::GridSpec;
use interlock::sensing::{build_raster, Aggregation, EventRecord, Property, Sensor, SensorConfig};
use interlock::soil::{Duricrust, Environment, SoilMap, SoilPatch, SoilProfile};
use interlock::traction::{
    anchoring_slip, anchoring_work, flip_margin, friction_baseline, pull_weight_ratio,
    tractive_efficiency, SpikeGeometry,
};

type Outcome = Result<String, String>;

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn flat_site(env: Environment, soils: SoilMap, extent: f64) -> Result<Site, String> {
    Ok(Site {
        terrain: TerrainGrid::flat(
            GridSpec::centered((0.0, 0.0), extent, 0.25).map_err(err)?,
            0.0,
            1.3,
        )
        .map_err(err)?,
        soils,
        env,
    })
}

fn pull_weight() -> Outcome {
    let r = pull_weight_ratio(30.0).map_err(err)?;
    let operational = r / 2.0;
    let rel = (operational - 0.85).abs() / 0.85;
    verdict(
        (r - 1.7321).abs() <= 1e-4 && rel <= 0.02,
        format!(
            "ratio(30°) = {r:.6}, operational {operational:.4} vs 0.85 ({:.2}% off)",
            100.0 * rel
        ),
    )
}

fn beta_endpoints() -> Outcome {
    let g = SpikeGeometry::reference();
    let (b0, b1) = (
        g.thrust_angle(0.0).map_err(err)?,
        g.thrust_angle(0.20).map_err(err)?,
    );
    verdict(
        (b0 - 10.0).abs() <= 0.1 && (b1 - 30.0).abs() <= 0.1,
        format!("β(0) = {b0:.6}°, β(0.20) = {b1:.6}°"),
    )
}

fn anchoring_energy() -> Outcome {
    let soft = SoilProfile::soft();
    let w = anchoring_work(300.0, &soft);
    let linear = [0.5, 2.0, 10.0]
        .iter()
        .all(|&a| anchoring_work(a * 300.0, &soft) == a * w);
    verdict(
        (w - 30.0).abs() <= 0.5 && linear,
        format!("W(300 N) = {w} J, exact linearity over a ∈ {{0.5, 2, 10}}: {linear}"),
    )
}

/// One field-vehicle stroke pulling 300 N over a 2 m advance on soft soil.
fn push_efficiency(extraction_ratio: f64) -> Result<f64, String> {
    let spec = VehicleSpec::field();
    let soft = SoilProfile::soft();
    let mut site = flat_site(Environment::earth(), SoilMap::uniform(soft.clone()), 12.0)?;
    let params = SimParams {
        rolling_resistance: 0.0,
        extraction_ratio,
        ..Default::default()
    };
    let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
    let cmd = StrokeCommand {
        external_draft: 300.0,
        travel: Some(2.0 + anchoring_slip(300.0, &soft)),
        ..Default::default()
    };
    let o = half_cycle(&mut state, &spec, &mut site, &cmd, None, &params).map_err(err)?;
    if (o.record.stroke_advance - 2.0).abs() > 1e-9 {
        return Err(format!(
            "advance {} m instead of 2 m",
            o.record.stroke_advance
        ));
    }
    tractive_efficiency(&o.record).map_err(err)
}

fn efficiency() -> Outcome {
    let e0 = push_efficiency(0.0)?;
    let e1 = push_efficiency(0.5)?;
    verdict(
        (e0 - 0.952).abs() <= 0.005 && e1 < e0,
        format!("η(ε=0) = {e0:.6}, η(ε=0.5) = {e1:.6}"),
    )
}

fn turn() -> Outcome {
    let spec = VehicleSpec::reference();
    let mut site = flat_site(
        Environment::earth(),
        SoilMap::uniform(SoilProfile::soft()),
        12.0,
    )?;
    let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
    let t =
        turn_in_place(&mut state, 180.0, &spec, &mut site, &SimParams::default()).map_err(err)?;
    let drift = t
        .half_cycles
        .iter()
        .map(|o| o.anchor_drift)
        .fold(0.0, f64::max);
    let err_deg = interlock::locomotion::wrap_degrees(state.heading - 180.0).abs();
    verdict(
        t.cycles <= 3 && drift < 1e-9 && err_deg < SimParams::default().heading_tolerance,
        format!(
            "180° in {} cycles (heading error {err_deg:.3}°), anchored drift {drift:.1e} m",
            t.cycles
        ),
    )
}

fn gravity() -> Outcome {
    let spec = VehicleSpec::reference();
    let beta: f64 = 30.0;
    // draft at which the flip margin vanishes, per unit weight
    let ratios: Vec<f64> = [
        Environment::earth(),
        Environment::moon(),
        Environment::mars(),
    ]
    .iter()
    .map(|env| {
        let w = env.weight(spec.mass);
        let limit = w / beta.to_radians().tan();
        assert!(flip_margin(0.5 * limit, beta, w).stable);
        limit / w
    })
    .collect();
    let invariant = ratios.iter().all(|&r| r == ratios[0]);
    let (earth, moon) = (Environment::earth(), Environment::moon());
    let ratio = friction_baseline(1.0, &earth, 0.4) / friction_baseline(1.0, &moon, 0.4);
    let (e, m) = (
        friction_baseline(1.0, &earth, 0.4),
        friction_baseline(1.0, &moon, 0.21),
    );
    let rounded = |v: f64, places: i32| {
        let s = 10f64.powi(places);
        (v * s).round() / s
    };
    verdict(
        invariant && (ratio - 6.0).abs() <= 1e-9 && rounded(e, 2) == 3.92 && rounded(m, 3) == 0.343,
        format!(
            "pull/weight {:?}, Earth/Moon friction {ratio}, {e:.4} N/kg and {m:.5} N/kg",
            ratios
        ),
    )
}

/// Run the CLI in-process without echoing reports; returns the exit code.
fn run_cli(args: &[&str]) -> i32 {
    let cli = Cli::try_parse_from(std::iter::once("interlock").chain(args.iter().copied()))
        .expect("valid arguments");
    interlock::cli::run(&cli.command)
        .iter()
        .map(|o| o.code)
        .max()
        .unwrap_or(0)
}

fn report_values(path: &Path) -> Result<BTreeMap<String, f64>, String> {
    let text = std::fs::read_to_string(path).map_err(err)?;
    Ok(text
        .lines()
        .filter_map(|l| {
            let mut it = l.split_whitespace();
            let (k, v) = (it.next()?, it.next()?);
            Some((k.to_string(), v.parse().ok()?))
        })
        .collect())
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
}

fn mass_conservation() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let out = dir.path().join("pad");
    let t0 = Instant::now();
    let code = run_cli(&[
        "simulate",
        "--scenario",
        scenario("landing_pad_20m.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let secs = t0.elapsed().as_secs_f64();
    if code != 0 {
        return Err(format!("simulate exited {code}"));
    }
    let r = report_values(&out.join("report.txt"))?;
    let get = |k: &str| r.get(k).copied().ok_or_else(|| format!("report lacks {k}"));
    let audit = get("audit_relative_error")?;
    let excavated = get("excavated_in_pad_bank_m3")?;
    let analytic = std::f64::consts::PI * 20.0 * 20.0 * 0.4;
    let rel = (excavated - analytic).abs() / analytic;
    verdict(
        audit < 1e-9 && rel <= 0.02 && secs < 60.0,
        format!(
            "audit {audit:.1e}, excavated {excavated:.2} m³ vs {analytic:.2} m³ ({:.2}% off), plan and run {secs:.1} s",
            100.0 * rel
        ),
    )
}

fn slopes() -> Outcome {
    let spec = VehicleSpec::reference();
    let env = Environment::moon();
    let mut soil = SoilProfile::soft();
    soil.repose_angle = 41.0;
    let loaded = traverse_check(20.0, true, &soil, &spec, &env);
    let unloaded = traverse_check(41.0, false, &soil, &spec, &env);

    let grid = GridSpec::centered((0.0, 0.0), 8.0, 0.1).map_err(err)?;
    let mut t = TerrainGrid::flat(grid, 0.0, 1.3).map_err(err)?;
    let centre = grid.cell_of(0.0, 0.0).ok_or("centre off grid")?;
    t.add_loose(centre, 1.5);
    t.repose_relax(&[centre], 41.0);
    let worst = t.max_loose_slope();
    verdict(
        loaded.pass && unloaded.pass && worst <= 41.5,
        format!(
            "20° loaded {}, 41° unloaded {}, steepest relaxed slope {worst:.3}°",
            loaded.pass, unloaded.pass
        ),
    )
}

fn duricrust() -> Outcome {
    let attempt = |actuator: bool| -> Result<(bool, f64), String> {
        let mut spec = VehicleSpec::reference();
        spec.weight_transfer_actuator = actuator;
        let crust = Duricrust {
            strength: 1.0e6,
            thickness: 0.02,
        };
        let soils = SoilMap::uniform(SoilProfile::soft().with_duricrust(crust));
        let mut site = flat_site(Environment::earth(), soils, 10.0)?;
        let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
        let before = state.pose();
        let cmd = StrokeCommand {
            external_draft: 300.0,
            ..Default::default()
        };
        let o = half_cycle(
            &mut state,
            &spec,
            &mut site,
            &cmd,
            None,
            &SimParams::default(),
        )
        .map_err(err)?;
        let after = state.pose();
        Ok((
            o.record.stuck,
            (after.x - before.x).hypot(after.y - before.y),
        ))
    };
    let fw = SpikeGeometry::reference().spike_weight_force;
    let (stuck, moved) = attempt(false)?;
    let (stuck_with, moved_with) = attempt(true)?;
    verdict(
        fw == 7.0 && stuck && moved == 0.0 && !stuck_with && moved_with > 0.0,
        format!(
            "F_w {fw} N: stuck {stuck} after {moved} m; with actuator stuck {stuck_with} after {moved_with:.3} m"
        ),
    )
}

/// Cell values recomputed by scanning the whole log once per cell.
fn brute_force(events: &[EventRecord], grid: &GridSpec) -> Vec<(Option<f64>, Option<f64>)> {
    (0..grid.len())
        .map(|cell| {
            let mut min: Option<f64> = None;
            let (mut sum, mut n) = (0.0, 0usize);
            for e in events {
                if grid.cell_of(e.x, e.y) != Some(cell) {
                    continue;
                }
                if let Some(v) = e.min_q {
                    min = Some(match min {
                        Some(m) if m <= v => m,
                        _ => v,
                    });
                }
                if let Some(v) = e.mean_q {
                    sum += v;
                    n += 1;
                }
            }
            (min, (n > 0).then(|| sum / n as f64))
        })
        .collect()
}

fn sensing() -> Outcome {
    let grid = GridSpec::centered((0.0, 0.0), 12.0, 0.5).map_err(err)?;
    let soils = SoilMap {
        base: SoilProfile::soft(),
        patches: vec![SoilPatch {
            center: (1.0, 0.0),
            radius: 1.5,
            profile: SoilProfile::medium(),
        }],
    };
    let site = flat_site(Environment::moon(), soils, 12.0)?;
    let spec = VehicleSpec::reference();
    let config = SensorConfig {
        noise_half_width: 0.3,
        ..Default::default()
    };
    let state = VehicleState::new(&spec, (-4.0, 0.0), 0.0);
    let mut m =
        Mission::new(spec, state, site, SimParams::default()).with_sensor(Sensor::new(config, 5));
    let pass = Pass {
        reference: RefPoint::Pose,
        ..Pass::travel((-4.0, 0.0), (4.0, 0.0))
    };
    m.run_pass(&pass, 0).map_err(err)?;
    let lower = build_raster(
        &m.events,
        &grid,
        Property::StrengthLowerBound,
        Aggregation::Min,
    );
    let mean = build_raster(&m.events, &grid, Property::StrengthMean, Aggregation::Mean);
    let oracle = brute_force(&m.events, &grid);
    let bits = |v: Option<f64>| v.map(f64::to_bits);
    let exact = (0..grid.len()).all(|i| {
        bits(lower.values[i]) == bits(oracle[i].0) && bits(mean.values[i]) == bits(oracle[i].1)
    });
    let ordered = (0..grid.len()).all(|i| match (lower.values[i], mean.values[i]) {
        (Some(a), Some(b)) => a <= b,
        _ => true,
    });
    let mapped = lower.values.iter().filter(|v| v.is_some()).count();
    verdict(
        exact && ordered && mapped > 0,
        format!(
            "{} events over {mapped} cells: bit-exact {exact}, min ≤ mean {ordered}",
            m.events.len()
        ),
    )
}

fn artifacts(dir: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(err)? {
            let p = entry.map_err(err)?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).map_err(err)?.to_path_buf();
                out.insert(rel, std::fs::read(&p).map_err(err)?);
            }
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut names: Vec<String> = std::fs::read_dir(scenario(""))
        .map_err(err)?
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    let mut files = 0;
    for name in &names {
        let path = scenario(name);
        let mut sets = Vec::new();
        for run in ["a", "b"] {
            let out = dir.path().join(run).join(name);
            let code = run_cli(&[
                "simulate",
                "--scenario",
                path.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--seed",
                "42",
            ]);
            if code == 1 {
                return Err(format!("{name}: simulate rejected the scenario"));
            }
            sets.push((code, artifacts(&out)?));
        }
        if sets[0] != sets[1] {
            return Err(format!("{name}: artifact sets differ"));
        }
        files += sets[0].1.len();
    }
    verdict(
        !names.is_empty(),
        format!(
            "{} scenarios, {files} artifacts byte-identical across runs",
            names.len()
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        ("pull/weight ratio", pull_weight),
        ("thrust angle endpoints", beta_endpoints),
        ("anchoring energy", anchoring_energy),
        ("tractive efficiency", efficiency),
        ("turn in place", turn),
        ("gravity scaling", gravity),
        ("pad volume audit", mass_conservation),
        ("slope limits", slopes),
        ("duricrust recovery", duricrust),
        ("sensing rasters", sensing),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let outcome = check();
        let ms = t0.elapsed().as_secs_f64() * 1e3;
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{ms:.0} ms]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail} [{ms:.0} ms]", i + 1);
            }
        }
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
