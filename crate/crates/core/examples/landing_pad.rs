//! Plan, validate and execute a lunar landing pad with the field vehicle.
//!
//! `cargo run --release --example landing_pad -- [radius] [depth]`

use std::time::Instant;

use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{SimParams, Site, VehicleSpec};
use interlock::planner::{execute_plan, plan_pad, validate_plan, PadSpec, PlanOptions};
use interlock::raster::GridSpec;
use interlock::soil::{Environment, SoilMap, SoilProfile};

fn main() -> interlock::Result<()> {
    let mut args = std::env::args().skip(1);
    let radius: f64 = args.next().map_or(Ok(5.0), |s| s.parse()).expect("radius");
    let depth: f64 = args.next().map_or(Ok(0.4), |s| s.parse()).expect("depth");

    let extent = 2.0 * (radius + 15.0);
    let site = Site {
        terrain: TerrainGrid::flat(GridSpec::centered((0.0, 0.0), extent, 0.25)?, 0.0, 1.3)?,
        soils: SoilMap::uniform(SoilProfile::soft()),
        env: Environment::moon(),
    };
    let vehicle = VehicleSpec::field();
    let params = SimParams::default();
    let pad = PadSpec::new((0.0, 0.0), radius, depth);
    let opts = PlanOptions {
        force_depth_override: true,
        ..Default::default()
    };

    let t = Instant::now();
    let plan = plan_pad(&pad, &vehicle, &site, &params, &opts)?;
    println!(
        "planned {} passes over {} layers in {:.2?}",
        plan.passes.len(),
        plan.layer_floors.len(),
        t.elapsed()
    );
    let e = plan.predicted_energy;
    println!(
        "predicted: anchoring {:.0} J, extraction {:.0} J, cutting {:.0} J, pushing {:.0} J, travel {:.0} J",
        e.anchoring, e.extraction, e.cutting, e.pushing, e.travel
    );
    println!(
        "violations: {}",
        validate_plan(&plan, &vehicle, &site).len()
    );

    let t = Instant::now();
    let run = execute_plan(&plan, &vehicle, &site, &params, None);
    let r = &run.report;
    println!(
        "executed in {:.2?}: {} push-pull cycles",
        t.elapsed(),
        r.cycles
    );
    if let Some(f) = &r.failure {
        println!("FAILED at pass {}: {}", f.pass, f.reason);
    }
    let analytic = std::f64::consts::PI * radius * radius * depth;
    println!(
        "excavated in pad {:.2} m³ (analytic {:.2} m³), residual loose {:.3} m³",
        r.audit.excavated_in_pad, analytic, r.audit.pad_residual
    );
    println!(
        "audit error {:.1e}, closure error {:.1e}",
        r.audit.relative_error, r.audit.closure_error
    );
    println!(
        "depth within tolerance over {:.1}% of the pad; steepest loose slope {:.2}°",
        100.0 * r.depth_within_tolerance,
        r.max_loose_slope
    );
    let crest = r
        .berm_profile
        .iter()
        .map(|b| b.max_height)
        .fold(0.0, f64::max);
    println!("berm crest {crest:.2} m");
    Ok(())
}
