//! Anchoring work against draft, and the tractive efficiency of a 2 m
//! advance against 300 N with and without extraction losses.

use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{
    half_cycle, SimParams, Site, StrokeCommand, VehicleSpec, VehicleState,
};
use interlock::raster::GridSpec;
use interlock::soil::{Environment, SoilMap, SoilProfile};
use interlock::traction::{anchoring_slip, anchoring_work, tractive_efficiency};

fn main() -> interlock::Result<()> {
    let soil = SoilProfile::soft();
    println!("{:>8} {:>10} {:>8}", "draft N", "work J", "slip m");
    for f in [50.0, 100.0, 200.0, 300.0, 600.0] {
        println!(
            "{f:>8.0} {:>10.2} {:>8.3}",
            anchoring_work(f, &soil),
            anchoring_slip(f, &soil)
        );
    }

    let spec = VehicleSpec::field();
    for extraction_ratio in [0.0, 0.5] {
        let mut site = Site {
            terrain: TerrainGrid::flat(GridSpec::centered((0.0, 0.0), 12.0, 0.25)?, 0.0, 1.3)?,
            soils: SoilMap::uniform(soil.clone()),
            env: Environment::earth(),
        };
        let params = SimParams {
            rolling_resistance: 0.0,
            extraction_ratio,
            ..Default::default()
        };
        let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
        let cmd = StrokeCommand {
            external_draft: 300.0,
            travel: Some(2.0 + anchoring_slip(300.0, &soil)),
            ..Default::default()
        };
        let rec = half_cycle(&mut state, &spec, &mut site, &cmd, None, &params)?.record;
        println!(
            "extraction ratio {extraction_ratio}: useful {:.1} J, anchoring {:.1} J, extraction {:.1} J, efficiency {:.3}",
            rec.useful_work,
            rec.anchoring_work,
            rec.extraction_work,
            tractive_efficiency(&rec)?
        );
    }
    Ok(())
}
