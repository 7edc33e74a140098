//! Reverse the reference vehicle's heading by pivoting about single
//! off-axis anchors.

use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{turn_in_place, SimParams, Site, VehicleSpec, VehicleState};
use interlock::raster::GridSpec;
use interlock::soil::{Environment, SoilMap, SoilProfile};

fn main() -> interlock::Result<()> {
    let spec = VehicleSpec::reference();
    let mut site = Site {
        terrain: TerrainGrid::flat(GridSpec::centered((0.0, 0.0), 10.0, 0.25)?, 0.0, 1.3)?,
        soils: SoilMap::uniform(SoilProfile::soft()),
        env: Environment::earth(),
    };
    let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
    let start = state.pose();
    let turn = turn_in_place(&mut state, 180.0, &spec, &mut site, &SimParams::default())?;
    for o in &turn.half_cycles {
        println!(
            "half-cycle {:>2} {:?}: anchors {:?}",
            o.record.half_cycle, o.phase, o.anchored
        );
    }
    let end = state.pose();
    println!(
        "heading {:.1}° -> {:.1}° in {} push-pull cycles, drift {:.3} m",
        start.heading,
        end.heading,
        turn.cycles,
        (end.x - start.x).hypot(end.y - start.y)
    );
    Ok(())
}
