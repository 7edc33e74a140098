//! A crusted surface the spikes cannot break under their own weight: the
//! vehicle sticks, then frees itself once weight is transferred onto the
//! spikes.

use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{
    half_cycle, SimParams, Site, StrokeCommand, VehicleSpec, VehicleState,
};
use interlock::raster::GridSpec;
use interlock::soil::{Duricrust, Environment, SoilMap, SoilProfile};

fn attempt(actuator: bool) -> interlock::Result<()> {
    let mut spec = VehicleSpec::reference();
    spec.weight_transfer_actuator = actuator;
    let crust = Duricrust {
        strength: 1.0e6,
        thickness: 0.02,
    };
    let mut site = Site {
        terrain: TerrainGrid::flat(GridSpec::centered((0.0, 0.0), 10.0, 0.25)?, 0.0, 1.3)?,
        soils: SoilMap::uniform(SoilProfile::soft().with_duricrust(crust)),
        env: Environment::earth(),
    };
    let mut state = VehicleState::new(&spec, (0.0, 0.0), 0.0);
    // more draft than surface friction alone can react
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
    )?;
    println!(
        "actuator {actuator}: stuck {}, advance {:.3} m, anchored spikes {}",
        o.record.stuck,
        o.record.stroke_advance,
        o.anchored.len()
    );
    Ok(())
}

fn main() -> interlock::Result<()> {
    attempt(false)?;
    attempt(true)
}
