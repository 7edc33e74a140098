//! Drive the reference vehicle across ground with a hard patch, log every
//! spike penetration, and map strength and temperature from the log.

use interlock::earthworks::TerrainGrid;
use interlock::locomotion::{SimParams, Site, VehicleSpec, VehicleState};
use interlock::mission::Mission;
use interlock::planner::{Pass, RefPoint};
use interlock::raster::GridSpec;
use interlock::sensing::{
    build_raster, Aggregation, Property, Sensor, SensorConfig, TemperatureField,
};
use interlock::soil::{Environment, SoilMap, SoilPatch, SoilProfile};

fn main() -> interlock::Result<()> {
    let grid = GridSpec::centered((0.0, 0.0), 12.0, 0.5)?;
    let soils = SoilMap {
        base: SoilProfile::soft(),
        patches: vec![SoilPatch {
            center: (1.0, 0.0),
            radius: 1.5,
            profile: SoilProfile::medium(),
        }],
    };
    let site = Site {
        terrain: TerrainGrid::flat(grid, 0.0, 1.3)?,
        soils,
        env: Environment::moon(),
    };
    let spec = VehicleSpec::reference();
    let config = SensorConfig {
        noise_half_width: 0.3,
        temperature: TemperatureField::Linear {
            base: 240.0,
            gx: 0.5,
            gy: 0.0,
            gz: 10.0,
        },
        ..Default::default()
    };
    let state = VehicleState::new(&spec, (-4.0, 0.0), 0.0);
    let mut m =
        Mission::new(spec, state, site, SimParams::default()).with_sensor(Sensor::new(config, 11));
    let pass = Pass {
        reference: RefPoint::Pose,
        ..Pass::travel((-4.0, 0.0), (4.0, 0.0))
    };
    m.run_pass(&pass, 0)?;
    println!("{} penetration events", m.events.len());

    let lower = build_raster(
        &m.events,
        &grid,
        Property::StrengthLowerBound,
        Aggregation::Min,
    );
    let temp = build_raster(&m.events, &grid, Property::Temperature, Aggregation::Mean);
    let row = grid
        .cell_of(0.0, 0.7)
        .map(|i| grid.col_row(i).1)
        .expect("row on grid");
    println!("{:>6} {:>12} {:>9}", "x", "q min kPa", "T K");
    for c in 0..grid.cols {
        let i = grid.index(c, row);
        if let (Some(q), Some(t)) = (lower.values[i], temp.values[i]) {
            println!("{:>6.2} {:>12.0} {:>9.2}", grid.center(i).0, q / 1e3, t);
        }
    }
    Ok(())
}
