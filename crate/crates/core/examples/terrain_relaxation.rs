//! Drop a heap of loose spoil and let it slump to the angle of repose,
//! checking that no volume is created or lost.

use interlock::earthworks::TerrainGrid;
use interlock::raster::GridSpec;

fn main() -> interlock::Result<()> {
    let grid = GridSpec::centered((0.0, 0.0), 8.0, 0.1)?;
    let mut t = TerrainGrid::flat(grid, 0.0, 1.3)?;
    let repose = 35.0;
    let before = t.bank_equivalent_volume();
    let centre = grid.cell_of(0.0, 0.0).expect("centre on grid");
    t.add_loose(centre, 1.5);
    let heap = t.bank_equivalent_volume();
    println!(
        "heap of {:.4} m³ bank-equivalent, steepest slope {:.1}°",
        heap - before,
        t.max_loose_slope()
    );

    let moved = t.repose_relax(&[centre], repose);
    println!(
        "moved {moved:.4} m³ loose; steepest slope now {:.2}° (repose {repose}°)",
        t.max_loose_slope()
    );
    println!("volume drift {:.1e} m³", t.bank_equivalent_volume() - heap);

    Ok(())
}
