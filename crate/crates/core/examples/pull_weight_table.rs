//! Pull/weight ratio of an interlocking spike over thrust angle, and the
//! thrust angle of the reference spike as it sinks.

use interlock::traction::{pull_weight_ratio, SpikeGeometry};

fn main() -> interlock::Result<()> {
    println!("{:>6} {:>10} {:>12}", "beta", "pull/W", "with SF 2");
    for beta in [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 40.0] {
        let r = pull_weight_ratio(beta)?;
        println!("{beta:>6.1} {r:>10.4} {:>12.4}", r / 2.0);
    }

    let spike = SpikeGeometry::reference();
    let doubled = spike.with_lever_scale(2.0);
    println!("\n{:>8} {:>10} {:>14}", "depth", "beta", "beta (2x arm)");
    for i in 0..=4 {
        let d = 0.05 * i as f64;
        println!(
            "{d:>8.2} {:>10.3} {:>14.3}",
            spike.thrust_angle(d)?,
            doubled.thrust_angle(d)?
        );
    }
    Ok(())
}
