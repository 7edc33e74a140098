//! Run the command-line front end in-process on a scenario file.
//!
//! `cargo run --example run_scenario -- scenarios/reference_drive.json [out]`

fn main() {
    let mut args = std::env::args().skip(1);
    let scenario = args
        .next()
        .unwrap_or_else(|| "scenarios/reference_drive.json".into());
    let out = args.next().unwrap_or_else(|| "out/run_scenario".into());
    let code = interlock::cli::main_with([
        "interlock",
        "simulate",
        "--scenario",
        &scenario,
        "--out",
        &out,
    ]);
    std::process::exit(code);
}
