//! Runs a scenario file (default: the mixed fleet fixture) and prints a summary.

use std::path::PathBuf;

use uavpki::simnet::{run_scenario, Scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/fleet_mixed.json"));
    let report = run_scenario(&Scenario::load(&path)?)?;
    for a in &report.attempts {
        let mark = if a.matched() { "ok " } else { "BAD" };
        println!(
            "{mark} {} -> {} at {}: {}",
            a.initiator, a.responder, a.started, a.outcome
        );
    }
    for u in &report.uavs {
        println!(
            "{}: bundle {} bytes, {} messages sent",
            u.name, u.bundle_bytes, u.messages_sent
        );
    }
    println!(
        "final height {} tick {} digest {}",
        report.final_height, report.final_tick, report.digest
    );
    Ok(())
}
