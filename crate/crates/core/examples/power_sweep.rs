// Capacity versus average power for the three causal heuristics.

use secrecy_alloc::sim::{sweep, SimSettings};
use secrecy_alloc::{GainDistribution, PolicyId, Result};

pub fn run_example() -> Result<()> {
    let dist = GainDistribution::exponential(1.0, 0.5)?;
    let policies = [
        PolicyId::LowSnr,
        PolicyId::Intermediate,
        PolicyId::HighSnr,
        PolicyId::WaterfillAcausal,
    ];
    let powers = [0.01, 0.1, 1.0, 10.0, 100.0];
    let rows = sweep(
        &policies,
        &dist,
        &SimSettings::new(6, 1.0, 10_000, 3),
        &powers,
    )?;
    print!("{:>8}", "P");
    for id in &policies {
        print!(" {:>18}", id.as_str());
    }
    println!();
    for chunk in rows.chunks(policies.len()) {
        print!("{:>8}", chunk[0].avg_power);
        for r in chunk {
            print!(" {:>18.6}", r.mean);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
