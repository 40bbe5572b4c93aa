// Exact causal DP on a two-point law and how close the heuristics get.

use secrecy_alloc::oracle::exact_causal_dp;
use secrecy_alloc::sim::{compare, SimSettings};
use secrecy_alloc::{GainDistribution, GainPair, PolicyId, Result};

pub fn run_example() -> Result<()> {
    let dist = GainDistribution::discrete(vec![
        (GainPair::new(2.0, 1.0)?, 0.5),
        (GainPair::new(1.0, 2.0)?, 0.5),
    ])?;
    let m = 4;
    for p in [0.01, 1.0, 100.0] {
        let table = exact_causal_dp(&dist, m, p, 1001)?;
        let cmp = compare(
            &[PolicyId::LowSnr, PolicyId::HighSnr, PolicyId::Intermediate],
            &dist,
            &SimSettings::new(m, p, 20_000, 5),
        )?;
        print!("P {p:>6}: DP {:.5}", table.value_per_channel_use());
        for r in &cmp.reports {
            print!("  {} {:.5}", r.policy, r.mean);
        }
        println!();
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
