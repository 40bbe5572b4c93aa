// All policies on common random frames, with paired differences.

use secrecy_alloc::sim::{compare, reports_csv, SimSettings};
use secrecy_alloc::{GainDistribution, PolicyId, Result};

pub fn run_example() -> Result<()> {
    let dist = GainDistribution::exponential(2.0, 1.0)?;
    let cmp = compare(&PolicyId::ALL, &dist, &SimSettings::new(4, 1.0, 20_000, 99))?;
    print!("{}", reports_csv(&cmp.reports));
    for d in cmp
        .differences
        .iter()
        .filter(|d| d.second == PolicyId::WaterfillAcausal)
    {
        println!(
            "{} - waterfill-acausal: {:.5} +- {:.5}",
            d.first, d.mean, d.ci_half_width
        );
    }
    for d in &cmp.dominance {
        assert_eq!(d.violations, 0, "{}", d.policy);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
