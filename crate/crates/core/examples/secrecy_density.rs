// Per-block secrecy density and its expectations under a fading law.

use secrecy_alloc::{secrecy_density, GainDistribution, GainPair, Result};

pub fn run_example() -> Result<()> {
    let good = GainPair::new(2.0, 1.0)?;
    let bad = GainPair::new(1.0, 2.0)?;
    for gamma in [0.0, 0.5, 1.0, 10.0, 1000.0] {
        println!(
            "gamma {gamma:>7}: good block {:.6} bits, bad block {:.6} bits",
            secrecy_density(gamma, &good)?,
            secrecy_density(gamma, &bad)?
        );
    }
    println!(
        "high-power limit for the good block: log2(alpha/beta) = {}",
        (2.0f64).log2()
    );

    let rayleigh = GainDistribution::exponential(2.0, 1.0)?;
    for gamma in [0.1, 1.0, 10.0] {
        println!(
            "exponential(2, 1) at gamma {gamma}: f = {:.6}, E[c_s] = {:.6}",
            rayleigh.f_eval(gamma)?,
            rayleigh.expected_density(gamma)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
