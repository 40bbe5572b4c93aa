// Blind equal split against the blind DP.

use secrecy_alloc::oracle::exact_blind_dp;
use secrecy_alloc::sim::{simulate, SimSettings};
use secrecy_alloc::{GainDistribution, GainPair, PolicyId, Result};

pub fn run_example() -> Result<()> {
    let dist = GainDistribution::discrete(vec![
        (GainPair::new(3.0, 0.5)?, 0.3),
        (GainPair::new(1.0, 1.0)?, 0.3),
        (GainPair::new(0.5, 2.0)?, 0.4),
    ])?;
    let (m, p) = (4, 1.0);
    let table = exact_blind_dp(&dist, m, p, 401, true)?;
    println!(
        "blind DP:            {:.6} bits/use",
        table.value_per_channel_use()
    );
    println!("equal split E[c_s]:  {:.6}", dist.expected_density(p)?);
    println!("first-block DP power: {}", table.gamma_star(1, 400, 0));
    // Without the clamp the objective is the relaxation f, which is not
    // concave here and the DP no longer splits evenly.
    let relaxed = exact_blind_dp(&dist, m, p, 401, false)?;
    println!(
        "unclamped: DP {:.6}, f(P) {:.6}, first-block power {}",
        relaxed.value_per_channel_use(),
        dist.f_eval(p)?,
        relaxed.gamma_star(1, 400, 0)
    );

    let r = simulate(PolicyId::Blind, &dist, &SimSettings::new(m, p, 20_000, 1))?;
    println!(
        "simulated blind: {:.6} +- {:.6} (mean power {})",
        r.mean, r.ci_half_width, r.mean_power
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
