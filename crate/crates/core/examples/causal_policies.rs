// Block-by-block decisions of the causal policies on one sampled frame.

use secrecy_alloc::{sample_frame, CsiMode, GainDistribution, PolicyId, PolicyState, Result};

pub fn run_example() -> Result<()> {
    let dist = GainDistribution::exponential(2.0, 1.0)?;
    let moments = dist.moments();
    let horizon = 5;
    let csi = sample_frame(&dist, horizon, 12)?;
    for id in PolicyId::ALL.into_iter().filter(|p| p.is_causal()) {
        let mode = id.csi_mode().unwrap_or(CsiMode::Full);
        let mut remaining = horizon as f64;
        let mut line = format!("{:<24}", id.as_str());
        for (m, pair) in csi.pairs().iter().enumerate() {
            let state = PolicyState::new(m + 1, horizon, remaining, moments, mode)?;
            let d = id
                .decide(&state, pair)
                .expect("causal policies decide per block");
            line.push_str(&format!(" {:>6.3}({:?})", d.gamma, d.rationale));
            remaining = (remaining - d.gamma).max(0.0);
        }
        println!("{line}");
    }
    let gaps: Vec<String> = csi
        .pairs()
        .iter()
        .map(|p| format!("{:.3}", p.delta()))
        .collect();
    println!("gaps: {}", gaps.join(" "));
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
