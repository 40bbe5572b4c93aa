// Acausal secure waterfilling of one known frame, checked against the grid oracle.

use secrecy_alloc::oracle::grid_waterfill_oracle;
use secrecy_alloc::{frame_capacity, sort_by_gap, waterfill, FrameCsi, Result};

pub fn run_example() -> Result<()> {
    let csi = FrameCsi::from_gains(&[(2.5, 0.4), (0.8, 1.1), (1.7, 0.2), (3.2, 2.9)])?;
    let power = 1.5;
    let sol = waterfill(&csi, power)?;
    println!("waterlevel {:.6}", sol.waterlevel);
    println!("blocks by gap: {:?}", sort_by_gap(&csi));
    for (m, (pair, g)) in csi.pairs().iter().zip(sol.allocation.gammas()).enumerate() {
        println!(
            "block {}: alpha {} beta {} -> gamma {g:.6}",
            m + 1,
            pair.alpha,
            pair.beta
        );
    }
    let exact = sol.capacity(&csi)?;
    let grid = frame_capacity(&grid_waterfill_oracle(&csi, power, 401)?, &csi)?;
    println!("capacity {exact:.9} bits/use, best on a 401-point grid {grid:.9}");
    assert!(exact >= grid - 1e-9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
