//! Secure waterfilling with full knowledge of all `M` blocks.
//!
//! The optimal per-block power at waterlevel `L = 1/lambda` solves
//! `alpha/(1 + alpha g) - beta/(1 + beta g) = 1/L`, which has the closed form
//! `g = (sqrt(d^2 + 4 L d) - (2/alpha + d)) / 2` with `d = 1/beta - 1/alpha`.
//! A block receives power only once `L` exceeds `1/delta`.

use serde::Serialize;

use crate::channel::{frame_capacity_of, FrameCsi, GainPair};
use crate::error::{domain, Result};

/// Relative slack allowed on the frame budget.
pub const BUDGET_TOL: f64 = 1e-9;

/// Relative power tolerance guaranteed by the waterlevel search.
pub const WATERLEVEL_TOL: f64 = 1e-10;

const MAX_BISECTIONS: usize = 400;

/// Per-block transmit powers for one frame together with the frame budget `M P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerAllocation {
    gammas: Vec<f64>,
    budget: f64,
}

impl PowerAllocation {
    pub fn new(gammas: Vec<f64>, budget: f64) -> Result<Self> {
        if !budget.is_finite() || budget < 0.0 {
            return Err(domain(format!(
                "budget must be finite and >= 0, got {budget}"
            )));
        }
        if let Some(g) = gammas.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(domain(format!(
                "block power must be finite and >= 0, got {g}"
            )));
        }
        let total: f64 = gammas.iter().sum();
        if total > budget * (1.0 + BUDGET_TOL) {
            return Err(domain(format!(
                "allocation spends {total}, budget is {budget}"
            )));
        }
        Ok(Self { gammas, budget })
    }

    #[inline]
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    #[inline]
    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn total(&self) -> f64 {
        self.gammas.iter().sum()
    }

    pub fn into_gammas(self) -> Vec<f64> {
        self.gammas
    }
}

/// Result of [`waterfill`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterfillSolution {
    /// Powers in the caller's block order.
    pub allocation: PowerAllocation,
    /// Waterlevel `1/lambda`.
    pub waterlevel: f64,
    /// Zero-based indices of blocks with positive power, ascending.
    pub eligible_set: Vec<usize>,
    /// Zero-based block indices in non-increasing gap order.
    pub permutation: Vec<usize>,
}

impl WaterfillSolution {
    pub fn capacity(&self, csi: &FrameCsi) -> Result<f64> {
        frame_capacity_of(self.allocation.gammas(), csi)
    }
}

/// Zero-based block indices ordered by non-increasing gap. Ties keep their
/// original relative order.
pub fn sort_by_gap(csi: &FrameCsi) -> Vec<usize> {
    let pairs = csi.pairs();
    let mut idx: Vec<usize> = (0..pairs.len()).collect();
    idx.sort_by(|&i, &j| pairs[j].delta().total_cmp(&pairs[i].delta()));
    idx
}

/// Power a block receives at waterlevel `level`.
///
/// A block without eavesdropper (`beta == 0`) reduces to classical
/// waterfilling, `[level - 1/alpha]^+`.
pub fn gamma_of_waterlevel(level: f64, pair: &GainPair) -> f64 {
    let delta = pair.delta();
    if delta <= 0.0 || level * delta <= 1.0 {
        return 0.0;
    }
    // With u = g + 1/alpha the stationarity condition is u^2 + d u - d L = 0;
    // the positive root written without the d - sqrt(d^2 + ..) cancellation.
    let inv_d = pair.alpha * pair.beta / delta;
    let u = 2.0 * level / (1.0 + (1.0 + 4.0 * level * inv_d).sqrt());
    (u - 1.0 / pair.alpha).max(0.0)
}

fn total_power(level: f64, csi: &FrameCsi) -> f64 {
    csi.pairs()
        .iter()
        .map(|p| gamma_of_waterlevel(level, p))
        .sum()
}

/// Maximizes the frame secrecy capacity subject to `sum(gamma) <= M P`.
///
/// Frames where no block has a positive gap get the all-zero allocation and
/// waterlevel 0.
pub fn waterfill(csi: &FrameCsi, avg_power: f64) -> Result<WaterfillSolution> {
    if !avg_power.is_finite() || avg_power < 0.0 {
        return Err(domain(format!(
            "average power must be finite and >= 0, got {avg_power}"
        )));
    }
    let m = csi.horizon();
    let budget = m as f64 * avg_power;
    let permutation = sort_by_gap(csi);
    let best_gap = csi.pairs()[permutation[0]].delta();

    if best_gap <= 0.0 {
        return Ok(WaterfillSolution {
            allocation: PowerAllocation::new(vec![0.0; m], budget)?,
            waterlevel: 0.0,
            eligible_set: Vec::new(),
            permutation,
        });
    }

    let floor = 1.0 / best_gap;
    let level = if budget == 0.0 {
        floor
    } else {
        let mut lo = floor;
        let mut hi = 2.0 * floor;
        while total_power(hi, csi) < budget {
            lo = hi;
            hi *= 2.0;
        }
        // Bisect to machine precision; the tolerance is the contract, not the stopping rule.
        let mut level = hi;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let s = total_power(mid, csi);
            if s == budget {
                level = mid;
                break;
            }
            if s < budget {
                lo = mid;
            } else {
                hi = mid;
            }
            level = hi;
        }
        level
    };

    let mut gammas: Vec<f64> = csi
        .pairs()
        .iter()
        .map(|p| gamma_of_waterlevel(level, p))
        .collect();
    // The search can overshoot by at most the tolerance; trim so the budget is never exceeded.
    let total: f64 = gammas.iter().sum();
    if total > budget {
        let scale = budget / total;
        gammas.iter_mut().for_each(|g| *g *= scale);
    }
    let eligible_set = (0..m).filter(|&i| gammas[i] > 0.0).collect();
    Ok(WaterfillSolution {
        allocation: PowerAllocation::new(gammas, budget)?,
        waterlevel: level,
        eligible_set,
        permutation,
    })
}
