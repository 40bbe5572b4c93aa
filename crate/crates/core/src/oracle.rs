//! Brute-force reference solvers on a uniform power grid.
//!
//! The grid is `{0, step, 2 step, ..., M P}` and every transition `p - gamma`
//! lands back on the grid, so backward induction needs no interpolation.
//! Values are totals over the remaining blocks in bits; divide by `M` for the
//! per-channel-use figures reported by the simulator.

use rayon::prelude::*;

use crate::channel::{density, FrameCsi, GainDistribution};
use crate::error::{domain, Result};
use crate::report::fmt_num;
use crate::waterfill::PowerAllocation;

/// Value function and optimal decisions of a finite-horizon DP.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    horizon: usize,
    grid_step: f64,
    grid_points: usize,
    support_len: usize,
    /// `values[m - 1][k]` is `V_m(k step)` for `m = 1..=M+1`.
    values: Vec<Vec<f64>>,
    /// `argmax[m - 1][k * support_len + s]` is the optimal grid index of gamma.
    argmax: Vec<Vec<u32>>,
}

impl DpTable {
    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn grid_step(&self) -> f64 {
        self.grid_step
    }

    #[inline]
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Number of support points decisions are conditioned on (1 for blind tables).
    #[inline]
    pub fn support_len(&self) -> usize {
        self.support_len
    }

    /// `V_m` on the grid, `m` in `1..=M+1`.
    pub fn values(&self, m: usize) -> &[f64] {
        &self.values[m - 1]
    }

    /// `V_1(M P)`.
    pub fn optimal_value(&self) -> f64 {
        self.values[0][self.grid_points - 1]
    }

    /// `V_1(M P) / M`, comparable with mean frame capacities.
    pub fn value_per_channel_use(&self) -> f64 {
        self.optimal_value() / self.horizon as f64
    }

    /// Optimal power at block `m` with `k` grid steps left, after observing support point `s`.
    pub fn gamma_star(&self, m: usize, k: usize, s: usize) -> f64 {
        self.argmax[m - 1][k * self.support_len + s] as f64 * self.grid_step
    }

    /// Value function export with columns `m,p,V,gamma_star,support`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("m,p,V,gamma_star,support\n");
        for m in 1..=self.horizon {
            for k in 0..self.grid_points {
                let p = fmt_num(k as f64 * self.grid_step);
                let v = fmt_num(self.values[m - 1][k]);
                for s in 0..self.support_len {
                    out.push_str(&format!(
                        "{m},{p},{v},{},{s}\n",
                        fmt_num(self.gamma_star(m, k, s))
                    ));
                }
            }
        }
        out
    }
}

fn grid(horizon: usize, avg_power: f64, grid_points: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(domain("horizon must be >= 1"));
    }
    if grid_points < 2 {
        return Err(domain("grid needs at least 2 points"));
    }
    if !avg_power.is_finite() || avg_power < 0.0 {
        return Err(domain(format!(
            "average power must be finite and >= 0, got {avg_power}"
        )));
    }
    Ok(horizon as f64 * avg_power / (grid_points - 1) as f64)
}

/// Best `j` in `0..=k` for `gain[j] + next[k - j]`; the smallest index wins ties.
#[inline]
fn best_split(gain: &[f64], next: &[f64], k: usize) -> (f64, u32) {
    let mut best = f64::NEG_INFINITY;
    let mut arg = 0u32;
    for j in 0..=k {
        let v = gain[j] + next[k - j];
        if v > best {
            best = v;
            arg = j as u32;
        }
    }
    (best, arg)
}

/// Causal DP with exact densities: the gains of block `m` are observed before
/// choosing `gamma_m`.
pub fn exact_causal_dp(
    dist: &GainDistribution,
    horizon: usize,
    avg_power: f64,
    grid_points: usize,
) -> Result<DpTable> {
    let support = dist.finite_support().ok_or_else(|| {
        domain(format!(
            "the exact DP needs a finite-support distribution, got {}",
            dist.kind_name()
        ))
    })?;
    let step = grid(horizon, avg_power, grid_points)?;
    let gains: Vec<Vec<f64>> = support
        .iter()
        .map(|(pair, _)| {
            (0..grid_points)
                .map(|j| density(j as f64 * step, pair))
                .collect()
        })
        .collect();
    let support_len = support.len();

    let mut values = vec![vec![0.0; grid_points]; horizon + 1];
    let mut argmax = vec![Vec::new(); horizon];
    for m in (0..horizon).rev() {
        let next = &values[m + 1];
        let stage: Vec<(f64, Vec<u32>)> = (0..grid_points)
            .into_par_iter()
            .map(|k| {
                let mut v = 0.0;
                let mut args = Vec::with_capacity(support_len);
                for (s, (_, w)) in support.iter().enumerate() {
                    let (best, arg) = best_split(&gains[s], next, k);
                    v += w * best;
                    args.push(arg);
                }
                (v, args)
            })
            .collect();
        let mut vals = Vec::with_capacity(grid_points);
        let mut args = Vec::with_capacity(grid_points * support_len);
        for (v, a) in stage {
            vals.push(v);
            args.extend(a);
        }
        values[m] = vals;
        argmax[m] = args;
    }
    Ok(DpTable {
        horizon,
        grid_step: step,
        grid_points,
        support_len,
        values,
        argmax,
    })
}

/// Blind DP: `gamma_m` is chosen from the distribution alone. With
/// `clamped = false` the per-block reward is the unclamped `f`.
pub fn exact_blind_dp(
    dist: &GainDistribution,
    horizon: usize,
    avg_power: f64,
    grid_points: usize,
    clamped: bool,
) -> Result<DpTable> {
    let step = grid(horizon, avg_power, grid_points)?;
    let gain = (0..grid_points)
        .map(|j| {
            let g = j as f64 * step;
            if clamped {
                dist.expected_density(g)
            } else {
                dist.f_eval(g)
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut values = vec![vec![0.0; grid_points]; horizon + 1];
    let mut argmax = vec![Vec::new(); horizon];
    for m in (0..horizon).rev() {
        let next = &values[m + 1];
        let (vals, args): (Vec<f64>, Vec<u32>) = (0..grid_points)
            .into_par_iter()
            .map(|k| best_split(&gain, next, k))
            .unzip();
        values[m] = vals;
        argmax[m] = args;
    }
    Ok(DpTable {
        horizon,
        grid_step: step,
        grid_points,
        support_len: 1,
        values,
        argmax,
    })
}

/// Best allocation of the whole frame budget on the grid
/// `{gamma : sum gamma = M P, gamma_m in {0, step, ..}}`.
///
/// The objective is separable over blocks, so the search over the simplex
/// grid is done exactly by a knapsack-style recursion over blocks instead of
/// enumerating compositions.
pub fn grid_waterfill_oracle(
    csi: &FrameCsi,
    avg_power: f64,
    grid_points: usize,
) -> Result<PowerAllocation> {
    let horizon = csi.horizon();
    let step = grid(horizon, avg_power, grid_points)?;
    let units = grid_points - 1;
    let budget = horizon as f64 * avg_power;

    // best[m][k]: value of blocks m.. using exactly k units.
    let mut best = vec![vec![f64::NEG_INFINITY; units + 1]; horizon + 1];
    best[horizon][0] = 0.0;
    let mut choice = vec![vec![0u32; units + 1]; horizon];
    for m in (0..horizon).rev() {
        let gain: Vec<f64> = (0..=units)
            .map(|j| density(j as f64 * step, &csi.pairs()[m]))
            .collect();
        for k in 0..=units {
            let (v, j) = best_split(&gain, &best[m + 1], k);
            best[m][k] = v;
            choice[m][k] = j;
        }
    }
    let mut gammas = Vec::with_capacity(horizon);
    let mut k = units;
    for row in &choice {
        let j = row[k] as usize;
        gammas.push(j as f64 * step);
        k -= j;
    }
    // Grid points may sum a few ulps above the budget.
    let total: f64 = gammas.iter().sum();
    if total > budget {
        gammas.iter_mut().for_each(|g| *g *= budget / total);
    }
    PowerAllocation::new(gammas, budget)
}
