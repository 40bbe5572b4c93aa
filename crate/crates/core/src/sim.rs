//! Seeded Monte Carlo evaluation of allocation policies.
//!
//! Frame `f` of a run seeded with `s` is drawn from a generator seeded with
//! [`frame_seed`]`(s, f)`, so a frame's gains do not depend on how frames are
//! scheduled across threads, and every policy in a comparison sees the same
//! frames.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{sample_frame, GainDistribution};
use crate::error::{domain, Result};
use crate::policy::{run_policy_on_frame, PolicyId};
use crate::report::fmt_num;

/// z-value of the two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

/// Slack for per-frame dominance checks against the acausal reference.
pub const DOMINANCE_TOL: f64 = 1e-9;

const CHUNK: usize = 2048;

/// Child seed of frame `frame`: SplitMix64 applied to
/// `seed + frame * 0x9E3779B97F4A7C15` (wrapping).
pub fn frame_seed(seed: u64, frame: u64) -> u64 {
    let mut z = seed.wrapping_add(frame.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSettings {
    pub horizon: usize,
    pub avg_power: f64,
    pub n_frames: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SimSettings {
    pub fn new(horizon: usize, avg_power: f64, n_frames: usize, seed: u64) -> Self {
        Self {
            horizon,
            avg_power,
            n_frames,
            seed,
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(domain("horizon must be >= 1"));
        }
        if self.n_frames == 0 {
            return Err(domain("n_frames must be >= 1"));
        }
        if !self.avg_power.is_finite() || self.avg_power < 0.0 {
            return Err(domain(format!(
                "average power must be >= 0, got {}",
                self.avg_power
            )));
        }
        if self.threads == Some(0) {
            return Err(domain("threads must be >= 1"));
        }
        Ok(())
    }
}

/// Aggregate statistics of one policy over `n_frames` frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub policy: PolicyId,
    pub horizon: usize,
    pub avg_power: f64,
    pub n_frames: usize,
    /// Mean frame secrecy capacity, bits per channel use.
    pub mean: f64,
    pub sd: f64,
    pub ci_half_width: f64,
    /// Mean total power spent per frame.
    pub mean_power: f64,
    pub zero_fraction: f64,
    pub seed: u64,
}

/// Mean difference `first - second` over common frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub first: PolicyId,
    pub second: PolicyId,
    pub mean: f64,
    pub ci_half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub policy: PolicyId,
    /// Frames where the policy beat the acausal reference by more than [`DOMINANCE_TOL`].
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// Sorted by mean capacity, largest first.
    pub reports: Vec<SimReport>,
    pub differences: Vec<PairedDifference>,
    /// Present when `waterfill-acausal` is among the compared policies.
    pub dominance: Vec<DominanceCheck>,
}

/// Sum with `O(log n)` error growth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 64 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean and sample standard deviation, shifted by the first sample so
/// constant data yield exactly that constant and zero spread.
fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let shifted: Vec<f64> = xs.iter().map(|x| x - x0).collect();
    let mean_shift = pairwise_sum(&shifted) / n;
    let mean = x0 + mean_shift;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = shifted.iter().map(|y| (y - mean_shift).powi(2)).collect();
    (mean, (pairwise_sum(&sq) / (n - 1.0)).sqrt())
}

/// Per-policy capacities and powers of one chunk of frames.
type Chunk = (Vec<Vec<f64>>, Vec<Vec<f64>>);

/// Per-policy capacity and power of every frame.
struct FrameTable {
    capacity: Vec<Vec<f64>>,
    power: Vec<Vec<f64>>,
}

fn run_frames(
    policies: &[PolicyId],
    dist: &GainDistribution,
    settings: &SimSettings,
) -> Result<FrameTable> {
    settings.validate()?;
    let moments = dist.moments();
    let k = policies.len();
    let work = || -> Result<Vec<Chunk>> {
        let starts: Vec<usize> = (0..settings.n_frames).step_by(CHUNK).collect();
        starts
            .into_par_iter()
            .map(|start| {
                let end = (start + CHUNK).min(settings.n_frames);
                let mut cap = vec![Vec::with_capacity(end - start); k];
                let mut pow = vec![Vec::with_capacity(end - start); k];
                for f in start..end {
                    let csi =
                        sample_frame(dist, settings.horizon, frame_seed(settings.seed, f as u64))?;
                    for (i, &id) in policies.iter().enumerate() {
                        let out = run_policy_on_frame(id, &moments, &csi, settings.avg_power)?;
                        cap[i].push(out.capacity);
                        pow[i].push(out.allocation.total());
                    }
                }
                Ok((cap, pow))
            })
            .collect()
    };
    let chunks = match settings.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| domain(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let mut capacity = vec![Vec::with_capacity(settings.n_frames); k];
    let mut power = vec![Vec::with_capacity(settings.n_frames); k];
    for (cap, pow) in chunks {
        for i in 0..k {
            capacity[i].extend_from_slice(&cap[i]);
            power[i].extend_from_slice(&pow[i]);
        }
    }
    Ok(FrameTable { capacity, power })
}

fn summarize(policy: PolicyId, caps: &[f64], powers: &[f64], settings: &SimSettings) -> SimReport {
    let n = caps.len();
    let (mean, sd) = mean_sd(caps);
    SimReport {
        policy,
        horizon: settings.horizon,
        avg_power: settings.avg_power,
        n_frames: n,
        mean,
        sd,
        ci_half_width: Z95 * sd / (n as f64).sqrt(),
        mean_power: pairwise_sum(powers) / n as f64,
        zero_fraction: caps.iter().filter(|&&c| c == 0.0).count() as f64 / n as f64,
        seed: settings.seed,
    }
}

/// Evaluates one policy over `n_frames` seeded frames.
pub fn simulate(
    policy: PolicyId,
    dist: &GainDistribution,
    settings: &SimSettings,
) -> Result<SimReport> {
    let table = run_frames(&[policy], dist, settings)?;
    Ok(summarize(
        policy,
        &table.capacity[0],
        &table.power[0],
        settings,
    ))
}

/// Evaluates several policies on common frames.
pub fn compare(
    policies: &[PolicyId],
    dist: &GainDistribution,
    settings: &SimSettings,
) -> Result<Comparison> {
    if policies.len() < 2 {
        return Err(domain("a comparison needs at least two policies"));
    }
    let table = run_frames(policies, dist, settings)?;
    let n = settings.n_frames as f64;

    let mut differences = Vec::new();
    for i in 0..policies.len() {
        for j in i + 1..policies.len() {
            let diff: Vec<f64> = table.capacity[i]
                .iter()
                .zip(&table.capacity[j])
                .map(|(a, b)| a - b)
                .collect();
            let (mean, sd) = mean_sd(&diff);
            differences.push(PairedDifference {
                first: policies[i],
                second: policies[j],
                mean,
                ci_half_width: Z95 * sd / n.sqrt(),
            });
        }
    }

    let mut dominance = Vec::new();
    if let Some(w) = policies
        .iter()
        .position(|p| *p == PolicyId::WaterfillAcausal)
    {
        for (i, &id) in policies.iter().enumerate().filter(|(_, p)| p.is_causal()) {
            let violations = table.capacity[i]
                .iter()
                .zip(&table.capacity[w])
                .filter(|(c, wf)| **c > **wf + DOMINANCE_TOL)
                .count();
            dominance.push(DominanceCheck {
                policy: id,
                violations,
            });
        }
    }

    let mut reports: Vec<SimReport> = policies
        .iter()
        .enumerate()
        .map(|(i, &id)| summarize(id, &table.capacity[i], &table.power[i], settings))
        .collect();
    reports.sort_by(|a, b| b.mean.total_cmp(&a.mean));
    Ok(Comparison {
        reports,
        differences,
        dominance,
    })
}

/// Runs every policy at each average power in `powers` (common frames per power).
pub fn sweep(
    policies: &[PolicyId],
    dist: &GainDistribution,
    settings: &SimSettings,
    powers: &[f64],
) -> Result<Vec<SimReport>> {
    if powers.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("sweep powers must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(powers.len() * policies.len());
    for &p in powers {
        let s = SimSettings {
            avg_power: p,
            ..*settings
        };
        let table = run_frames(policies, dist, &s)?;
        for (i, &id) in policies.iter().enumerate() {
            out.push(summarize(id, &table.capacity[i], &table.power[i], &s));
        }
    }
    Ok(out)
}

/// One CSV row per report.
pub fn reports_csv(reports: &[SimReport]) -> String {
    let mut out =
        String::from("policy,M,P,n_frames,mean,sd,ci_half_width,mean_power,zero_fraction,seed\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.policy,
            r.horizon,
            fmt_num(r.avg_power),
            r.n_frames,
            fmt_num(r.mean),
            fmt_num(r.sd),
            fmt_num(r.ci_half_width),
            fmt_num(r.mean_power),
            fmt_num(r.zero_fraction),
            r.seed
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::GainPair;

    fn pair(a: f64, b: f64) -> GainPair {
        GainPair::new(a, b).unwrap()
    }

    #[test]
    fn pairwise_sum_is_accurate() {
        let xs = vec![0.1; 1_000_000];
        assert!((pairwise_sum(&xs) - 100_000.0).abs() < 1e-8);
    }

    #[test]
    fn deterministic_channel() {
        let d = GainDistribution::degenerate(pair(3.0, 1.0)).unwrap();
        let r = simulate(PolicyId::Blind, &d, &SimSettings::new(2, 1.0, 1000, 3)).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.sd, 0.0);
        assert_eq!(r.ci_half_width, 0.0);
        assert_eq!(r.mean_power, 2.0);
        assert_eq!(r.zero_fraction, 0.0);
    }

    #[test]
    fn no_positive_gap_means_zero() {
        let d =
            GainDistribution::discrete(vec![(pair(1.0, 2.0), 0.5), (pair(0.5, 0.5), 0.5)]).unwrap();
        let s = SimSettings::new(3, 2.0, 500, 1);
        for id in PolicyId::ALL {
            let r = simulate(id, &d, &s).unwrap();
            assert_eq!(r.mean, 0.0, "{id}");
            assert_eq!(r.zero_fraction, 1.0);
        }
    }

    #[test]
    fn low_snr_matches_sequence_enumeration() {
        let d =
            GainDistribution::discrete(vec![(pair(2.0, 1.0), 0.5), (pair(1.0, 2.0), 0.5)]).unwrap();
        let (m, p) = (3usize, 0.01);
        let moments = d.moments();
        // Every one of the 2^3 equiprobable gain sequences.
        let mut exact = 0.0;
        for code in 0..8u32 {
            let gains: Vec<(f64, f64)> = (0..m)
                .map(|i| {
                    if code >> i & 1 == 1 {
                        (2.0, 1.0)
                    } else {
                        (1.0, 2.0)
                    }
                })
                .collect();
            let csi = crate::channel::FrameCsi::from_gains(&gains).unwrap();
            exact += run_policy_on_frame(PolicyId::LowSnr, &moments, &csi, p)
                .unwrap()
                .capacity
                / 8.0;
        }
        let r = simulate(PolicyId::LowSnr, &d, &SimSettings::new(m, p, 100_000, 42)).unwrap();
        assert!(
            (r.mean - exact).abs() < 3.0 * r.ci_half_width,
            "{} vs {exact}",
            r.mean
        );
    }

    #[test]
    fn compare_with_itself_and_reference() {
        let d = GainDistribution::exponential(1.5, 1.0).unwrap();
        let s = SimSettings::new(4, 1.0, 5000, 9);
        let c = compare(&[PolicyId::Blind, PolicyId::Blind], &d, &s).unwrap();
        assert_eq!(c.differences[0].mean, 0.0);
        assert_eq!(c.differences[0].ci_half_width, 0.0);

        let c = compare(
            &[
                PolicyId::Blind,
                PolicyId::Intermediate,
                PolicyId::WaterfillAcausal,
            ],
            &d,
            &s,
        )
        .unwrap();
        assert_eq!(c.reports[0].policy, PolicyId::WaterfillAcausal);
        let bw = c
            .differences
            .iter()
            .find(|x| x.first == PolicyId::Blind && x.second == PolicyId::WaterfillAcausal)
            .unwrap();
        assert!(bw.mean <= 0.0);
        assert!(c.dominance.iter().all(|x| x.violations == 0));
        assert_eq!(c.dominance.len(), 2);
        assert!(compare(&[PolicyId::Blind], &d, &s).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let d = GainDistribution::exponential(2.0, 1.0).unwrap();
        let s = SimSettings::new(5, 0.5, 10_000, 77);
        let base = simulate(PolicyId::Intermediate, &d, &s.with_threads(1)).unwrap();
        for t in [3, 8] {
            assert_eq!(
                simulate(PolicyId::Intermediate, &d, &s.with_threads(t)).unwrap(),
                base
            );
        }
        assert_eq!(simulate(PolicyId::Intermediate, &d, &s).unwrap(), base);
    }

    #[test]
    fn sweep_rows_and_validation() {
        let d = GainDistribution::exponential(2.0, 1.0).unwrap();
        let s = SimSettings::new(3, 1.0, 200, 5);
        let rows = sweep(
            &[PolicyId::Blind, PolicyId::LowSnr],
            &d,
            &s,
            &[0.01, 0.1, 1.0, 10.0],
        )
        .unwrap();
        assert_eq!(rows.len(), 8);
        assert_eq!(rows[2].avg_power, 0.1);
        assert!(sweep(&[PolicyId::Blind], &d, &s, &[1.0, 1.0]).is_err());
        let csv = reports_csv(&rows);
        assert_eq!(csv.lines().count(), 9);
        assert!(csv.lines().nth(1).unwrap().starts_with("blind,3,0.01,200,"));
    }

    #[test]
    fn settings_validation() {
        let d = GainDistribution::exponential(2.0, 1.0).unwrap();
        assert!(simulate(PolicyId::Blind, &d, &SimSettings::new(0, 1.0, 10, 0)).is_err());
        assert!(simulate(PolicyId::Blind, &d, &SimSettings::new(2, 1.0, 0, 0)).is_err());
        assert!(simulate(PolicyId::Blind, &d, &SimSettings::new(2, -1.0, 10, 0)).is_err());
    }

    #[test]
    fn frame_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..10_000).map(|f| frame_seed(1, f)).collect();
        assert_eq!(seeds.len(), 10_000);
        assert_ne!(frame_seed(1, 0), frame_seed(2, 0));
    }
}
