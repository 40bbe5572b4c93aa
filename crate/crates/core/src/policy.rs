//! Per-block power allocation policies for the long-term frame budget.
//!
//! Every policy sees the block index, the remaining power and the precomputed
//! [`MomentSet`]. The causal variants additionally see the gains of the
//! current block only; a semi-blind transmitter sees `alpha` but not `beta`,
//! which is modelled by handing it the pair `(alpha, 0)` and the
//! `alpha`-moments.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{frame_capacity_of, FrameCsi, GainPair, GapMoments, MomentSet};
use crate::error::{domain, Error, Result};
use crate::waterfill::{waterfill, PowerAllocation};

const PADE: f64 = 2.0 / LN_2;

/// What the transmitter observes about the current block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CsiMode {
    /// Only the distribution is known.
    None,
    /// Both gains of the current block are observed.
    Full,
    /// Only the legitimate gain of the current block is observed.
    LegitimateOnly,
}

/// Decision context at block `block` (1-based) of a `horizon`-block frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyState {
    block: usize,
    horizon: usize,
    remaining: f64,
    moments: MomentSet,
    csi_mode: CsiMode,
}

impl PolicyState {
    pub fn new(
        block: usize,
        horizon: usize,
        remaining: f64,
        moments: MomentSet,
        csi_mode: CsiMode,
    ) -> Result<Self> {
        if block == 0 || block > horizon {
            return Err(domain(format!("block {block} outside 1..={horizon}")));
        }
        if !remaining.is_finite() || remaining < 0.0 {
            return Err(domain(format!(
                "remaining power must be >= 0, got {remaining}"
            )));
        }
        Ok(Self {
            block,
            horizon,
            remaining,
            moments,
            csi_mode,
        })
    }

    #[inline]
    pub fn block(&self) -> usize {
        self.block
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    #[inline]
    pub fn csi_mode(&self) -> CsiMode {
        self.csi_mode
    }

    /// Blocks left after the current one.
    #[inline]
    pub fn blocks_after(&self) -> usize {
        self.horizon - self.block
    }

    fn is_last(&self) -> bool {
        self.block == self.horizon
    }

    /// Gap moments matching the observation model.
    fn gap_moments(&self) -> GapMoments {
        match self.csi_mode {
            CsiMode::LegitimateOnly => self.moments.legitimate(),
            CsiMode::None | CsiMode::Full => self.moments.full(),
        }
    }

    fn view(&self, pair: &GainPair) -> GainPair {
        match self.csi_mode {
            CsiMode::LegitimateOnly => pair.legitimate_view(),
            CsiMode::None | CsiMode::Full => *pair,
        }
    }
}

/// Which branch of a policy produced a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rationale {
    BlindEqualSplit,
    BelowThreshold,
    AboveThreshold,
    HighSnrShare,
    InteriorRoot,
    BoundaryClamp,
    ZeroGap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub gamma: f64,
    pub rationale: Rationale,
}

impl PolicyDecision {
    fn new(gamma: f64, rationale: Rationale) -> Self {
        Self { gamma, rationale }
    }
}

/// Equal split of the remaining power over the remaining blocks, provided the
/// expected gap is positive.
pub fn blind_policy(state: &PolicyState) -> PolicyDecision {
    if state.moments.e_delta > 0.0 {
        let share = state.remaining / (state.blocks_after() + 1) as f64;
        PolicyDecision::new(share, Rationale::BlindEqualSplit)
    } else {
        PolicyDecision::new(0.0, Rationale::ZeroGap)
    }
}

/// Threshold policy: spend everything when the observed gap beats `E{[delta]^+}`.
/// On the last block any positive gap qualifies.
pub fn low_snr_policy(state: &PolicyState, pair: &GainPair) -> PolicyDecision {
    let gap = state.view(pair).delta();
    if gap <= 0.0 {
        return PolicyDecision::new(0.0, Rationale::ZeroGap);
    }
    let threshold = if state.is_last() {
        0.0
    } else {
        state.gap_moments().mean_pos
    };
    if gap > threshold {
        PolicyDecision::new(state.remaining, Rationale::AboveThreshold)
    } else {
        PolicyDecision::new(0.0, Rationale::BelowThreshold)
    }
}

/// Constant power on positive-gap blocks: the remaining power divided by the
/// number of blocks left including the current one.
pub fn high_snr_policy(state: &PolicyState, pair: &GainPair) -> PolicyDecision {
    if state.view(pair).delta() <= 0.0 {
        return PolicyDecision::new(0.0, Rationale::ZeroGap);
    }
    let share = state.remaining / (state.blocks_after() + 1) as f64;
    PolicyDecision::new(share, Rationale::HighSnrShare)
}

/// Approximate value of the blocks still to come, in bits summed over blocks:
/// `W_n(q) = (2/ln 2) n K1 (q/n) / (2 + K2 q/n)`.
///
/// Each future block is credited with the expectation of the last-block value
/// `(2/ln 2) delta x / (2 + (delta + 2 beta) x)` at an equal share `x = q/n`,
/// with the expectation of the ratio replaced by the ratio of expectations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Continuation {
    /// `E{[delta]^+}`.
    pub k1: f64,
    /// `E{(delta + 2 beta) 1{delta > 0}}`.
    pub k2: f64,
    pub n_remaining: usize,
}

impl Continuation {
    pub fn value(&self, power: f64) -> f64 {
        if self.n_remaining == 0 || self.k1 == 0.0 {
            return 0.0;
        }
        let n = self.n_remaining as f64;
        PADE * self.k1 * power / (2.0 + self.k2 * power / n)
    }

    /// Derivative of [`Continuation::value`] in the power argument.
    pub fn slope(&self, power: f64) -> f64 {
        if self.n_remaining == 0 || self.k1 == 0.0 {
            return 0.0;
        }
        let den = 2.0 + self.k2 * power / self.n_remaining as f64;
        2.0 * PADE * self.k1 / (den * den)
    }
}

pub fn continuation_constants(moments: &GapMoments, n_remaining: usize) -> Continuation {
    Continuation {
        k1: moments.mean_pos,
        k2: moments.sum_pos,
        n_remaining,
    }
}

/// One-step objective of the intermediate-SNR policy at power `gamma`: the
/// rational approximation of the current block's density plus the
/// continuation value of what is left.
pub fn intermediate_objective(state: &PolicyState, pair: &GainPair, gamma: f64) -> f64 {
    let view = state.view(pair);
    let a = view.delta().max(0.0);
    let b = view.delta() + 2.0 * view.beta;
    let cont = continuation_constants(&state.gap_moments(), state.blocks_after());
    PADE * a * gamma / (2.0 + b * gamma) + cont.value(state.remaining - gamma)
}

/// Real roots of `a x^2 + b x + c`, computed without catastrophic cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Maximizes [`intermediate_objective`] over `[0, p_m]`.
///
/// Stationarity reads `a (2 + e (p - g))^2 = K1 (2 + b g)^2` with `a`, `b`
/// from the current block and `e = K2 / n`.
pub fn intermediate_policy(state: &PolicyState, pair: &GainPair) -> PolicyDecision {
    let view = state.view(pair);
    let gap = view.delta();
    let p = state.remaining;
    if gap <= 0.0 {
        return PolicyDecision::new(0.0, Rationale::ZeroGap);
    }
    let cont = continuation_constants(&state.gap_moments(), state.blocks_after());
    if state.is_last() || cont.k1 == 0.0 || p == 0.0 {
        return PolicyDecision::new(p, Rationale::BoundaryClamp);
    }

    let a = gap;
    let b = gap + 2.0 * view.beta;
    let c = cont.k1;
    let e = cont.k2 / cont.n_remaining as f64;
    let u = 2.0 + e * p;
    let roots: Vec<f64> = quadratic_roots(
        a * e * e - c * b * b,
        -2.0 * a * u * e - 4.0 * c * b,
        a * u * u - 4.0 * c,
    )
    .into_iter()
    .filter(|r| r.is_finite() && *r >= 0.0 && *r <= p)
    .collect();

    let label = |g: f64| {
        if g > 0.0 && g < p {
            Rationale::InteriorRoot
        } else {
            Rationale::BoundaryClamp
        }
    };
    if roots.len() == 1 {
        return PolicyDecision::new(roots[0], label(roots[0]));
    }
    let mut candidates = roots;
    candidates.extend([0.0, p]);
    candidates.sort_by(f64::total_cmp);
    let mut best = candidates[0];
    let mut best_val = intermediate_objective(state, pair, best);
    for &g in &candidates[1..] {
        let v = intermediate_objective(state, pair, g);
        if v > best_val {
            best = g;
            best_val = v;
        }
    }
    PolicyDecision::new(best, label(best))
}

/// Stable policy identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyId {
    Blind,
    LowSnr,
    HighSnr,
    Intermediate,
    SemiBlindLow,
    SemiBlindHigh,
    SemiBlindIntermediate,
    WaterfillAcausal,
}

impl PolicyId {
    pub const ALL: [PolicyId; 8] = [
        PolicyId::Blind,
        PolicyId::LowSnr,
        PolicyId::HighSnr,
        PolicyId::Intermediate,
        PolicyId::SemiBlindLow,
        PolicyId::SemiBlindHigh,
        PolicyId::SemiBlindIntermediate,
        PolicyId::WaterfillAcausal,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyId::Blind => "blind",
            PolicyId::LowSnr => "low-snr",
            PolicyId::HighSnr => "high-snr",
            PolicyId::Intermediate => "intermediate",
            PolicyId::SemiBlindLow => "semi-blind-low",
            PolicyId::SemiBlindHigh => "semi-blind-high",
            PolicyId::SemiBlindIntermediate => "semi-blind-intermediate",
            PolicyId::WaterfillAcausal => "waterfill-acausal",
        }
    }

    /// `None` for the acausal reference, which sees the whole frame.
    pub fn csi_mode(&self) -> Option<CsiMode> {
        match self {
            PolicyId::Blind => Some(CsiMode::None),
            PolicyId::LowSnr | PolicyId::HighSnr | PolicyId::Intermediate => Some(CsiMode::Full),
            PolicyId::SemiBlindLow | PolicyId::SemiBlindHigh | PolicyId::SemiBlindIntermediate => {
                Some(CsiMode::LegitimateOnly)
            }
            PolicyId::WaterfillAcausal => None,
        }
    }

    pub fn is_causal(&self) -> bool {
        self.csi_mode().is_some()
    }

    pub fn valid_ids() -> String {
        Self::ALL
            .iter()
            .map(|p| p.as_str())
            .collect::<Vec<_>>()
            .join(", ")
    }

    /// Decision for one block. The acausal reference has no per-block rule.
    pub fn decide(&self, state: &PolicyState, pair: &GainPair) -> Option<PolicyDecision> {
        Some(match self {
            PolicyId::Blind => blind_policy(state),
            PolicyId::LowSnr | PolicyId::SemiBlindLow => low_snr_policy(state, pair),
            PolicyId::HighSnr | PolicyId::SemiBlindHigh => high_snr_policy(state, pair),
            PolicyId::Intermediate | PolicyId::SemiBlindIntermediate => {
                intermediate_policy(state, pair)
            }
            PolicyId::WaterfillAcausal => return None,
        })
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown policy id {s:?}; valid ids: {}",
                    Self::valid_ids()
                ))
            })
    }
}

impl TryFrom<String> for PolicyId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyId> for String {
    fn from(p: PolicyId) -> Self {
        p.as_str().to_owned()
    }
}

/// Realized allocation and frame secrecy capacity of one policy run.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub allocation: PowerAllocation,
    pub capacity: f64,
}

/// Runs `policy` over one frame, revealing block `m` only at step `m`.
pub fn run_policy_on_frame(
    policy: PolicyId,
    moments: &MomentSet,
    csi: &FrameCsi,
    avg_power: f64,
) -> Result<FrameOutcome> {
    if !avg_power.is_finite() || avg_power < 0.0 {
        return Err(domain(format!(
            "average power must be finite and >= 0, got {avg_power}"
        )));
    }
    let horizon = csi.horizon();
    let budget = horizon as f64 * avg_power;
    let Some(mode) = policy.csi_mode() else {
        let sol = waterfill(csi, avg_power)?;
        let capacity = sol.capacity(csi)?;
        return Ok(FrameOutcome {
            allocation: sol.allocation,
            capacity,
        });
    };

    let mut gammas = Vec::with_capacity(horizon);
    let mut remaining = budget;
    for (i, pair) in csi.pairs().iter().enumerate() {
        let state = PolicyState::new(i + 1, horizon, remaining, *moments, mode)?;
        // Infallible for causal ids.
        let gamma = policy.decide(&state, pair).map_or(0.0, |d| d.gamma);
        if !(gamma >= 0.0 && gamma <= remaining) {
            return Err(Error::Contract {
                block: i + 1,
                gamma,
                remaining,
            });
        }
        gammas.push(gamma);
        remaining = (remaining - gamma).max(0.0);
    }
    let capacity = frame_capacity_of(&gammas, csi)?;
    Ok(FrameOutcome {
        allocation: PowerAllocation::new(gammas, budget)?,
        capacity,
    })
}
