//! Channel-gain types, fading distributions and the secrecy capacity density.
//!
//! Gains are linear power gains. All capacities are reported in
//! bits per channel use.

use std::f64::consts::LN_2;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quad;
use crate::waterfill::PowerAllocation;

/// Tolerance on the total probability mass of a discrete distribution.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Relative tolerance used for numerically integrated expectations.
pub const INTEGRATION_REL_TOL: f64 = 1e-8;

/// Channel gains of one block: legitimate receiver `alpha`, eavesdropper `beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainPair {
    pub alpha: f64,
    pub beta: f64,
}

impl GainPair {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha < 0.0 || beta < 0.0 {
            return Err(domain(format!(
                "gains must be finite and non-negative, got alpha={alpha}, beta={beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    /// Gain gap `alpha - beta`.
    #[inline]
    pub fn delta(&self) -> f64 {
        self.alpha - self.beta
    }

    /// Inverse channel gap `1/beta - 1/alpha`; infinite when `beta == 0`.
    #[inline]
    pub fn inverse_gap(&self) -> f64 {
        1.0 / self.beta - 1.0 / self.alpha
    }

    /// The pair as seen by a transmitter that only observes `alpha`.
    #[inline]
    pub fn legitimate_view(&self) -> Self {
        Self {
            alpha: self.alpha,
            beta: 0.0,
        }
    }
}

/// Unclamped `log2((1 + alpha*g) / (1 + beta*g))`.
#[inline]
pub(crate) fn log_ratio(gamma: f64, pair: &GainPair) -> f64 {
    (pair.delta() * gamma / (1.0 + pair.beta * gamma)).ln_1p() / LN_2
}

/// Secrecy density without input validation.
#[inline]
pub(crate) fn density(gamma: f64, pair: &GainPair) -> f64 {
    if pair.alpha <= pair.beta || gamma <= 0.0 {
        return 0.0;
    }
    log_ratio(gamma, pair).max(0.0)
}

/// Secrecy capacity density of one block at transmit power `gamma`:
/// `[log2((1 + alpha*gamma) / (1 + beta*gamma))]^+`.
pub fn secrecy_density(gamma: f64, pair: &GainPair) -> Result<f64> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(domain(format!(
            "power must be finite and >= 0, got {gamma}"
        )));
    }
    GainPair::new(pair.alpha, pair.beta)?;
    Ok(density(gamma, pair))
}

/// Realized channel gains of one `M`-block frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameCsi {
    pairs: Vec<GainPair>,
}

impl FrameCsi {
    pub fn new(pairs: Vec<GainPair>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(domain("a frame needs at least one block"));
        }
        for p in &pairs {
            GainPair::new(p.alpha, p.beta)?;
        }
        Ok(Self { pairs })
    }

    pub fn from_gains(gains: &[(f64, f64)]) -> Result<Self> {
        let pairs = gains
            .iter()
            .map(|&(a, b)| GainPair::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(pairs)
    }

    /// Horizon `M`.
    #[inline]
    pub fn horizon(&self) -> usize {
        self.pairs.len()
    }

    #[inline]
    pub fn pairs(&self) -> &[GainPair] {
        &self.pairs
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_pairs_csv(std::fs::File::open(path)?)?)
    }
}

/// Reads `alpha,beta` rows following a one-line header.
pub fn read_pairs_csv<R: Read>(reader: R) -> Result<Vec<GainPair>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(format!("csv row {}: {e}", i + 2)))?;
        if rec.len() != 2 {
            return Err(Error::Config(format!(
                "csv row {}: expected 2 columns, got {}",
                i + 2,
                rec.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Config(format!("csv row {}: {e}: {s:?}", i + 2)))
        };
        out.push(GainPair::new(parse(&rec[0])?, parse(&rec[1])?)?);
    }
    Ok(out)
}

/// Frame secrecy capacity: the mean of the per-block densities.
pub fn frame_capacity(alloc: &PowerAllocation, csi: &FrameCsi) -> Result<f64> {
    frame_capacity_of(alloc.gammas(), csi)
}

pub(crate) fn frame_capacity_of(gammas: &[f64], csi: &FrameCsi) -> Result<f64> {
    if gammas.len() != csi.horizon() {
        return Err(Error::LengthMismatch {
            expected: csi.horizon(),
            actual: gammas.len(),
        });
    }
    let total: f64 = gammas
        .iter()
        .zip(csi.pairs())
        .map(|(&g, p)| density(g, p))
        .sum();
    Ok(total / csi.horizon() as f64)
}

/// Moments of the gap seen through one CSI view.
///
/// `sum_pos` is `E{(delta + 2 beta) 1{delta > 0}}`; the remaining fields follow
/// their names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapMoments {
    pub mean: f64,
    pub mean_pos: f64,
    pub sq_pos: f64,
    pub denom_pos: f64,
    pub sum_pos: f64,
}

impl GapMoments {
    fn from_weighted<I: IntoIterator<Item = (GainPair, f64)>>(points: I) -> Self {
        let mut m = Self {
            mean: 0.0,
            mean_pos: 0.0,
            sq_pos: 0.0,
            denom_pos: 0.0,
            sum_pos: 0.0,
        };
        for (p, w) in points {
            let d = p.delta();
            m.mean += w * d;
            if d > 0.0 {
                let s = d + 2.0 * p.beta;
                m.mean_pos += w * d;
                m.sq_pos += w * d * d;
                m.denom_pos += w * s * d;
                m.sum_pos += w * s;
            }
        }
        m
    }

    /// Closed forms for independent exponential gains with means `a`, `b`.
    /// The gap has density `e^{-x/a}/(a+b)` on `x > 0`.
    fn exponential(a: f64, b: f64) -> Self {
        let s = a + b;
        let sq_pos = 2.0 * a.powi(3) / s;
        Self {
            mean: a - b,
            mean_pos: a * a / s,
            sq_pos,
            denom_pos: sq_pos + 2.0 * a.powi(3) * b / (s * s),
            sum_pos: a + a * b * (a - b) / (s * s),
        }
    }

    /// Moments over the product of two empirical marginals, using sorted
    /// `betas` and prefix sums so the cost is `O(n log n)`.
    fn product(alphas: &[f64], sorted_betas: &[f64]) -> Self {
        let nb = sorted_betas.len() as f64;
        let mut s1 = Vec::with_capacity(sorted_betas.len() + 1);
        let mut s2 = Vec::with_capacity(sorted_betas.len() + 1);
        s1.push(0.0);
        s2.push(0.0);
        for &b in sorted_betas {
            s1.push(s1.last().unwrap() + b);
            s2.push(s2.last().unwrap() + b * b);
        }
        let mean_b = s1[sorted_betas.len()] / nb;
        let mut m = Self {
            mean: 0.0,
            mean_pos: 0.0,
            sq_pos: 0.0,
            denom_pos: 0.0,
            sum_pos: 0.0,
        };
        for &a in alphas {
            let k = sorted_betas.partition_point(|&b| b < a);
            let c = k as f64;
            let (b1, b2) = (s1[k], s2[k]);
            m.mean += a - mean_b;
            m.mean_pos += (a * c - b1) / nb;
            m.sq_pos += (a * a * c - 2.0 * a * b1 + b2) / nb;
            m.denom_pos += (a * a * c - b2) / nb;
            m.sum_pos += (a * c + b1) / nb;
        }
        let na = alphas.len() as f64;
        m.mean /= na;
        m.mean_pos /= na;
        m.sq_pos /= na;
        m.denom_pos /= na;
        m.sum_pos /= na;
        m
    }
}

/// Distribution moments consumed by the causal policies.
///
/// The `e_alpha*` fields are the same quantities with the eavesdropper gain
/// replaced by zero, which is how a transmitter that only observes `alpha`
/// sees the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub e_delta: f64,
    pub e_delta_pos: f64,
    pub e_delta_sq_pos: f64,
    pub e_denom_pos: f64,
    pub e_sum_pos: f64,
    pub e_alpha: f64,
    pub e_alpha_pos: f64,
    pub e_alpha_sq_pos: f64,
    pub e_alpha_denom_pos: f64,
    pub e_alpha_sum_pos: f64,
}

impl MomentSet {
    fn from_views(full: GapMoments, legit: GapMoments) -> Self {
        Self {
            e_delta: full.mean,
            e_delta_pos: full.mean_pos,
            e_delta_sq_pos: full.sq_pos,
            e_denom_pos: full.denom_pos,
            e_sum_pos: full.sum_pos,
            e_alpha: legit.mean,
            e_alpha_pos: legit.mean_pos,
            e_alpha_sq_pos: legit.sq_pos,
            e_alpha_denom_pos: legit.denom_pos,
            e_alpha_sum_pos: legit.sum_pos,
        }
    }

    pub fn full(&self) -> GapMoments {
        GapMoments {
            mean: self.e_delta,
            mean_pos: self.e_delta_pos,
            sq_pos: self.e_delta_sq_pos,
            denom_pos: self.e_denom_pos,
            sum_pos: self.e_sum_pos,
        }
    }

    pub fn legitimate(&self) -> GapMoments {
        GapMoments {
            mean: self.e_alpha,
            mean_pos: self.e_alpha_pos,
            sq_pos: self.e_alpha_sq_pos,
            denom_pos: self.e_alpha_denom_pos,
            sum_pos: self.e_alpha_sum_pos,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Discrete {
        points: Vec<GainPair>,
        probs: Vec<f64>,
        cdf: Vec<f64>,
    },
    Exponential {
        mean_alpha: f64,
        mean_beta: f64,
    },
    Empirical {
        samples: Vec<GainPair>,
        independent: bool,
        sorted_betas: Vec<f64>,
    },
}

/// Joint distribution of the per-block gain pair.
#[derive(Debug, Clone, PartialEq)]
pub struct GainDistribution {
    kind: Kind,
}

impl GainDistribution {
    /// Finite support with explicit joint probabilities.
    pub fn discrete(support: Vec<(GainPair, f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(domain("discrete distribution needs at least one point"));
        }
        let mut points = Vec::with_capacity(support.len());
        let mut probs = Vec::with_capacity(support.len());
        for (p, w) in support {
            GainPair::new(p.alpha, p.beta)?;
            if !(w.is_finite() && w > 0.0) {
                return Err(domain(format!("probabilities must be positive, got {w}")));
            }
            points.push(p);
            probs.push(w);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(domain(format!("probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            kind: Kind::Discrete { points, probs, cdf },
        })
    }

    /// Product of two discrete marginals `(value, probability)`.
    pub fn independent_discrete(alpha: &[(f64, f64)], beta: &[(f64, f64)]) -> Result<Self> {
        for (name, marginal) in [("alpha", alpha), ("beta", beta)] {
            let total: f64 = marginal.iter().map(|m| m.1).sum();
            if marginal.is_empty() || (total - 1.0).abs() > PROB_SUM_TOL {
                return Err(domain(format!("{name} marginal sums to {total}, not 1")));
            }
        }
        let mut support = Vec::with_capacity(alpha.len() * beta.len());
        for &(a, pa) in alpha {
            for &(b, pb) in beta {
                support.push((GainPair::new(a, b)?, pa * pb));
            }
        }
        // Products of marginals can drift from 1 by a few ulps.
        let total: f64 = support.iter().map(|s| s.1).sum();
        for s in &mut support {
            s.1 /= total;
        }
        Self::discrete(support)
    }

    /// Point mass at `pair`.
    pub fn degenerate(pair: GainPair) -> Result<Self> {
        Self::discrete(vec![(pair, 1.0)])
    }

    /// Independent exponential power gains (Rayleigh amplitude fading).
    pub fn exponential(mean_alpha: f64, mean_beta: f64) -> Result<Self> {
        if !(mean_alpha.is_finite() && mean_beta.is_finite() && mean_alpha > 0.0 && mean_beta > 0.0)
        {
            return Err(domain(format!(
                "exponential means must be positive, got {mean_alpha}, {mean_beta}"
            )));
        }
        Ok(Self {
            kind: Kind::Exponential {
                mean_alpha,
                mean_beta,
            },
        })
    }

    /// Uniform weight over `samples`. With `independent`, alpha and beta are
    /// drawn from their empirical marginals separately.
    pub fn empirical(samples: Vec<GainPair>, independent: bool) -> Result<Self> {
        if samples.is_empty() {
            return Err(domain("empirical distribution needs at least one sample"));
        }
        for p in &samples {
            GainPair::new(p.alpha, p.beta)?;
        }
        let mut sorted_betas: Vec<f64> = samples.iter().map(|p| p.beta).collect();
        sorted_betas.sort_by(f64::total_cmp);
        Ok(Self {
            kind: Kind::Empirical {
                samples,
                independent,
                sorted_betas,
            },
        })
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::Discrete { .. } => "discrete",
            Kind::Exponential { .. } => "exponential",
            Kind::Empirical { .. } => "empirical",
        }
    }

    /// Support points with probabilities, when the support is finite.
    /// Independent empirical distributions expand to the product support.
    pub fn finite_support(&self) -> Option<Vec<(GainPair, f64)>> {
        match &self.kind {
            Kind::Discrete { points, probs, .. } => {
                Some(points.iter().copied().zip(probs.iter().copied()).collect())
            }
            Kind::Exponential { .. } => None,
            Kind::Empirical {
                samples,
                independent: false,
                ..
            } => {
                let w = 1.0 / samples.len() as f64;
                Some(samples.iter().map(|&p| (p, w)).collect())
            }
            Kind::Empirical {
                samples,
                independent: true,
                ..
            } => {
                let w = 1.0 / (samples.len() * samples.len()) as f64;
                Some(
                    samples
                        .iter()
                        .flat_map(|a| {
                            samples.iter().map(move |b| {
                                (
                                    GainPair {
                                        alpha: a.alpha,
                                        beta: b.beta,
                                    },
                                    w,
                                )
                            })
                        })
                        .collect(),
                )
            }
        }
    }

    /// `f(gamma) = E{log2((1 + alpha*gamma) / (1 + beta*gamma))}` without the
    /// positive-part clamp, so the result may be negative.
    pub fn f_eval(&self, gamma: f64) -> Result<f64> {
        check_power(gamma)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            Kind::Discrete { points, probs, .. } => points
                .iter()
                .zip(probs)
                .map(|(p, w)| w * log_ratio(gamma, p))
                .sum(),
            &Kind::Exponential {
                mean_alpha,
                mean_beta,
            } => {
                // E{g(X)} = g(0) + int_0^inf g'(t) P(X > t) dt with g = log2(1 + gamma t).
                let integrand =
                    |t: f64| ((-t / mean_alpha).exp() - (-t / mean_beta).exp()) / (1.0 + gamma * t);
                gamma / LN_2 * exp_integral(integrand, mean_alpha.max(mean_beta))
            }
            Kind::Empirical {
                samples,
                independent: false,
                ..
            } => samples.iter().map(|p| log_ratio(gamma, p)).sum::<f64>() / samples.len() as f64,
            Kind::Empirical {
                samples,
                independent: true,
                ..
            } => {
                let n = samples.len() as f64;
                let la: f64 = samples.iter().map(|p| (p.alpha * gamma).ln_1p()).sum();
                let lb: f64 = samples.iter().map(|p| (p.beta * gamma).ln_1p()).sum();
                (la - lb) / n / LN_2
            }
        })
    }

    /// `E{c_s(gamma, alpha, beta)}` with the positive-part clamp.
    pub fn expected_density(&self, gamma: f64) -> Result<f64> {
        check_power(gamma)?;
        if gamma == 0.0 {
            return Ok(0.0);
        }
        Ok(match &self.kind {
            Kind::Discrete { points, probs, .. } => points
                .iter()
                .zip(probs)
                .map(|(p, w)| w * density(gamma, p))
                .sum(),
            &Kind::Exponential {
                mean_alpha,
                mean_beta,
            } => {
                // [g(a) - g(b)]^+ = int g'(t) 1{b < t < a} dt, independence splits the probability.
                let integrand = |t: f64| {
                    (-t / mean_alpha).exp() * -(-t / mean_beta).exp_m1() / (1.0 + gamma * t)
                };
                gamma / LN_2 * exp_integral(integrand, mean_alpha.max(mean_beta))
            }
            Kind::Empirical {
                samples,
                independent: false,
                ..
            } => samples.iter().map(|p| density(gamma, p)).sum::<f64>() / samples.len() as f64,
            Kind::Empirical {
                samples,
                independent: true,
                sorted_betas,
            } => {
                let g = |x: f64| (x * gamma).ln_1p() / LN_2;
                let mut prefix = Vec::with_capacity(sorted_betas.len() + 1);
                prefix.push(0.0);
                for &b in sorted_betas {
                    prefix.push(prefix.last().unwrap() + g(b));
                }
                let total: f64 = samples
                    .iter()
                    .map(|p| {
                        let k = sorted_betas.partition_point(|&b| b < p.alpha);
                        k as f64 * g(p.alpha) - prefix[k]
                    })
                    .sum();
                total / (samples.len() as f64).powi(2)
            }
        })
    }

    /// Moments of the gap under full CSI and under the legitimate-only view.
    pub fn moments(&self) -> MomentSet {
        match &self.kind {
            Kind::Discrete { points, probs, .. } => {
                let w = || points.iter().copied().zip(probs.iter().copied());
                MomentSet::from_views(
                    GapMoments::from_weighted(w()),
                    GapMoments::from_weighted(w().map(|(p, w)| (p.legitimate_view(), w))),
                )
            }
            &Kind::Exponential {
                mean_alpha,
                mean_beta,
            } => MomentSet::from_views(
                GapMoments::exponential(mean_alpha, mean_beta),
                GapMoments::exponential(mean_alpha, 0.0),
            ),
            Kind::Empirical {
                samples,
                independent,
                sorted_betas,
            } => {
                let w = 1.0 / samples.len() as f64;
                let legit =
                    GapMoments::from_weighted(samples.iter().map(|p| (p.legitimate_view(), w)));
                let full = if *independent {
                    let alphas: Vec<f64> = samples.iter().map(|p| p.alpha).collect();
                    GapMoments::product(&alphas, sorted_betas)
                } else {
                    GapMoments::from_weighted(samples.iter().map(|&p| (p, w)))
                };
                MomentSet::from_views(full, legit)
            }
        }
    }

    /// Draws one gain pair.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> GainPair {
        match &self.kind {
            Kind::Discrete { points, cdf, .. } => {
                let u: f64 = rng.random();
                let i = cdf.partition_point(|&c| c <= u).min(points.len() - 1);
                points[i]
            }
            &Kind::Exponential {
                mean_alpha,
                mean_beta,
            } => {
                // Means were validated positive at construction.
                let a = Exp::new(1.0 / mean_alpha).unwrap().sample(rng);
                let b = Exp::new(1.0 / mean_beta).unwrap().sample(rng);
                GainPair { alpha: a, beta: b }
            }
            Kind::Empirical {
                samples,
                independent,
                ..
            } => {
                let i = rng.random_range(0..samples.len());
                if *independent {
                    let j = rng.random_range(0..samples.len());
                    GainPair {
                        alpha: samples[i].alpha,
                        beta: samples[j].beta,
                    }
                } else {
                    samples[i]
                }
            }
        }
    }
}

fn check_power(gamma: f64) -> Result<()> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(domain(format!(
            "power must be finite and >= 0, got {gamma}"
        )));
    }
    Ok(())
}

/// Integrates an integrand decaying at least like `e^{-t/scale}` over `[0, inf)`.
fn exp_integral<F: Fn(f64) -> f64>(f: F, scale: f64) -> f64 {
    // e^{-45} is below the relative tolerance by many orders of magnitude.
    let upper = 45.0 * scale;
    // Splitting at the scale keeps the sharp 1/(1 + gamma t) head in its own panel.
    quad::integrate(&f, 0.0, scale, INTEGRATION_REL_TOL, 1e-300)
        + quad::integrate(&f, scale, upper, INTEGRATION_REL_TOL, 1e-300)
}

/// Draws `horizon` i.i.d. gain pairs from a generator seeded with `seed`.
pub fn sample_frame(dist: &GainDistribution, horizon: usize, seed: u64) -> Result<FrameCsi> {
    if horizon == 0 {
        return Err(domain("horizon must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..horizon).map(|_| dist.sample_pair(&mut rng)).collect();
    Ok(FrameCsi { pairs })
}
