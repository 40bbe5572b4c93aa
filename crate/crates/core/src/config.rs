//! TOML run configuration shared by the CLI subcommands.
//!
//! ```toml
//! spec_version = 1
//! horizon = 4
//! power = 1.0
//! policies = ["blind", "low-snr", "waterfill-acausal"]
//! n_frames = 100000
//! seed = 7
//!
//! [distribution]
//! kind = "exponential"
//! mean_alpha = 2.0
//! mean_beta = 1.0
//! ```
//!
//! Relative paths (`samples_csv`, `csi.path`) are resolved against the
//! directory containing the config file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{read_pairs_csv, FrameCsi, GainDistribution, GainPair};
use crate::error::{Error, Result};
use crate::policy::PolicyId;

pub const SPEC_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(Error::Config(format!(
                "unknown format `{other}`, expected csv or json"
            ))),
        }
    }
}

/// Gain distribution as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistributionSpec {
    /// Either a joint `support` of `[alpha, beta, prob]` rows or two
    /// independent marginals of `[value, prob]` rows.
    Discrete {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Vec<[f64; 3]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha_marginal: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        beta_marginal: Option<Vec<[f64; 2]>>,
    },
    Exponential {
        mean_alpha: f64,
        mean_beta: f64,
    },
    /// Samples inline as `[alpha, beta]` rows or in a CSV with header `alpha,beta`.
    Empirical {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples: Option<Vec<[f64; 2]>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        samples_csv: Option<PathBuf>,
        #[serde(default)]
        independent: bool,
    },
}

impl DistributionSpec {
    pub fn build(&self, base: &Path) -> Result<GainDistribution> {
        match self {
            Self::Discrete {
                support,
                alpha_marginal,
                beta_marginal,
            } => match (support, alpha_marginal, beta_marginal) {
                (Some(rows), None, None) => {
                    let support = rows
                        .iter()
                        .map(|&[a, b, p]| Ok((GainPair::new(a, b)?, p)))
                        .collect::<Result<Vec<_>>>()?;
                    GainDistribution::discrete(support)
                }
                (None, Some(a), Some(b)) => {
                    let a: Vec<(f64, f64)> = a.iter().map(|&[v, p]| (v, p)).collect();
                    let b: Vec<(f64, f64)> = b.iter().map(|&[v, p]| (v, p)).collect();
                    GainDistribution::independent_discrete(&a, &b)
                }
                _ => Err(Error::Config(
                    "discrete distribution needs either `support` or both `alpha_marginal` and `beta_marginal`"
                        .into(),
                )),
            },
            Self::Exponential {
                mean_alpha,
                mean_beta,
            } => GainDistribution::exponential(*mean_alpha, *mean_beta),
            Self::Empirical {
                samples,
                samples_csv,
                independent,
            } => {
                let pairs = match (samples, samples_csv) {
                    (Some(rows), None) => rows
                        .iter()
                        .map(|&[a, b]| GainPair::new(a, b))
                        .collect::<Result<Vec<_>>>()?,
                    (None, Some(path)) => {
                        let path = base.join(path);
                        let file = fs::File::open(&path).map_err(|e| {
                            Error::Config(format!("cannot open samples {}: {e}", path.display()))
                        })?;
                        read_pairs_csv(file)?
                    }
                    _ => {
                        return Err(Error::Config(
                            "empirical distribution needs exactly one of `samples` or `samples_csv`".into(),
                        ))
                    }
                };
                GainDistribution::empirical(pairs, *independent)
            }
        }
    }
}

/// Realized frame gains for the `waterfill` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsiSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

impl CsiSpec {
    pub fn build(&self, base: &Path) -> Result<FrameCsi> {
        match (&self.pairs, &self.path) {
            (Some(rows), None) => {
                let gains: Vec<(f64, f64)> = rows.iter().map(|&[a, b]| (a, b)).collect();
                FrameCsi::from_gains(&gains)
            }
            (None, Some(path)) => load_csi(&base.join(path)),
            _ => Err(Error::Config(
                "csi needs exactly one of `pairs` or `path`".into(),
            )),
        }
    }
}

pub(crate) fn load_csi(path: &Path) -> Result<FrameCsi> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open csi {}: {e}", path.display())))?;
    FrameCsi::new(read_pairs_csv(file)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// Gains of each block observed before its power is chosen.
    #[default]
    Causal,
    /// Powers chosen from the distribution alone.
    Blind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub kind: OracleKind,
    /// Blind oracle only: reward `E[c_s]` instead of the unclamped `f`.
    #[serde(default = "yes")]
    pub clamped: bool,
}

impl Default for OracleSpec {
    fn default() -> Self {
        Self {
            kind: OracleKind::Causal,
            clamped: true,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_n_frames() -> usize {
    10_000
}

fn default_grid_points() -> usize {
    1001
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub policies: Vec<PolicyId>,
    #[serde(default = "default_n_frames")]
    pub n_frames: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// Average powers to run instead of `power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csi: Option<CsiSpec>,
    #[serde(default, skip_serializing_if = "is_default")]
    pub oracle: OracleSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            spec_version: SPEC_VERSION,
            horizon: None,
            power: None,
            policies: Vec::new(),
            n_frames: default_n_frames(),
            seed: 0,
            grid_points: default_grid_points(),
            sweep: None,
            out: None,
            format: OutputFormat::Csv,
            distribution: None,
            csi: None,
            oracle: OracleSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.spec_version != SPEC_VERSION {
            return bad(format!(
                "unsupported spec_version {}, this build reads {SPEC_VERSION}",
                self.spec_version
            ));
        }
        if self.horizon == Some(0) {
            return bad("horizon must be >= 1".into());
        }
        if let Some(p) = self.power {
            if !p.is_finite() || p < 0.0 {
                return bad(format!("power must be finite and >= 0, got {p}"));
            }
        }
        if self.n_frames == 0 {
            return bad("n_frames must be >= 1".into());
        }
        if self.grid_points < 2 {
            return bad("grid_points must be >= 2".into());
        }
        if let Some(sweep) = &self.sweep {
            if sweep.is_empty() {
                return bad("sweep must list at least one power".into());
            }
            if sweep.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return bad("sweep powers must be finite and >= 0".into());
            }
            if sweep.windows(2).any(|w| w[1] <= w[0]) {
                return bad("sweep powers must be strictly increasing".into());
            }
        }
        Ok(())
    }

    pub fn require_horizon(&self) -> Result<usize> {
        self.horizon
            .ok_or_else(|| Error::Config("config is missing `horizon`".into()))
    }

    pub fn require_power(&self) -> Result<f64> {
        self.power
            .ok_or_else(|| Error::Config("config is missing `power`".into()))
    }

    /// Powers to evaluate: the sweep if present, otherwise `[power]`.
    pub fn powers(&self) -> Result<Vec<f64>> {
        match &self.sweep {
            Some(s) => Ok(s.clone()),
            None => Ok(vec![self.require_power()?]),
        }
    }

    pub fn require_policies(&self) -> Result<&[PolicyId]> {
        if self.policies.is_empty() {
            return Err(Error::Config(format!(
                "config lists no policies; valid ids: {}",
                PolicyId::valid_ids()
            )));
        }
        Ok(&self.policies)
    }

    pub fn build_distribution(&self, base: &Path) -> Result<GainDistribution> {
        self.distribution
            .as_ref()
            .ok_or_else(|| Error::Config("config is missing `[distribution]`".into()))?
            .build(base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
spec_version = 1
horizon = 4
power = 1.0
policies = ["blind", "low-snr", "waterfill-acausal"]
n_frames = 2000
seed = 11
grid_points = 501
sweep = [0.01, 0.1, 1.0, 10.0]
out = "out/results.csv"
format = "json"

[distribution]
kind = "discrete"
support = [[2.0, 1.0, 0.5], [1.0, 2.0, 0.5]]

[csi]
pairs = [[2.0, 1.0], [0.5, 0.25]]

[oracle]
kind = "blind"
clamped = false
"#;

    #[test]
    fn round_trip() {
        let cfg = RunConfig::parse(FULL).unwrap();
        assert_eq!(cfg.policies.len(), 3);
        assert_eq!(cfg.format, OutputFormat::Json);
        assert_eq!(cfg.oracle.kind, OracleKind::Blind);
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);

        let minimal = RunConfig::parse("spec_version = 1\npower = 2.5\n").unwrap();
        assert_eq!(minimal.n_frames, 10_000);
        assert_eq!(
            RunConfig::parse(&minimal.to_toml().unwrap()).unwrap(),
            minimal
        );
    }

    #[test]
    fn round_trip_every_distribution_kind() {
        let specs = [
            DistributionSpec::Exponential {
                mean_alpha: 0.1,
                mean_beta: 1.0 / 3.0,
            },
            DistributionSpec::Discrete {
                support: None,
                alpha_marginal: Some(vec![[1.0, 0.25], [3.0, 0.75]]),
                beta_marginal: Some(vec![[0.5, 1.0]]),
            },
            DistributionSpec::Empirical {
                samples: Some(vec![[1.0, 0.5], [2.0, 0.125]]),
                samples_csv: None,
                independent: true,
            },
            DistributionSpec::Empirical {
                samples: None,
                samples_csv: Some("gains.csv".into()),
                independent: false,
            },
        ];
        for spec in specs {
            let cfg = RunConfig {
                distribution: Some(spec),
                ..RunConfig::default()
            };
            let text = cfg.to_toml().unwrap();
            assert_eq!(RunConfig::parse(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn builds_distributions() {
        let cfg = RunConfig::parse(FULL).unwrap();
        let d = cfg.build_distribution(Path::new(".")).unwrap();
        assert_eq!(d.finite_support().unwrap().len(), 2);
        let csi = cfg.csi.unwrap().build(Path::new(".")).unwrap();
        assert_eq!(csi.horizon(), 2);

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("g.csv"), "alpha,beta\n1,0.5\n2,1\n").unwrap();
        let spec = DistributionSpec::Empirical {
            samples: None,
            samples_csv: Some("g.csv".into()),
            independent: false,
        };
        let d = spec.build(dir.path()).unwrap();
        assert_eq!(d.moments().e_delta, 0.75);
    }

    #[test]
    fn rejects_bad_configs() {
        let cases = [
            "spec_version = 2",
            "spec_version = 1\nhorizon = 0",
            "spec_version = 1\npower = -1.0",
            "spec_version = 1\nn_frames = 0",
            "spec_version = 1\nsweep = [1.0, 0.5]",
            "spec_version = 1\nsweep = [1.0, 1.0]",
            "spec_version = 1\npolicies = [\"optimal\"]",
            "spec_version = 1\nformat = \"xml\"",
            "spec_version = 1\nunknown_key = 3",
            "horizon = 3",
        ];
        for text in cases {
            assert!(
                matches!(RunConfig::parse(text), Err(Error::Config(_))),
                "{text}"
            );
        }
        let err = RunConfig::parse("spec_version = 1\npolicies = [\"optimal\"]").unwrap_err();
        assert!(err.to_string().contains("semi-blind-intermediate"), "{err}");
    }

    #[test]
    fn incomplete_distribution_specs() {
        let base = Path::new(".");
        let d = DistributionSpec::Discrete {
            support: None,
            alpha_marginal: Some(vec![[1.0, 1.0]]),
            beta_marginal: None,
        };
        assert!(d.build(base).is_err());
        let e = DistributionSpec::Empirical {
            samples: None,
            samples_csv: None,
            independent: false,
        };
        assert!(e.build(base).is_err());
        assert!(CsiSpec {
            pairs: None,
            path: None
        }
        .build(base)
        .is_err());
    }
}
