//! Experiment configuration: a strict TOML document, overridable by flags.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dimension::MetricTag;
use crate::error::{Error, Result};
use crate::schottky::{BuildParams, LimitMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScaleRange {
    pub hi: f64,
    pub lo: f64,
    pub count: usize,
}

impl Default for ScaleRange {
    fn default() -> Self {
        Self { hi: 2.0, lo: 1e-5, count: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    pub resolution: usize,
    pub margin: f64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        let p = BuildParams::default();
        Self { resolution: p.resolution, margin: p.margin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConstructionConfig {
    pub t0: f64,
    pub power_cap: u32,
    pub slack: f64,
    pub chain_separation: f64,
    /// Test flag: put every generator's fixed points on one chain.
    pub forced_shared_chain: bool,
}

impl Default for ConstructionConfig {
    fn default() -> Self {
        let p = BuildParams::default();
        Self {
            t0: p.t0,
            power_cap: p.power_cap,
            slack: p.slack,
            chain_separation: p.chain_separation,
            forced_shared_chain: p.forced_shared_chain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    pub generators: usize,
    pub seed: u64,
    pub word_length: usize,
    pub scales: ScaleRange,
    pub metrics: Vec<MetricTag>,
    pub limit_mode: LimitMode,
    pub verification: VerificationConfig,
    pub construction: ConstructionConfig,
    /// Instances per invariant in the sanity battery.
    pub sanity_instances: usize,
    pub output_dir: PathBuf,
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            generators: 2,
            seed: 7,
            word_length: 10,
            scales: ScaleRange::default(),
            metrics: vec![MetricTag::Spherical, MetricTag::Heisenberg, MetricTag::Euclidean],
            limit_mode: LimitMode::WordFixedPoints,
            verification: VerificationConfig::default(),
            construction: ConstructionConfig::default(),
            sanity_instances: 1000,
            output_dir: PathBuf::from("chdim-out"),
            parallelism: 1,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Input(msg()))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check((2..=8).contains(&self.n), || format!("n = {} outside 2..=8", self.n))?;
        check((2..=8).contains(&self.generators), || format!("generators = {} outside 2..=8", self.generators))?;
        check((3..=16).contains(&self.word_length), || format!("word_length = {} outside 3..=16", self.word_length))?;
        let s = &self.scales;
        check(s.hi.is_finite() && s.lo > 0.0 && s.hi > s.lo, || "scales need 0 < lo < hi".into())?;
        check((s.hi / s.lo).log10() >= 1.5, || "scales must span at least 1.5 decades".into())?;
        check((6..=400).contains(&s.count), || format!("scales.count = {} outside 6..=400", s.count))?;
        check(!self.metrics.is_empty(), || "metrics must not be empty".into())?;
        let v = &self.verification;
        check((1..=4096).contains(&v.resolution), || {
            format!("verification.resolution = {} outside 1..=4096", v.resolution)
        })?;
        check(v.margin >= 0.0 && v.margin.is_finite(), || "verification.margin must be finite and >= 0".into())?;
        let c = &self.construction;
        check(c.t0 > 0.0 && c.t0 <= 50.0, || format!("construction.t0 = {} outside (0, 50]", c.t0))?;
        check((1..=1024).contains(&c.power_cap), || {
            format!("construction.power_cap = {} outside 1..=1024", c.power_cap)
        })?;
        check(c.slack >= 0.0 && c.slack <= 1.0, || "construction.slack outside [0, 1]".into())?;
        check(c.chain_separation >= 0.0 && c.chain_separation < 2.0, || {
            "construction.chain_separation outside [0, 2)".into()
        })?;
        check((1..=10_000_000).contains(&self.sanity_instances), || "sanity_instances outside 1..=1e7".into())?;
        check((1..=1024).contains(&self.parallelism), || {
            format!("parallelism = {} outside 1..=1024", self.parallelism)
        })?;
        Ok(())
    }

    pub fn build_params(&self) -> BuildParams {
        let c = &self.construction;
        BuildParams {
            n: self.n,
            k: self.generators,
            t0: c.t0,
            power_cap: c.power_cap,
            slack: c.slack,
            resolution: self.verification.resolution,
            margin: self.verification.margin,
            chain_separation: c.chain_separation,
            forced_shared_chain: c.forced_shared_chain,
        }
    }

    /// SHA-256 of the configuration without `parallelism` and `output_dir`,
    /// which do not affect results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.parallelism = 1;
        c.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
        assert_eq!(ExperimentConfig::from_toml("").unwrap(), c);
    }

    #[test]
    fn unknown_keys_and_ranges_rejected() {
        assert!(matches!(ExperimentConfig::from_toml("seeed = 3"), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml("[scales]\nhigh = 3.0"), Err(Error::Parse(_))));
        assert!(matches!(ExperimentConfig::from_toml("n = 1"), Err(Error::Input(_))));
        assert!(matches!(ExperimentConfig::from_toml("[scales]\nlo = 0.5"), Err(Error::Input(_))));
        assert!(matches!(ExperimentConfig::from_toml("metrics = [\"taxicab\"]"), Err(Error::Parse(_))));
    }

    #[test]
    fn hash_ignores_parallelism_and_output() {
        let a = ExperimentConfig::default();
        let b = ExperimentConfig { parallelism: 8, output_dir: "elsewhere".into(), ..a.clone() };
        assert_eq!(a.hash(), b.hash());
        let c = ExperimentConfig { seed: 8, ..a.clone() };
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
