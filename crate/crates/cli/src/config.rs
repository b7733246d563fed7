//! Run configuration, read from TOML.
//!
//! ```toml
//! [design]
//! n = 500            # training design size
//! seed = 1
//! n_enrich = 100     # validation points added by nested LHS (0 = none)
//! enrich_seed = 2
//!
//! [model]
//! kind = "demo"      # demo | ishigami | gfunction | external
//!
//! [evaluate]
//! workers = 4        # concurrent rows (0 = all cores)
//!
//! [fit]
//! q = 0.5
//! p_min = 1
//! p_max = 6
//! scale = "original" # original | log
//! joint = false      # fit on design + enrichment
//! early_stop = 3
//!
//! [sensitivity]
//! threshold = 0.01
//! grouping = "prefix" # prefix | none | path to a variable,group CSV
//! top = 10
//!
//! [study]
//! subset_size = 200
//! repetitions = 100
//! seed = 3
//!
//! [output]
//! dir = "out"
//!
//! [[variables]]      # external models only
//! name = "k"
//! kind = "uniform"
//! lower = 1.0
//! upper = 2.0
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparse_pce::{AdaptiveOptions, FitOptions, ResponseScale, Variable};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub design: DesignConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    #[serde(default)]
    pub fit: FitConfig,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(default)]
    pub study: Option<StudyConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub variables: Vec<Variable>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub seed: u64,
    #[serde(default)]
    pub n_enrich: usize,
    #[serde(default = "two")]
    pub enrich_seed: u64,
}

impl Default for DesignConfig {
    fn default() -> Self {
        DesignConfig {
            n: 100,
            seed: 1,
            n_enrich: 0,
            enrich_seed: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelConfig {
    /// The bundled aquifer cross-section.
    Demo {
        /// Alternative model data file.
        #[serde(default)]
        data: Option<PathBuf>,
        #[serde(default)]
        nx: Option<usize>,
        #[serde(default)]
        nz: Option<usize>,
    },
    Ishigami {
        #[serde(default = "ishigami_a")]
        a: f64,
        #[serde(default = "ishigami_b")]
        b: f64,
    },
    Gfunction {
        a: Vec<f64>,
    },
    /// Any program: `{params}` is replaced by a one-row CSV of inputs,
    /// `{response}` by the file the program must write a single number to,
    /// `{row}` by the design row index.
    External {
        command: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// Concurrent evaluations; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    #[serde(default = "half")]
    pub q: f64,
    #[serde(default = "one_usize")]
    pub p_min: usize,
    #[serde(default = "fifteen")]
    pub p_max: usize,
    #[serde(default)]
    pub scale: ResponseScale,
    #[serde(default)]
    pub joint: bool,
    /// Consecutive non-improving degrees before the sweep stops; 0 sweeps all.
    #[serde(default = "three")]
    pub early_stop: usize,
    #[serde(default)]
    pub max_terms: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            q: 0.5,
            p_min: 1,
            p_max: 15,
            scale: ResponseScale::Original,
            joint: false,
            early_stop: 3,
            max_terms: None,
        }
    }
}

impl FitConfig {
    pub fn options(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            p_min: self.p_min,
            p_max: self.p_max,
            q: self.q,
            early_stop: (self.early_stop > 0).then_some(self.early_stop),
            fit: FitOptions {
                scale: self.scale,
                max_terms: self.max_terms,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityConfig {
    #[serde(default = "threshold")]
    pub threshold: f64,
    #[serde(default = "prefix")]
    pub grouping: String,
    #[serde(default = "ten")]
    pub top: usize,
    /// Grid points per univariate-effect curve.
    #[serde(default = "fifty_one")]
    pub effect_points: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        SensitivityConfig {
            threshold: 0.01,
            grouping: "prefix".into(),
            top: 10,
            effect_points: 51,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub subset_size: usize,
    pub repetitions: usize,
    #[serde(default = "three_u64")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: out_dir() }
    }
}

fn one() -> u64 {
    1
}
fn two() -> u64 {
    2
}
fn three_u64() -> u64 {
    3
}
fn one_usize() -> usize {
    1
}
fn ten() -> usize {
    10
}
fn fifteen() -> usize {
    15
}
fn fifty_one() -> usize {
    51
}
fn three() -> usize {
    3
}
fn half() -> f64 {
    0.5
}
fn threshold() -> f64 {
    0.01
}
fn ishigami_a() -> f64 {
    7.0
}
fn ishigami_b() -> f64 {
    0.1
}
fn prefix() -> String {
    "prefix".into()
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).context("invalid configuration")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.design.n == 0 {
            bail!("design.n must be positive");
        }
        if self.fit.p_min == 0 || self.fit.p_min > self.fit.p_max {
            bail!("fit: empty degree range {}..={}", self.fit.p_min, self.fit.p_max);
        }
        if !(self.fit.q > 0.0 && self.fit.q <= 1.0) {
            bail!("fit.q must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.sensitivity.threshold) {
            bail!("sensitivity.threshold must lie in [0, 1]");
        }
        if self.fit.joint && self.design.n_enrich == 0 {
            bail!("fit.joint needs design.n_enrich > 0");
        }
        match &self.model {
            ModelConfig::External { command } => {
                if self.variables.is_empty() {
                    bail!("external models need [[variables]]");
                }
                if !command.contains("{params}") || !command.contains("{response}") {
                    bail!("external command must reference {{params}} and {{response}}");
                }
            }
            _ if !self.variables.is_empty() => {
                bail!("[[variables]] only apply to external models; built-in models carry their own inputs")
            }
            _ => {}
        }
        if let Some(s) = &self.study {
            if s.repetitions == 0 || s.subset_size == 0 {
                bail!("study needs positive subset_size and repetitions");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
