use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::RobustnessAxis;
use crate::sampler::{check_sizes, DEFAULT_SIZES};
use crate::scheme::SchemeConfig;

/// An evaluation target. Only the SBIC test split is in-distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Target {
    #[serde(rename = "sbic-test")]
    SbicTest,
    #[serde(rename = "hatexplain")]
    HateXplain,
    #[serde(rename = "hs18")]
    Hs18,
    #[serde(rename = "ethos")]
    Ethos,
}

impl Target {
    pub const ALL: [Target; 4] = [Target::SbicTest, Target::HateXplain, Target::Hs18, Target::Ethos];

    pub fn as_str(self) -> &'static str {
        match self {
            Target::SbicTest => "sbic-test",
            Target::HateXplain => "hatexplain",
            Target::Hs18 => "hs18",
            Target::Ethos => "ethos",
        }
    }

    pub fn is_ood(self) -> bool {
        self != Target::SbicTest
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Target {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Target::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown target `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnowledgeStage {
    Atomic,
    Stereoset,
}

impl KnowledgeStage {
    pub fn file_name(self) -> &'static str {
        match self {
            KnowledgeStage::Atomic => crate::knowledge::ATOMIC_STAGE_FILE,
            KnowledgeStage::Stereoset => crate::knowledge::STEREOSET_STAGE_FILE,
        }
    }
}

/// Record files produced by `ingest`. Relative paths are resolved against
/// the config file's directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    /// All SBIC records; the training pool is every non-test record.
    pub sbic: PathBuf,
    pub hatexplain: Option<PathBuf>,
    pub hs18: Option<PathBuf>,
    pub ethos: Option<PathBuf>,
    /// Directory holding the knowledge stage files.
    pub knowledge_dir: Option<PathBuf>,
}

impl DataPaths {
    pub fn for_target(&self, t: Target) -> Option<&Path> {
        match t {
            Target::SbicTest => Some(&self.sbic),
            Target::HateXplain => self.hatexplain.as_deref(),
            Target::Hs18 => self.hs18.as_deref(),
            Target::Ethos => self.ethos.as_deref(),
        }
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.sbic);
        for p in [&mut self.hatexplain, &mut self.hs18, &mut self.ethos, &mut self.knowledge_dir]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidationPolicy {
    /// Fixed validation size; by default each cell validates on as many
    /// posts as it trains on.
    #[serde(default)]
    pub size: Option<usize>,
    /// Use the training quotas. When false, validation is a uniform draw.
    #[serde(default = "yes")]
    pub stratified: bool,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self { size: None, stratified: true }
    }
}

fn yes() -> bool {
    true
}

fn default_sizes() -> Vec<usize> {
    DEFAULT_SIZES.to_vec()
}

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

fn default_targets() -> Vec<Target> {
    vec![Target::SbicTest]
}

fn default_grid() -> String {
    "default-v1".into()
}

/// One experiment: a scheme and knowledge setting run over every
/// (size, seed) cell and every hyperparameter config of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Scheme name as accepted by [`SchemeConfig::named`].
    pub scheme: String,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Knowledge stages in training order.
    #[serde(default)]
    pub knowledge: Vec<KnowledgeStage>,
    #[serde(default = "default_targets")]
    pub targets: Vec<Target>,
    /// Generator descriptor, e.g. `gold-echo`, `noisy-gold:0.3` or
    /// `command:python adapter.py --train {train} ...`.
    pub generator: String,
    /// Grid name or path to a grid file.
    #[serde(default = "default_grid")]
    pub grid: String,
    #[serde(default)]
    pub validation: ValidationPolicy,
    #[serde(default)]
    pub robustness_axis: RobustnessAxis,
    pub data: DataPaths,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.data.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scheme_config(&self) -> Result<SchemeConfig> {
        SchemeConfig::named(&self.scheme)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::Config("at least one evaluation target is required".into()));
        }
        let unique: BTreeSet<u64> = self.seeds.iter().copied().collect();
        if unique.len() != self.seeds.len() {
            return Err(Error::Config("duplicate seeds".into()));
        }
        let stages: BTreeSet<KnowledgeStage> = self.knowledge.iter().copied().collect();
        if stages.len() != self.knowledge.len() {
            return Err(Error::Config("duplicate knowledge stage".into()));
        }
        if !self.knowledge.is_empty() && self.data.knowledge_dir.is_none() {
            return Err(Error::Config("knowledge stages need data.knowledge_dir".into()));
        }
        for &t in &self.targets {
            if self.data.for_target(t).is_none() {
                return Err(Error::Config(format!("target `{t}` has no data path")));
            }
        }
        if let Some(0) = self.validation.size {
            return Err(Error::Config("validation size must be positive".into()));
        }
        check_sizes(&self.sizes)?;
        self.scheme_config()?;
        Ok(())
    }
}

/// One hyperparameter setting handed to the generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl HyperParams {
    /// Stable identifier such as `lr1e-5_bs8`.
    pub fn id(&self) -> String {
        format!("lr{:e}_bs{}", self.learning_rate, self.batch_size)
    }
}

/// A named, versioned hyperparameter grid: the cross product of learning
/// rates and batch sizes at a fixed epoch budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub name: String,
    pub epochs: usize,
    pub learning_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
}

const BUILTIN_GRIDS: &[(&str, &str)] = &[("default-v1", include_str!("../../data/grids/default-v1.toml"))];

impl Grid {
    pub fn parse(text: &str) -> Result<Self> {
        let g: Grid = toml::from_str(text).map_err(|e| Error::Config(format!("grid: {e}")))?;
        if g.learning_rates.is_empty() || g.batch_sizes.is_empty() {
            return Err(Error::Config(format!("grid `{}` is empty", g.name)));
        }
        Ok(g)
    }

    /// A built-in grid by name, otherwise a grid file at that path.
    pub fn resolve(name_or_path: &str, base: &Path) -> Result<Self> {
        if let Some((_, text)) = BUILTIN_GRIDS.iter().find(|(n, _)| *n == name_or_path) {
            return Self::parse(text);
        }
        let path = base.join(name_or_path);
        if path.is_file() {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            return Self::parse(&text);
        }
        Err(Error::Config(format!("unknown grid `{name_or_path}`")))
    }

    /// Learning rate major, batch size minor.
    pub fn configs(&self) -> Vec<HyperParams> {
        let mut out = Vec::new();
        for &learning_rate in &self.learning_rates {
            for &batch_size in &self.batch_sizes {
                out.push(HyperParams {
                    learning_rate,
                    batch_size,
                    epochs: self.epochs,
                });
            }
        }
        out
    }
}
