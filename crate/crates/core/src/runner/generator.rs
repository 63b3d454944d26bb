//! Generators turn model inputs into generations. The harness never trains
//! anything itself: a generator is either an oracle mock or an external
//! command speaking the batch file protocol.
//!
//! Protocol for external commands: the harness writes `train.jsonl` and
//! `val.jsonl` (`{id, input, output}` per line) and `inputs.jsonl`
//! (`{id, input}` per line) into the cell's work directory, runs the
//! command through `sh -c`, and expects `outputs.jsonl` with one
//! `{id, generation}` line per input id and exit status 0.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use super::config::HyperParams;
use crate::corpus::{PostRecord, Source, Split, TargetType};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::rng::{HarnessRng, Stream};
use crate::scheme::{render_output, render_with_hs, LinearizedExample, SchemeConfig};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationInput {
    pub id: String,
    pub input: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub id: String,
    pub generation: String,
}

/// Everything a generator may use for one (size, seed, config) run.
pub struct GenerationJob<'a> {
    pub scheme: &'a SchemeConfig,
    pub size: usize,
    pub seed: u64,
    pub hp: HyperParams,
    pub train: &'a [LinearizedExample],
    pub validation: &'a [LinearizedExample],
    pub inputs: &'a [GenerationInput],
    /// Gold records aligned with `inputs`. Only oracle mocks read these;
    /// they are never written out for external commands.
    pub golds: &'a [&'a PostRecord],
    /// Knowledge stage files in training order.
    pub stages: &'a [PathBuf],
    pub workdir: &'a Path,
}

pub trait Generator: Send + Sync {
    fn name(&self) -> String;

    /// One generation per input, in input order.
    fn generate(&self, job: &GenerationJob<'_>) -> Result<Vec<Generation>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MockMode {
    GoldEcho,
    /// Flip the hate speech answer with this probability.
    NoisyGold(f64),
    ConstantNo,
    ConstantYes,
}

fn constant_record(hs: bool) -> PostRecord {
    PostRecord {
        id: String::new(),
        text: String::new(),
        offensive: hs,
        target_type: if hs { TargetType::Group } else { TargetType::None },
        groups: Vec::new(),
        implication: None,
        hs,
        source: Source::Sbic,
        split: Split::Test,
    }
}

/// Oracle generations from gold records. Noise draws come from the mock
/// stream of `seed`, one draw per record in order.
pub fn mock_generate(
    golds: &[&PostRecord],
    scheme: &SchemeConfig,
    mode: MockMode,
    seed: u64,
) -> Vec<Generation> {
    let mut rng = HarnessRng::new(seed, Stream::MockGenerator);
    let constant = |hs| render_output(&constant_record(hs), scheme);
    golds
        .iter()
        .map(|g| {
            let generation = match mode {
                MockMode::GoldEcho => render_output(g, scheme),
                MockMode::NoisyGold(p) => {
                    let flip = rng.unit() < p;
                    render_with_hs(g, scheme, g.hs != flip)
                }
                MockMode::ConstantNo => constant(false),
                MockMode::ConstantYes => constant(true),
            };
            Generation {
                id: g.id.clone(),
                generation,
            }
        })
        .collect()
}

pub struct MockGenerator {
    pub mode: MockMode,
}

impl Generator for MockGenerator {
    fn name(&self) -> String {
        match self.mode {
            MockMode::GoldEcho => "gold-echo".into(),
            MockMode::NoisyGold(p) => format!("noisy-gold:{p}"),
            MockMode::ConstantNo => "constant-no".into(),
            MockMode::ConstantYes => "constant-yes".into(),
        }
    }

    fn generate(&self, job: &GenerationJob<'_>) -> Result<Vec<Generation>> {
        if job.golds.len() != job.inputs.len() {
            return Err(Error::LengthMismatch {
                left: job.inputs.len(),
                right: job.golds.len(),
            });
        }
        Ok(mock_generate(job.golds, job.scheme, self.mode, job.seed))
    }
}

/// Single-quotes `s` for `sh`.
fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

/// Runs a shell command template. Placeholders: `{train}`, `{val}`,
/// `{inputs}`, `{outputs}`, `{workdir}`, `{stages}` (comma-joined paths),
/// `{lr}`, `{batch_size}`, `{epochs}`, `{seed}`, `{size}`.
pub struct CommandGenerator {
    pub template: String,
}

pub const TRAIN_FILE: &str = "train.jsonl";
pub const VAL_FILE: &str = "val.jsonl";
pub const INPUTS_FILE: &str = "inputs.jsonl";
pub const OUTPUTS_FILE: &str = "outputs.jsonl";
pub const LOG_FILE: &str = "adapter.log";

impl CommandGenerator {
    fn render(&self, job: &GenerationJob<'_>) -> String {
        let path = |name: &str| shell_quote(&job.workdir.join(name).to_string_lossy());
        let stages: Vec<String> = job.stages.iter().map(|p| p.to_string_lossy().into_owned()).collect();
        let values = [
            ("{train}", path(TRAIN_FILE)),
            ("{val}", path(VAL_FILE)),
            ("{inputs}", path(INPUTS_FILE)),
            ("{outputs}", path(OUTPUTS_FILE)),
            ("{workdir}", shell_quote(&job.workdir.to_string_lossy())),
            ("{stages}", shell_quote(&stages.join(","))),
            ("{lr}", format!("{:e}", job.hp.learning_rate)),
            ("{batch_size}", job.hp.batch_size.to_string()),
            ("{epochs}", job.hp.epochs.to_string()),
            ("{seed}", job.seed.to_string()),
            ("{size}", job.size.to_string()),
        ];
        let mut cmd = self.template.clone();
        for (k, v) in values {
            cmd = cmd.replace(k, &v);
        }
        cmd
    }
}

impl Generator for CommandGenerator {
    fn name(&self) -> String {
        format!("command:{}", self.template)
    }

    fn generate(&self, job: &GenerationJob<'_>) -> Result<Vec<Generation>> {
        let dir = job.workdir;
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        jsonl::write(&dir.join(TRAIN_FILE), job.train)?;
        jsonl::write(&dir.join(VAL_FILE), job.validation)?;
        jsonl::write(&dir.join(INPUTS_FILE), job.inputs)?;
        let outputs = dir.join(OUTPUTS_FILE);
        if outputs.exists() {
            std::fs::remove_file(&outputs).map_err(|e| Error::io(&outputs, e))?;
        }

        let log_path = dir.join(LOG_FILE);
        let log = File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let log_err = log.try_clone().map_err(|e| Error::io(&log_path, e))?;
        let status = Command::new("sh")
            .arg("-c")
            .arg(self.render(job))
            .current_dir(dir)
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(log_err)
            .status()
            .map_err(|e| Error::Generator(format!("could not start adapter: {e}")))?;
        if !status.success() {
            return Err(Error::Generator(format!(
                "adapter exited with {status}; see {}",
                log_path.display()
            )));
        }
        if !outputs.is_file() {
            return Err(Error::Generator(format!("adapter wrote no {OUTPUTS_FILE}")));
        }
        let generations: Vec<Generation> = jsonl::read(&outputs)?;
        align(job.inputs, generations)
    }
}

/// Orders `generations` like `inputs`, failing on missing, duplicate or
/// unexpected ids.
pub fn align(inputs: &[GenerationInput], generations: Vec<Generation>) -> Result<Vec<Generation>> {
    let mut by_id: HashMap<String, Generation> = HashMap::with_capacity(generations.len());
    for g in generations {
        if by_id.contains_key(&g.id) {
            return Err(Error::Generator(format!("duplicate generation for `{}`", g.id)));
        }
        by_id.insert(g.id.clone(), g);
    }
    let mut out = Vec::with_capacity(inputs.len());
    let mut missing = Vec::new();
    for i in inputs {
        match by_id.remove(&i.id) {
            Some(g) => out.push(g),
            None => missing.push(i.id.clone()),
        }
    }
    if !missing.is_empty() {
        let shown: Vec<&str> = missing.iter().take(5).map(String::as_str).collect();
        return Err(Error::Generator(format!(
            "{} missing generations (first: {})",
            missing.len(),
            shown.join(", ")
        )));
    }
    if let Some(extra) = by_id.keys().min() {
        return Err(Error::Generator(format!("generation for unknown id `{extra}`")));
    }
    Ok(out)
}

type Factory = Box<dyn Fn(Option<&str>) -> Result<Box<dyn Generator>> + Send + Sync>;

/// Generators by name. Descriptors look like `name` or `name:argument`.
pub struct GeneratorRegistry {
    factories: BTreeMap<String, Factory>,
}

fn no_arg(name: &str, arg: Option<&str>) -> Result<()> {
    match arg {
        None => Ok(()),
        Some(a) => Err(Error::Config(format!("generator `{name}` takes no argument, got `{a}`"))),
    }
}

impl GeneratorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register("gold-echo", |arg| {
            no_arg("gold-echo", arg)?;
            Ok(Box::new(MockGenerator { mode: MockMode::GoldEcho }))
        });
        r.register("constant-no", |arg| {
            no_arg("constant-no", arg)?;
            Ok(Box::new(MockGenerator { mode: MockMode::ConstantNo }))
        });
        r.register("constant-yes", |arg| {
            no_arg("constant-yes", arg)?;
            Ok(Box::new(MockGenerator { mode: MockMode::ConstantYes }))
        });
        r.register("noisy-gold", |arg| {
            let raw = arg.ok_or_else(|| Error::Config("noisy-gold needs a flip probability, e.g. noisy-gold:0.3".into()))?;
            let p: f64 = raw
                .parse()
                .map_err(|_| Error::Config(format!("bad flip probability `{raw}`")))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("flip probability {p} outside [0, 1]")));
            }
            Ok(Box::new(MockGenerator { mode: MockMode::NoisyGold(p) }))
        });
        r.register("command", |arg| match arg {
            Some(t) if !t.trim().is_empty() => Ok(Box::new(CommandGenerator { template: t.to_string() })),
            _ => Err(Error::Config("command generator needs a command template".into())),
        });
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(Option<&str>) -> Result<Box<dyn Generator>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }

    pub fn build(&self, descriptor: &str) -> Result<Box<dyn Generator>> {
        let (name, arg) = match descriptor.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (descriptor.trim(), None),
        };
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownGenerator(name.to_string()))?;
        factory(arg)
    }
}

impl Default for GeneratorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
