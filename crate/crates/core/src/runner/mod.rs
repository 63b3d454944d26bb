//! Experiment orchestration: build splits, run every (size, seed, config)
//! job through a generator, score, select the best config per cell by
//! validation F1, aggregate across seeds and compare experiments.

mod config;
mod generator;
mod report;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{DataPaths, ExperimentConfig, Grid, HyperParams, KnowledgeStage, Target, ValidationPolicy};
pub use generator::{
    align, mock_generate, CommandGenerator, Generation, GenerationInput, GenerationJob, Generator,
    GeneratorRegistry, MockGenerator, MockMode, INPUTS_FILE, LOG_FILE, OUTPUTS_FILE, TRAIN_FILE, VAL_FILE,
};
pub use report::{
    cell_lines, emit_report, render_robustness_table, render_significance, render_table, CellLine, CellSummary,
    Layout, ReportEntry, ReportFiles, ReportRow, ReportSpec, ReportSpecRow, CELLS_FILE, ROBUSTNESS_FILE,
    TABLE_FILE,
};

use crate::corpus::{PostRecord, Split};
use crate::error::{Error, Result};
use crate::jsonl;
use crate::metrics::{evaluate, mean_std, robustness_std, welch_t, MetricBundle, RobustnessAxis, TTestResult};
use crate::sampler::{build_nested_splits, build_validation, build_validation_uniform, FewShotSplit};
use crate::scheme::{linearize, parse, reference_output, LinearizedExample, SchemeConfig};

/// Loaded records for one experiment.
#[derive(Debug, Clone, Default)]
pub struct ExperimentData {
    /// SBIC records of every split; training and validation draw from the
    /// non-test ones.
    pub sbic: Vec<PostRecord>,
    /// Evaluation records per out-of-distribution target.
    pub ood: BTreeMap<Target, Vec<PostRecord>>,
    pub stages: Vec<PathBuf>,
}

impl ExperimentData {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let sbic = jsonl::read(&cfg.data.sbic)?;
        let mut ood = BTreeMap::new();
        for &t in cfg.targets.iter().filter(|t| t.is_ood()) {
            let path = cfg
                .data
                .for_target(t)
                .ok_or_else(|| Error::Config(format!("target `{t}` has no data path")))?;
            ood.insert(t, jsonl::read(path)?);
        }
        let mut stages = Vec::new();
        if let Some(dir) = &cfg.data.knowledge_dir {
            for s in &cfg.knowledge {
                let p = dir.join(s.file_name());
                if !p.is_file() {
                    return Err(Error::Config(format!("missing knowledge stage file {}", p.display())));
                }
                stages.push(p);
            }
        }
        Ok(Self { sbic, ood, stages })
    }

    fn target_records(&self, t: Target) -> Vec<&PostRecord> {
        match t {
            Target::SbicTest => self.sbic.iter().filter(|r| r.split == Split::Test).collect(),
            _ => self.ood.get(&t).map(|v| v.iter().collect()).unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Failed { reason: String },
}

/// One (size, seed) cell after config selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub size: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub status: CellStatus,
    /// Config chosen by validation F1; `None` when every config failed.
    pub best_config: Option<String>,
    /// Validation hate speech F1 per successful config.
    pub validation_f1: BTreeMap<String, f64>,
    /// Failure reason per failed config.
    pub config_failures: BTreeMap<String, String>,
    /// Scores of the chosen config per target.
    pub scores: BTreeMap<Target, MetricBundle>,
}

impl CellResult {
    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

/// Cross-seed aggregate over successful cells only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub size: usize,
    pub target: Target,
    pub n_ok: usize,
    pub n_failed: usize,
    pub f1_hs_mean: Option<f64>,
    pub f1_hs_std: Option<f64>,
    pub invalid_rate_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessEntry {
    pub size: usize,
    pub std: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub name: String,
    pub scheme: String,
    pub generator: String,
    pub grid: String,
    pub knowledge: Vec<KnowledgeStage>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub targets: Vec<Target>,
    /// Sorted by size, then seed. Every cell is present.
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub robustness_axis: RobustnessAxis,
    pub robustness: Vec<RobustnessEntry>,
}

impl EvalReport {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: source.line(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn aggregate(&self, size: usize, target: Target) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.size == size && a.target == target)
    }

    /// Per-seed hate speech F1 of successful cells.
    pub fn seed_scores(&self, size: usize, target: Target) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|c| c.size == size && c.is_ok())
            .filter_map(|c| c.scores.get(&target).map(|m| m.f1_hs))
            .collect()
    }
}

/// Settings that do not change results.
#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Root for per-job work directories.
    pub work_dir: PathBuf,
    /// Worker threads for concurrent jobs; 0 lets the pool decide.
    pub workers: usize,
    /// Base directory for grid files named by relative path.
    pub config_dir: PathBuf,
}

struct SeedPlan {
    seed: u64,
    train: BTreeMap<usize, FewShotSplit>,
    validation: BTreeMap<usize, FewShotSplit>,
}

struct Job<'a> {
    size: usize,
    seed: u64,
    hp: HyperParams,
    train: &'a FewShotSplit,
    validation: &'a FewShotSplit,
}

type JobOutcome = std::result::Result<(f64, BTreeMap<Target, MetricBundle>), String>;

fn plan_seed(cfg: &ExperimentConfig, pool: &[PostRecord], seed: u64) -> Result<SeedPlan> {
    let train = build_nested_splits(pool, &cfg.sizes, seed)?;
    let largest = train.values().next_back().expect("sizes non-empty");
    let mut validation = BTreeMap::new();
    for &size in &cfg.sizes {
        let n = cfg.validation.size.unwrap_or(size);
        let v = if cfg.validation.stratified {
            build_validation(pool, n, seed, largest)?
        } else {
            build_validation_uniform(pool, n, seed, largest)?
        };
        validation.insert(size, v);
    }
    Ok(SeedPlan { seed, train, validation })
}

fn examples(ids: &[String], by_id: &BTreeMap<&str, &PostRecord>, scheme: &SchemeConfig) -> Result<Vec<LinearizedExample>> {
    ids.iter()
        .map(|id| {
            let r = by_id
                .get(id.as_str())
                .ok_or_else(|| Error::Config(format!("split member `{id}` not in pool")))?;
            linearize(r, scheme)
        })
        .collect()
}

struct EvalSet<'a> {
    target: Option<Target>,
    golds: Vec<&'a PostRecord>,
}

#[allow(clippy::too_many_arguments)]
fn run_job(
    job: &Job<'_>,
    scheme: &SchemeConfig,
    generator: &dyn Generator,
    by_id: &BTreeMap<&str, &PostRecord>,
    targets: &[(Target, Vec<&PostRecord>)],
    stages: &[PathBuf],
    work_dir: &Path,
) -> Result<JobOutcome> {
    let train = examples(&job.train.member_ids, by_id, scheme)?;
    let validation = examples(&job.validation.member_ids, by_id, scheme)?;
    let val_golds: Vec<&PostRecord> = job.validation.member_ids.iter().map(|id| by_id[id.as_str()]).collect();

    let mut sets = vec![EvalSet { target: None, golds: val_golds }];
    for (t, golds) in targets {
        sets.push(EvalSet { target: Some(*t), golds: golds.clone() });
    }
    let mut inputs = Vec::new();
    let mut golds = Vec::new();
    for s in &sets {
        for g in &s.golds {
            inputs.push(GenerationInput {
                id: g.id.clone(),
                input: reference_output(g, scheme).input,
            });
            golds.push(*g);
        }
    }

    let workdir = work_dir
        .join(format!("size-{}", job.size))
        .join(format!("seed-{}", job.seed))
        .join(job.hp.id());
    let request = GenerationJob {
        scheme,
        size: job.size,
        seed: job.seed,
        hp: job.hp,
        train: &train,
        validation: &validation,
        inputs: &inputs,
        golds: &golds,
        stages,
        workdir: &workdir,
    };
    let generations = match generator.generate(&request) {
        Ok(g) => g,
        Err(e) => return Ok(Err(e.to_string())),
    };
    if generations.len() != inputs.len() {
        return Ok(Err(format!(
            "{} generations for {} inputs",
            generations.len(),
            inputs.len()
        )));
    }

    let mut offset = 0;
    let mut val_f1 = 0.0;
    let mut scores = BTreeMap::new();
    for s in &sets {
        let n = s.golds.len();
        let parsed: Vec<_> = generations[offset..offset + n]
            .iter()
            .map(|g| parse(&g.generation, scheme))
            .collect();
        offset += n;
        match s.target {
            None => val_f1 = evaluate(&parsed, &s.golds, scheme, false)?.f1_hs,
            Some(t) => {
                scores.insert(t, evaluate(&parsed, &s.golds, scheme, !t.is_ood())?);
            }
        }
    }
    Ok(Ok((val_f1, scores)))
}

/// Runs every job of `cfg` and assembles the report. Generator failures
/// mark configs, and if all configs of a cell fail, the cell, as failed;
/// they never become zero scores. Data problems abort the run.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    generator: &dyn Generator,
    opts: &RunOptions,
) -> Result<EvalReport> {
    cfg.validate()?;
    let scheme = cfg.scheme_config()?;
    let grid = Grid::resolve(&cfg.grid, &opts.config_dir)?;
    let configs = grid.configs();

    let mut targets = Vec::new();
    for &t in &cfg.targets {
        let golds = data.target_records(t);
        if golds.is_empty() {
            return Err(Error::Empty(format!("no evaluation records for target `{t}`")));
        }
        targets.push((t, golds));
    }
    let by_id: BTreeMap<&str, &PostRecord> = data.sbic.iter().map(|r| (r.id.as_str(), r)).collect();

    let plans: Vec<SeedPlan> = cfg
        .seeds
        .iter()
        .map(|&s| plan_seed(cfg, &data.sbic, s))
        .collect::<Result<_>>()?;
    let mut jobs = Vec::new();
    for &size in &cfg.sizes {
        for plan in &plans {
            for &hp in &configs {
                jobs.push(Job {
                    size,
                    seed: plan.seed,
                    hp,
                    train: &plan.train[&size],
                    validation: &plan.validation[&size],
                });
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<Result<JobOutcome>> = pool.install(|| {
        jobs.par_iter()
            .map(|j| run_job(j, &scheme, generator, &by_id, &targets, &data.stages, &opts.work_dir))
            .collect()
    });

    // Single-threaded reduction in job order.
    let mut cells: BTreeMap<(usize, u64), CellResult> = BTreeMap::new();
    let mut best: BTreeMap<(usize, u64), (f64, BTreeMap<Target, MetricBundle>)> = BTreeMap::new();
    for (job, outcome) in jobs.iter().zip(outcomes) {
        let key = (job.size, job.seed);
        let cell = cells.entry(key).or_insert_with(|| CellResult {
            size: job.size,
            seed: job.seed,
            status: CellStatus::Ok,
            best_config: None,
            validation_f1: BTreeMap::new(),
            config_failures: BTreeMap::new(),
            scores: BTreeMap::new(),
        });
        match outcome? {
            Ok((val_f1, scores)) => {
                cell.validation_f1.insert(job.hp.id(), val_f1);
                // Strictly greater keeps the earliest config on ties.
                if best.get(&key).is_none_or(|(b, _)| val_f1 > *b) {
                    cell.best_config = Some(job.hp.id());
                    best.insert(key, (val_f1, scores));
                }
            }
            Err(reason) => {
                cell.config_failures.insert(job.hp.id(), reason);
            }
        }
    }
    let mut cells: Vec<CellResult> = cells
        .into_iter()
        .map(|(key, mut cell)| {
            match best.remove(&key) {
                Some((_, scores)) => cell.scores = scores,
                None => {
                    let reasons: Vec<String> =
                        cell.config_failures.iter().map(|(k, v)| format!("{k}: {v}")).collect();
                    cell.status = CellStatus::Failed {
                        reason: format!("all configs failed ({})", reasons.join("; ")),
                    };
                }
            }
            cell
        })
        .collect();
    cells.sort_by_key(|c| (c.size, c.seed));

    let aggregates = aggregate(&cells, &cfg.sizes, &cfg.targets);
    let robustness = cfg
        .sizes
        .iter()
        .map(|&size| robustness_entry(&cells, size, cfg.robustness_axis))
        .collect();

    Ok(EvalReport {
        name: cfg.name.clone(),
        scheme: scheme.fingerprint(),
        generator: generator.name(),
        grid: grid.name,
        knowledge: cfg.knowledge.clone(),
        sizes: cfg.sizes.clone(),
        seeds: cfg.seeds.clone(),
        targets: cfg.targets.clone(),
        cells,
        aggregates,
        robustness_axis: cfg.robustness_axis,
        robustness,
    })
}

fn aggregate(cells: &[CellResult], sizes: &[usize], targets: &[Target]) -> Vec<Aggregate> {
    let mut out = Vec::new();
    for &size in sizes {
        let row: Vec<&CellResult> = cells.iter().filter(|c| c.size == size).collect();
        let ok: Vec<&CellResult> = row.iter().copied().filter(|c| c.is_ok()).collect();
        for &target in targets {
            let bundles: Vec<&MetricBundle> = ok.iter().filter_map(|c| c.scores.get(&target)).collect();
            let f1: Vec<f64> = bundles.iter().map(|m| m.f1_hs).collect();
            let invalid: Vec<f64> = bundles.iter().map(|m| m.invalid_rate).collect();
            let (mean, std) = mean_std(&f1);
            out.push(Aggregate {
                size,
                target,
                n_ok: f1.len(),
                n_failed: row.len() - f1.len(),
                f1_hs_mean: (!f1.is_empty()).then_some(mean),
                f1_hs_std: (!f1.is_empty()).then_some(std),
                invalid_rate_mean: (!invalid.is_empty()).then(|| mean_std(&invalid).0),
            });
        }
    }
    out
}

fn robustness_entry(cells: &[CellResult], size: usize, axis: RobustnessAxis) -> RobustnessEntry {
    let mut grid = BTreeMap::new();
    let mut failed = Vec::new();
    for c in cells.iter().filter(|c| c.size == size) {
        for (hp, &v) in &c.validation_f1 {
            grid.insert((c.seed, hp.clone()), v);
        }
        for hp in c.config_failures.keys() {
            failed.push(format!("seed {} / {hp}", c.seed));
        }
    }
    if !failed.is_empty() {
        return RobustnessEntry {
            size,
            std: None,
            note: Some(Error::MissingCells(failed).to_string()),
        };
    }
    match robustness_std(&grid, axis) {
        Ok(std) => RobustnessEntry { size, std: Some(std), note: None },
        Err(e) => RobustnessEntry { size, std: None, note: Some(e.to_string()) },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceEntry {
    pub size: usize,
    pub target: Target,
    pub n_a: usize,
    pub n_b: usize,
    pub mean_a: Option<f64>,
    pub mean_b: Option<f64>,
    pub test: Option<TTestResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceMatrix {
    pub a: String,
    pub b: String,
    pub entries: Vec<SignificanceEntry>,
}

/// Welch's test on per-seed hate speech F1 for every shared target and
/// size. Failed cells are left out; fewer than two scores on either side
/// leaves the entry untested with a note.
pub fn significance(a: &EvalReport, b: &EvalReport) -> Result<SignificanceMatrix> {
    if a.sizes != b.sizes {
        return Err(Error::ShapeMismatch(format!("sizes {:?} vs {:?}", a.sizes, b.sizes)));
    }
    if a.seeds.len() != b.seeds.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} seeds vs {}",
            a.seeds.len(),
            b.seeds.len()
        )));
    }
    let shared: Vec<Target> = a.targets.iter().copied().filter(|t| b.targets.contains(t)).collect();
    if shared.is_empty() {
        return Err(Error::ShapeMismatch("no shared evaluation target".into()));
    }
    let mut entries = Vec::new();
    for &target in &shared {
        for &size in &a.sizes {
            let xa = a.seed_scores(size, target);
            let xb = b.seed_scores(size, target);
            let mean = |x: &[f64]| (!x.is_empty()).then(|| mean_std(x).0);
            let (test, note) = match welch_t(&xa, &xb) {
                Ok(t) => (Some(t), None),
                Err(e) => (None, Some(e.to_string())),
            };
            entries.push(SignificanceEntry {
                size,
                target,
                n_a: xa.len(),
                n_b: xb.len(),
                mean_a: mean(&xa),
                mean_b: mean(&xb),
                test,
                note,
            });
        }
    }
    Ok(SignificanceMatrix {
        a: a.name.clone(),
        b: b.name.clone(),
        entries,
    })
}
