use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use fewshot_hs::corpus::{
    aggregate_sbic, load_ethos, load_hatexplain, load_hs18, load_sbic, HateXplainOptions, OodLoad, PostRecord,
    Source, Split,
};
use fewshot_hs::jsonl;
use fewshot_hs::knowledge::{build_knowledge_corpus, load_atomic, load_stereoset, KnowledgeConfig};
use fewshot_hs::metrics::evaluate;
use fewshot_hs::runner::{
    align, emit_report, render_significance, run_experiment, significance, EvalReport, ExperimentConfig,
    ExperimentData, Generation, GenerationInput, GeneratorRegistry, ReportSpec, RunOptions,
};
use fewshot_hs::sampler::{build_nested_splits, build_validation, verify_quotas, SplitManifest, DEFAULT_SIZES};
use fewshot_hs::scheme::{linearize, parse, reference_output, SchemeConfig};

#[derive(Parser)]
#[command(name = "fewshot-hs", version, about = "Few-shot hate speech experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize a raw corpus into a record file.
    Ingest {
        #[command(subcommand)]
        source: IngestSource,
    },
    /// Expand ATOMIC and StereoSet into knowledge stage files.
    BuildKnowledge {
        #[arg(long)]
        atomic: Option<PathBuf>,
        #[arg(long)]
        stereoset: Option<PathBuf>,
        /// Fail on unknown ATOMIC relations instead of skipping them.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write nested training splits and validation splits per seed.
    BuildSplits {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = (0..10u64).collect::<Vec<_>>())]
        seeds: Vec<u64>,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES.to_vec())]
        sizes: Vec<usize>,
        /// Skip validation splits.
        #[arg(long)]
        no_validation: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn records into scheme input/output pairs.
    Linearize {
        #[arg(long)]
        records: PathBuf,
        #[arg(long, default_value = "full")]
        scheme: String,
        /// Only the members of this split manifest, in manifest order.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Write `{id, input}` lines for generation instead of training pairs.
        #[arg(long)]
        inputs_only: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment config through its generator.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the config's generator descriptor.
        #[arg(long)]
        generator: Option<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Score a generations file against gold records.
    Eval {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        generations: PathBuf,
        #[arg(long, default_value = "full")]
        scheme: String,
        /// Only records of the SBIC test split.
        #[arg(long)]
        test_only: bool,
    },
    /// Welch's t-test between two reports per size and target.
    Significance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render tables from a report spec.
    Report {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum IngestSource {
    Sbic {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        dev: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Write aggregation warnings here as JSON lines.
        #[arg(long)]
        warnings: Option<PathBuf>,
    },
    Hatexplain {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        divisions: Option<PathBuf>,
        #[arg(long)]
        offensive_is_hs: bool,
        #[arg(long)]
        out: PathBuf,
    },
    Hs18 {
        /// Dataset directory or its annotations_metadata.csv.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    Ethos {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { source } => ingest(source),
        Command::BuildKnowledge { atomic, stereoset, strict, seed, out } => {
            build_knowledge(atomic, stereoset, strict, seed, &out)
        }
        Command::BuildSplits { records, seeds, sizes, no_validation, out } => {
            build_splits(&records, &seeds, &sizes, !no_validation, &out)
        }
        Command::Linearize { records, scheme, manifest, inputs_only, out } => {
            linearize_cmd(&records, &scheme, manifest.as_deref(), inputs_only, &out)
        }
        Command::Run { config, out, generator, seeds, sizes, workers } => {
            run(&config, &out, generator, seeds, sizes, workers)
        }
        Command::Eval { records, generations, scheme, test_only } => {
            eval(&records, &generations, &scheme, test_only)
        }
        Command::Significance { a, b, out } => significance_cmd(&a, &b, out.as_deref()),
        Command::Report { spec, out } => report(&spec, &out),
    }
}

fn summarize(records: &[PostRecord]) -> String {
    let hs = records.iter().filter(|r| r.hs).count();
    format!("{} records, {hs} hate speech", records.len())
}

fn write_ood(load: OodLoad, out: &Path) -> Result<()> {
    jsonl::write(out, &load.records)?;
    println!("{}: {}", out.display(), summarize(&load.records));
    for (label, n) in &load.excluded {
        println!("  excluded {n} `{label}`");
    }
    if !load.ties.is_empty() {
        println!("  {} posts without a majority label, scored as not hate speech", load.ties.len());
    }
    Ok(())
}

fn ingest(source: IngestSource) -> Result<()> {
    match source {
        IngestSource::Sbic { train, dev, test, out, warnings } => {
            let mut records = Vec::new();
            let mut all_warnings = Vec::new();
            for (path, split) in [(train, Split::TrainPool), (dev, Split::ValPool), (test, Split::Test)] {
                let raw = load_sbic(&path)?;
                let agg = aggregate_sbic(&raw, split);
                println!("{}: {} annotations, {}", path.display(), raw.len(), summarize(&agg.records));
                records.extend(agg.records);
                all_warnings.extend(agg.warnings);
            }
            let mut seen = HashMap::new();
            for r in &records {
                if let Some(prev) = seen.insert(r.id.as_str(), r.split) {
                    bail!("post `{}` appears in both {prev:?} and {:?}", r.id, r.split);
                }
            }
            jsonl::write(&out, &records)?;
            println!("{}: {}, {} warnings", out.display(), summarize(&records), all_warnings.len());
            if let Some(w) = warnings {
                jsonl::write(&w, &all_warnings)?;
            }
            Ok(())
        }
        IngestSource::Hatexplain { input, divisions, offensive_is_hs, out } => {
            let opts = HateXplainOptions { divisions, offensive_is_hs };
            write_ood(load_hatexplain(&input, &opts)?, &out)
        }
        IngestSource::Hs18 { input, out } => write_ood(load_hs18(&input)?, &out),
        IngestSource::Ethos { input, out } => write_ood(load_ethos(&input)?, &out),
    }
}

fn build_knowledge(atomic: Option<PathBuf>, stereoset: Option<PathBuf>, strict: bool, seed: u64, out: &Path) -> Result<()> {
    let tuples = match &atomic {
        Some(p) => {
            let load = load_atomic(p, strict)?;
            println!("{}: {} tuples", p.display(), load.tuples.len());
            for (why, n) in &load.skipped {
                println!("  skipped {n}: {why}");
            }
            load.tuples
        }
        None => Vec::new(),
    };
    let entries = match &stereoset {
        Some(p) => {
            let load = load_stereoset(p)?;
            println!(
                "{}: {} stereotype sentences (omitted {} anti-stereotype, {} unrelated, {} intrasentence)",
                p.display(),
                load.entries.len(),
                load.omitted_anti_stereotype,
                load.omitted_unrelated,
                load.omitted_intrasentence
            );
            load.entries
        }
        None => Vec::new(),
    };
    let config = KnowledgeConfig {
        atomic: atomic.is_some(),
        stereoset: stereoset.is_some(),
        seed,
    };
    let corpus = build_knowledge_corpus(&tuples, &entries, config)?;
    for p in corpus.write(out, config)? {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| path.display().to_string())
}

fn build_splits(records: &Path, seeds: &[u64], sizes: &[usize], validation: bool, out: &Path) -> Result<()> {
    let pool: Vec<PostRecord> = jsonl::read(records)?;
    let mut invalid = 0;
    for &seed in seeds {
        let splits = build_nested_splits(&pool, sizes, seed)?;
        let largest = splits.values().next_back().context("no sizes")?.clone();
        let dir = out.join(format!("seed-{seed}"));
        for (size, split) in splits {
            let report = verify_quotas(&split, &pool);
            invalid += usize::from(!report.is_valid());
            write_json(&dir.join(format!("train-{size}.json")), &SplitManifest { split, report })?;
            if validation {
                let v = build_validation(&pool, size, seed, &largest)?;
                let report = verify_quotas(&v, &pool);
                invalid += usize::from(!report.is_valid());
                write_json(&dir.join(format!("val-{size}.json")), &SplitManifest { split: v, report })?;
            }
        }
    }
    println!("{} seeds x {} sizes written to {}", seeds.len(), sizes.len(), out.display());
    if invalid > 0 {
        bail!("{invalid} splits have quota violations");
    }
    Ok(())
}

fn linearize_cmd(records: &Path, scheme: &str, manifest: Option<&Path>, inputs_only: bool, out: &Path) -> Result<()> {
    let scheme = SchemeConfig::named(scheme)?;
    let pool: Vec<PostRecord> = jsonl::read(records)?;
    let selected: Vec<&PostRecord> = match manifest {
        Some(m) => {
            let text = std::fs::read_to_string(m).with_context(|| m.display().to_string())?;
            let manifest: SplitManifest = serde_json::from_str(&text).with_context(|| m.display().to_string())?;
            let by_id: HashMap<&str, &PostRecord> = pool.iter().map(|r| (r.id.as_str(), r)).collect();
            manifest
                .split
                .member_ids
                .iter()
                .map(|id| by_id.get(id.as_str()).copied().with_context(|| format!("`{id}` not in records")))
                .collect::<Result<_>>()?
        }
        None => pool.iter().collect(),
    };
    if inputs_only {
        let inputs: Vec<GenerationInput> = selected
            .iter()
            .map(|r| GenerationInput {
                id: r.id.clone(),
                input: reference_output(r, &scheme).input,
            })
            .collect();
        jsonl::write(out, &inputs)?;
    } else {
        let pairs = selected
            .iter()
            .map(|r| linearize(r, &scheme))
            .collect::<fewshot_hs::Result<Vec<_>>>()?;
        jsonl::write(out, &pairs)?;
    }
    println!("{}: {} lines ({})", out.display(), selected.len(), scheme);
    Ok(())
}

fn run(
    config: &Path,
    out: &Path,
    generator: Option<String>,
    seeds: Option<Vec<u64>>,
    sizes: Option<Vec<usize>>,
    workers: usize,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(g) = generator {
        cfg.generator = g;
    }
    if let Some(s) = seeds {
        cfg.seeds = s;
    }
    if let Some(s) = sizes {
        cfg.sizes = s;
    }
    let data = ExperimentData::load(&cfg)?;
    let generator = GeneratorRegistry::with_builtins().build(&cfg.generator)?;
    let opts = RunOptions {
        work_dir: out.join("work"),
        workers,
        config_dir: config.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let report = run_experiment(&cfg, &data, generator.as_ref(), &opts)?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    let path = out.join("report.json");
    std::fs::write(&path, report.to_json()).with_context(|| path.display().to_string())?;

    let entry = fewshot_hs::runner::ReportEntry {
        group: None,
        label: cfg.name.clone(),
        report: report.clone(),
    };
    for &t in &cfg.targets {
        let files = emit_report(std::slice::from_ref(&entry), fewshot_hs::runner::Layout::Flat, t)?;
        let dir = out.join(t.as_str());
        files.write(&dir)?;
        print!("{t}\n{}", files.table);
    }
    let failed = report.cells.iter().filter(|c| !c.is_ok()).count();
    println!("{} cells, {failed} failed; report at {}", report.cells.len(), path.display());
    Ok(())
}

fn eval(records: &Path, generations: &Path, scheme: &str, test_only: bool) -> Result<()> {
    let scheme = SchemeConfig::named(scheme)?;
    let pool: Vec<PostRecord> = jsonl::read(records)?;
    let golds: Vec<&PostRecord> = pool.iter().filter(|r| !test_only || r.split == Split::Test).collect();
    let inputs: Vec<GenerationInput> = golds
        .iter()
        .map(|r| GenerationInput { id: r.id.clone(), input: String::new() })
        .collect();
    let gens: Vec<Generation> = jsonl::read(generations)?;
    let gens = align(&inputs, gens)?;
    let parsed: Vec<_> = gens.iter().map(|g| parse(&g.generation, &scheme)).collect();
    let in_distribution = golds.iter().all(|r| r.source == Source::Sbic);
    let bundle = evaluate(&parsed, &golds, &scheme, in_distribution)?;
    println!("{}", serde_json::to_string_pretty(&bundle)?);
    Ok(())
}

fn significance_cmd(a: &Path, b: &Path, out: Option<&Path>) -> Result<()> {
    let ra = EvalReport::load(a)?;
    let rb = EvalReport::load(b)?;
    let m = significance(&ra, &rb)?;
    print!("{}", render_significance(&m));
    if let Some(out) = out {
        write_json(out, &m)?;
    }
    Ok(())
}

fn report(spec: &Path, out: &Path) -> Result<()> {
    let (spec, entries) = ReportSpec::load(spec)?;
    let files = emit_report(&entries, spec.layout, spec.target)?;
    for p in files.write(out)? {
        println!("wrote {}", p.display());
    }
    print!("{}", files.table);
    Ok(())
}
