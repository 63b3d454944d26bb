mod common;

use std::collections::BTreeMap;
use std::path::Path;

use fewshot_hs::corpus::Source;
use fewshot_hs::runner::{
    run_experiment, significance, CellStatus, DataPaths, EvalReport, ExperimentConfig, ExperimentData,
    GeneratorRegistry, RunOptions, Target, ValidationPolicy,
};

fn config(scheme: &str, generator: &str, sizes: Vec<usize>, seeds: Vec<u64>) -> ExperimentConfig {
    ExperimentConfig {
        name: format!("{scheme}/{generator}"),
        scheme: scheme.into(),
        sizes,
        seeds,
        knowledge: Vec::new(),
        targets: vec![Target::SbicTest],
        generator: generator.into(),
        grid: "default-v1".into(),
        validation: ValidationPolicy::default(),
        robustness_axis: Default::default(),
        data: DataPaths {
            sbic: "unused".into(),
            ethos: Some("unused".into()),
            ..Default::default()
        },
    }
}

fn data() -> ExperimentData {
    let mut ood = BTreeMap::new();
    ood.insert(Target::Ethos, common::ood_records(90, Source::Ethos, "ethos"));
    ExperimentData {
        sbic: common::synthetic_pool(2000),
        ood,
        stages: Vec::new(),
    }
}

fn run(cfg: &ExperimentConfig, work: &Path) -> EvalReport {
    let generator = GeneratorRegistry::with_builtins().build(&cfg.generator).unwrap();
    let opts = RunOptions {
        work_dir: work.to_path_buf(),
        workers: 4,
        config_dir: ".".into(),
    };
    run_experiment(cfg, &data(), generator.as_ref(), &opts).unwrap()
}

#[test]
fn gold_echo_scores_perfectly_on_every_subtask() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = config("full", "gold-echo", vec![16, 32], vec![0, 1]);
    cfg.targets.push(Target::Ethos);
    let r = run(&cfg, tmp.path());
    assert_eq!(r.cells.len(), 4);
    for c in &r.cells {
        assert!(c.is_ok());
        let sbic = &c.scores[&Target::SbicTest];
        assert_eq!(sbic.f1_hs, 1.0);
        assert_eq!(sbic.f1_off, Some(1.0));
        assert_eq!(sbic.gd.unwrap().group_f1, 1.0);
        assert_eq!(sbic.gd.unwrap().macro_f1, 1.0);
        assert_eq!(sbic.invalid_rate, 0.0);
        // Out-of-distribution targets are scored on hate speech only.
        let ethos = &c.scores[&Target::Ethos];
        assert_eq!(ethos.f1_hs, 1.0);
        assert!(ethos.f1_off.is_none() && ethos.gd.is_none());
        assert_eq!(ethos.n, 90);
    }
    // Mocks ignore hyperparameters, so every config ties and the first wins.
    assert_eq!(r.cells[0].best_config.as_deref(), Some("lr1e-5_bs8"));
    assert_eq!(r.robustness[0].std, Some(0.0));
}

#[test]
fn ten_seeds_one_size_gives_ten_cells() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("baseline", "constant-no", vec![16], (0..10).collect());
    let r = run(&cfg, tmp.path());
    assert_eq!(r.cells.len(), 10);
    let agg = r.aggregate(16, Target::SbicTest).unwrap();
    assert_eq!((agg.n_ok, agg.n_failed), (10, 0));
    assert_eq!(agg.f1_hs_mean, Some(0.0));
    // Half of the synthetic test posts are hate speech.
    assert!((r.cells[0].scores[&Target::SbicTest].fn_pct - 50.0).abs() < 1e-9);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("minimal", "noisy-gold:0.3", vec![16, 32, 64], vec![3, 4, 5]);
    assert_eq!(run(&cfg, a.path()).to_json(), run(&cfg, b.path()).to_json());
}

#[test]
fn command_adapter_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    // Answers "No" for every input id.
    let cmd = r#"command:test -s {train} && test -s {val} && sed 's/^{"id":\("[^"]*"\).*/{"id":\1,"generation":"No"}/' {inputs} > {outputs}"#;
    let mut cfg = config("baseline", cmd, vec![16], vec![0, 1]);
    cfg.grid = "tiny.toml".into();
    std::fs::write(
        tmp.path().join("tiny.toml"),
        "name = \"tiny\"\nepochs = 1\nlearning_rates = [1e-4]\nbatch_sizes = [4, 8]\n",
    )
    .unwrap();
    let generator = GeneratorRegistry::with_builtins().build(&cfg.generator).unwrap();
    let opts = RunOptions {
        work_dir: tmp.path().join("work"),
        workers: 2,
        config_dir: tmp.path().to_path_buf(),
    };
    let r = run_experiment(&cfg, &data(), generator.as_ref(), &opts).unwrap();
    assert_eq!(r.grid, "tiny");
    for c in &r.cells {
        assert!(c.is_ok(), "{:?}", c.status);
        assert_eq!(c.validation_f1.len(), 2);
        assert_eq!(c.scores[&Target::SbicTest].invalid_rate, 0.0);
    }
    assert!(tmp.path().join("work/size-16/seed-0/lr1e-4_bs4/outputs.jsonl").is_file());
}

#[test]
fn failed_adapter_marks_cells_failed_not_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("baseline", "command:echo boom >&2; exit 3", vec![16], vec![0, 1]);
    let r = run(&cfg, tmp.path());
    assert_eq!(r.cells.len(), 2);
    for c in &r.cells {
        match &c.status {
            CellStatus::Failed { reason } => assert!(reason.contains("exit"), "{reason}"),
            CellStatus::Ok => panic!("cell should fail"),
        }
        assert!(c.scores.is_empty());
        assert_eq!(c.config_failures.len(), 6);
    }
    let agg = r.aggregate(16, Target::SbicTest).unwrap();
    assert_eq!((agg.n_ok, agg.n_failed), (0, 2));
    assert_eq!(agg.f1_hs_mean, None);
    assert!(r.robustness[0].std.is_none());
    let log = std::fs::read_to_string(tmp.path().join("size-16/seed-0/lr1e-5_bs8/adapter.log")).unwrap();
    assert_eq!(log.trim(), "boom");
}

#[test]
fn missing_generations_fail_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("baseline", "command:head -n 3 {inputs} > {outputs}", vec![16], vec![0]);
    let r = run(&cfg, tmp.path());
    assert!(!r.cells[0].is_ok());
}

#[test]
fn significance_of_identical_reports_is_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("full", "noisy-gold:0.2", vec![16, 32], (0..5).collect());
    let r = run(&cfg, tmp.path());
    let m = significance(&r, &r).unwrap();
    assert_eq!(m.entries.len(), 2);
    for e in &m.entries {
        assert_eq!(e.test.unwrap().p, 1.0);
    }
}

#[test]
fn significance_separates_oracle_from_constant() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let good = run(&config("full", "noisy-gold:0.1", vec![16, 32], (0..5).collect()), a.path());
    let bad = run(&config("full", "noisy-gold:0.45", vec![16, 32], (0..5).collect()), b.path());
    for e in significance(&good, &bad).unwrap().entries {
        let t = e.test.unwrap();
        assert!(t.significant, "{e:?}");
        assert!(t.t > 0.0);
    }
    let short = run(&config("full", "gold-echo", vec![16], (0..5).collect()), a.path());
    assert!(significance(&good, &short).is_err());
}

#[test]
fn decomposed_scheme_rejects_nothing_from_sbic_pool() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("full+impl", "gold-echo", vec![16], vec![9]);
    let r = run(&cfg, tmp.path());
    assert_eq!(r.cells[0].scores[&Target::SbicTest].f1_hs, 1.0);
}
