#![allow(dead_code)]
pub mod oracles;

use fewshot_hs::corpus::{GroupId, PostRecord, Source, Split, TargetType};

pub const GROUPS: [&str; 6] = ["women", "black folks", "jewish folks", "muslim folks", "gay men", "disabled people"];

/// A deterministic SBIC-like pool. Every tenth record is in the test split;
/// the rest cycle inoffensive, offensive towards an individual, and two
/// hate speech posts against rotating groups.
pub fn synthetic_pool(n: usize) -> Vec<PostRecord> {
    (0..n)
        .map(|i| {
            let kind = i % 4;
            let hs = kind >= 2;
            let offensive = kind >= 1;
            let group = GROUPS[(i / 4 + kind) % GROUPS.len()];
            let mut groups = Vec::new();
            if hs {
                groups.push(GroupId::new(group).unwrap());
                if i % 7 == 0 {
                    groups.push(GroupId::new(GROUPS[(i + 1) % GROUPS.len()]).unwrap());
                }
            }
            PostRecord {
                id: format!("p{i:06}"),
                text: format!("post number {i} about things"),
                offensive,
                target_type: match kind {
                    0 => TargetType::None,
                    1 => TargetType::Individual,
                    _ => TargetType::Group,
                },
                groups,
                implication: hs.then(|| format!("{group} are bad")),
                hs,
                source: Source::Sbic,
                split: if i % 10 == 0 { Split::Test } else { Split::TrainPool },
            }
        })
        .collect()
}

/// Binary out-of-distribution records: every third is hate speech.
pub fn ood_records(n: usize, source: Source, prefix: &str) -> Vec<PostRecord> {
    (0..n)
        .map(|i| {
            let hs = i % 3 == 0;
            PostRecord {
                id: format!("{prefix}-{i}"),
                text: format!("ood text {i}"),
                offensive: hs,
                target_type: if hs { TargetType::Group } else { TargetType::None },
                groups: Vec::new(),
                implication: None,
                hs,
                source,
                split: Split::Test,
            }
        })
        .collect()
}

/// SBIC-style records produced by the real aggregation step from seeded
/// per-annotator rows (three annotators per post).
pub fn aggregated_sbic(posts: usize, seed: u64) -> Vec<PostRecord> {
    use fewshot_hs::corpus::{aggregate_sbic, RawSbicAnnotation};
    use fewshot_hs::rng::{HarnessRng, Stream};

    const MINORITIES: [&str; 9] = [
        "women", "black folks", "jews", "muslims", "muslim folks", "gay men", "asian folks", "immigrants", "",
    ];
    const STEREOTYPES: [&str; 4] = ["are inferior", "are dangerous", "should go away", "are stupid"];
    let mut rng = HarnessRng::new(seed, Stream::MockGenerator);
    let mut raw = Vec::new();
    for p in 0..posts {
        for _ in 0..3 {
            let offensive_score = [0.0, 0.5, 1.0][rng.below(3) as usize];
            let who = match rng.below(3) {
                0 => None,
                1 => Some(0.0),
                _ => Some(1.0),
            };
            let k = rng.below(3) as usize;
            let minorities = (0..k).map(|_| MINORITIES[rng.below(9) as usize].to_string()).filter(|m| !m.is_empty()).collect();
            let stereotype = if rng.below(2) == 0 {
                String::new()
            } else {
                format!("{} {}", MINORITIES[rng.below(8) as usize], STEREOTYPES[rng.below(4) as usize])
            };
            raw.push(RawSbicAnnotation {
                post_id: format!("s{p:05}"),
                text: format!("post {p} text"),
                offensive_score,
                who_target_score: who.filter(|_| offensive_score > 0.0),
                target_minorities: minorities,
                target_stereotype: stereotype,
            });
        }
    }
    aggregate_sbic(&raw, Split::TrainPool).records
}

pub mod reports {
    use std::path::Path;

    use fewshot_hs::runner::{render_table, CellSummary, Layout, ReportRow};

    pub const SIZES: [usize; 7] = [16, 32, 64, 128, 256, 512, 1024];

    pub fn file(rel: &str) -> String {
        std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(rel)).unwrap()
    }

    /// Rows from `group<TAB>label<TAB>score...` with scores in percent.
    pub fn rows(rel: &str) -> Vec<ReportRow> {
        file(rel)
            .lines()
            .map(|l| {
                let mut parts = l.split('\t');
                let group = parts.next().unwrap();
                let label = parts.next().unwrap().to_string();
                let cells = parts.map(|v| CellSummary::full(v.parse::<f64>().unwrap() / 100.0)).collect();
                ReportRow {
                    group: (!group.is_empty()).then(|| group.to_string()),
                    label,
                    cells,
                }
            })
            .collect()
    }

    /// (name, rendered, golden) for every golden table.
    pub fn cases() -> Vec<(&'static str, String, String)> {
        let partial = vec![
            ReportRow {
                group: None,
                label: "Baseline".into(),
                cells: vec![
                    CellSummary { mean: Some(0.4531), n_ok: 8, n_failed: 2 },
                    CellSummary::full(0.5323),
                    CellSummary { mean: None, n_ok: 0, n_failed: 10 },
                ],
            },
            ReportRow {
                group: None,
                label: "Subtasks".into(),
                cells: vec![CellSummary::full(0.5889), CellSummary::full(0.5), CellSummary::full(0.61)],
            },
        ];
        vec![
            (
                "flat",
                render_table(&rows("fixtures/report_flat.tsv"), &SIZES, Layout::Flat),
                file("golden/report_flat.md"),
            ),
            (
                "grouped",
                render_table(&rows("fixtures/report_grouped.tsv"), &SIZES, Layout::Grouped),
                file("golden/report_grouped.md"),
            ),
            ("partial", render_table(&partial, &SIZES[..3], Layout::Flat), file("golden/report_partial.md")),
        ]
    }
}
