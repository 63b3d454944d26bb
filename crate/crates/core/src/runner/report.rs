//! Markdown tables and per-cell machine files. F1 values are printed as
//! percentages with two decimals and the best value of each size column is
//! bolded. A dagger marks means computed over fewer seeds than were run.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CellStatus, EvalReport, SignificanceMatrix, Target};
use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub mean: Option<f64>,
    pub n_ok: usize,
    pub n_failed: usize,
}

impl CellSummary {
    pub fn full(mean: f64) -> Self {
        Self { mean: Some(mean), n_ok: 1, n_failed: 0 }
    }

    fn partial(&self) -> bool {
        self.mean.is_some() && self.n_failed > 0
    }
}

/// One table row: a model and its score per size column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    /// Grouping label such as a knowledge setting. Only used by the
    /// grouped layout.
    pub group: Option<String>,
    pub label: String,
    pub cells: Vec<CellSummary>,
}

impl ReportRow {
    pub fn from_report(group: Option<String>, label: &str, report: &EvalReport, sizes: &[usize], target: Target) -> Self {
        let cells = sizes
            .iter()
            .map(|&size| match report.aggregate(size, target) {
                Some(a) => CellSummary {
                    mean: a.f1_hs_mean,
                    n_ok: a.n_ok,
                    n_failed: a.n_failed,
                },
                None => CellSummary { mean: None, n_ok: 0, n_failed: 0 },
            })
            .collect();
        Self {
            group,
            label: label.to_string(),
            cells,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `Model | sizes...`
    Flat,
    /// `Model | Variant | sizes...`, the group label shown once per run of
    /// rows sharing it.
    Grouped,
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

const DAGGER_NOTE: &str = "† Mean over successful seeds only; some seeds failed.";

/// Renders the models-by-sizes table.
pub fn render_table(rows: &[ReportRow], sizes: &[usize], layout: Layout) -> String {
    let mut out = String::new();
    let head: Vec<String> = sizes.iter().map(usize::to_string).collect();
    let lead = match layout {
        Layout::Flat => "| Model |",
        Layout::Grouped => "| Model | Variant |",
    };
    let lead_rule = match layout {
        Layout::Flat => "|:---|",
        Layout::Grouped => "|:---|:---|",
    };
    let _ = writeln!(out, "{lead} {} |", head.join(" | "));
    let _ = writeln!(out, "{lead_rule}{}", "---:|".repeat(sizes.len()));

    // Column maxima on the printed values so ties after rounding share bold.
    let maxima: Vec<Option<f64>> = (0..sizes.len())
        .map(|j| {
            rows.iter()
                .filter_map(|r| r.cells.get(j).and_then(|c| c.mean))
                .map(|m| pct(m).parse::<f64>().expect("formatted number"))
                .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
        })
        .collect();

    let mut any_partial = false;
    let mut prev_group: Option<&str> = None;
    for r in rows {
        let mut line = String::from("|");
        if layout == Layout::Grouped {
            let g = r.group.as_deref().unwrap_or("");
            let shown = if prev_group == Some(g) { "" } else { g };
            prev_group = Some(g);
            let _ = write!(line, " {shown} |");
        }
        let _ = write!(line, " {} |", r.label);
        for (j, c) in r.cells.iter().enumerate().take(sizes.len()) {
            let text = match c.mean {
                None => "n/a".to_string(),
                Some(m) => {
                    let v = pct(m);
                    let is_max = maxima[j] == Some(v.parse::<f64>().expect("formatted number"));
                    let mut s = if is_max { format!("**{v}**") } else { v };
                    if c.partial() {
                        any_partial = true;
                        s.push('†');
                    }
                    s
                }
            };
            let _ = write!(line, " {text} |");
        }
        for _ in r.cells.len()..sizes.len() {
            line.push_str(" n/a |");
        }
        out.push_str(&line);
        out.push('\n');
    }
    if any_partial {
        out.push('\n');
        out.push_str(DAGGER_NOTE);
        out.push('\n');
    }
    out
}

/// Average standard deviation across configs, one row per size and one
/// column per model.
pub fn render_robustness_table(columns: &[(&str, &EvalReport)], sizes: &[usize]) -> String {
    let mut out = String::new();
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "| # of Samples | {} |", names.join(" | "));
    let _ = writeln!(out, "|---:|{}", "---:|".repeat(columns.len()));
    for &size in sizes {
        let vals: Vec<String> = columns
            .iter()
            .map(|(_, r)| {
                r.robustness
                    .iter()
                    .find(|e| e.size == size)
                    .and_then(|e| e.std)
                    .map_or_else(|| "n/a".to_string(), pct)
            })
            .collect();
        let _ = writeln!(out, "| {size} | {} |", vals.join(" | "));
    }
    out
}

fn p_text(p: f64) -> String {
    if p < 1e-4 {
        "<0.0001".into()
    } else {
        format!("{p:.4}")
    }
}

/// p-values per target and size; `*` marks p < 0.05.
pub fn render_significance(m: &SignificanceMatrix) -> String {
    let mut sizes: Vec<usize> = m.entries.iter().map(|e| e.size).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut targets: Vec<Target> = m.entries.iter().map(|e| e.target).collect();
    targets.sort();
    targets.dedup();

    let mut out = String::new();
    let _ = writeln!(out, "{} vs {}", m.a, m.b);
    out.push('\n');
    let head: Vec<String> = sizes.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "| Target | {} |", head.join(" | "));
    let _ = writeln!(out, "|:---|{}", "---:|".repeat(sizes.len()));
    for t in targets {
        let mut line = format!("| {t} |");
        for &s in &sizes {
            let cell = m
                .entries
                .iter()
                .find(|e| e.target == t && e.size == s)
                .and_then(|e| e.test)
                .map_or_else(
                    || "n/a".to_string(),
                    |r| format!("{}{}", p_text(r.p), if r.significant { "*" } else { "" }),
                );
            let _ = write!(line, " {cell} |");
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push('\n');
    out.push_str("* p < 0.05 (two-sided Welch's t-test over per-seed F1).\n");
    out
}

/// One line of the per-cell machine file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLine {
    pub model: String,
    pub size: usize,
    pub seed: u64,
    pub target: Option<Target>,
    pub status: String,
    pub config: Option<String>,
    pub f1_hs: Option<f64>,
    pub f1_off: Option<f64>,
    pub gd_group_f1: Option<f64>,
    pub gd_macro_f1: Option<f64>,
    pub fp_pct: Option<f64>,
    pub fn_pct: Option<f64>,
    pub invalid_rate: Option<f64>,
    pub n: Option<usize>,
    pub reason: Option<String>,
}

/// Flattens a report into one line per (size, seed, target), with one
/// target-less line for each failed cell.
pub fn cell_lines(model: &str, report: &EvalReport) -> Vec<CellLine> {
    let mut out = Vec::new();
    for c in &report.cells {
        match &c.status {
            CellStatus::Failed { reason } => out.push(CellLine {
                model: model.to_string(),
                size: c.size,
                seed: c.seed,
                target: None,
                status: "failed".into(),
                config: None,
                f1_hs: None,
                f1_off: None,
                gd_group_f1: None,
                gd_macro_f1: None,
                fp_pct: None,
                fn_pct: None,
                invalid_rate: None,
                n: None,
                reason: Some(reason.clone()),
            }),
            CellStatus::Ok => {
                for (t, m) in &c.scores {
                    out.push(CellLine {
                        model: model.to_string(),
                        size: c.size,
                        seed: c.seed,
                        target: Some(*t),
                        status: "ok".into(),
                        config: c.best_config.clone(),
                        f1_hs: Some(m.f1_hs),
                        f1_off: m.f1_off,
                        gd_group_f1: m.gd.map(|g| g.group_f1),
                        gd_macro_f1: m.gd.map(|g| g.macro_f1),
                        fp_pct: Some(m.fp_pct),
                        fn_pct: Some(m.fn_pct),
                        invalid_rate: Some(m.invalid_rate),
                        n: Some(m.n),
                        reason: None,
                    });
                }
            }
        }
    }
    out
}

/// A labelled experiment to place in the tables.
#[derive(Debug, Clone)]
pub struct ReportEntry {
    pub group: Option<String>,
    pub label: String,
    pub report: EvalReport,
}

/// Rendered report files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub table: String,
    pub robustness: String,
    pub cells: String,
}

pub const TABLE_FILE: &str = "table.md";
pub const ROBUSTNESS_FILE: &str = "robustness.md";
pub const CELLS_FILE: &str = "cells.jsonl";

impl ReportFiles {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut written = Vec::new();
        for (name, body) in [(TABLE_FILE, &self.table), (ROBUSTNESS_FILE, &self.robustness), (CELLS_FILE, &self.cells)] {
            let p = dir.join(name);
            std::fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
            written.push(p);
        }
        Ok(written)
    }
}

/// Renders the score table for `target`, the robustness table, and the
/// per-cell lines of every entry. Columns are the sizes of the first entry.
pub fn emit_report(entries: &[ReportEntry], layout: Layout, target: Target) -> Result<ReportFiles> {
    let first = entries
        .first()
        .ok_or_else(|| Error::Empty("no reports to render".into()))?;
    let sizes = first.report.sizes.clone();
    let rows: Vec<ReportRow> = entries
        .iter()
        .map(|e| ReportRow::from_report(e.group.clone(), &e.label, &e.report, &sizes, target))
        .collect();
    let columns: Vec<(&str, &EvalReport)> = entries.iter().map(|e| (e.label.as_str(), &e.report)).collect();
    let mut cells = Vec::new();
    for e in entries {
        let name = match &e.group {
            Some(g) => format!("{g} / {}", e.label),
            None => e.label.clone(),
        };
        cells.extend(cell_lines(&name, &e.report));
    }
    Ok(ReportFiles {
        table: render_table(&rows, &sizes, layout),
        robustness: render_robustness_table(&columns, &sizes),
        cells: jsonl::to_string(&cells),
    })
}

/// Report description read by the `report` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpec {
    #[serde(default = "flat")]
    pub layout: Layout,
    #[serde(default = "sbic_test")]
    pub target: Target,
    pub rows: Vec<ReportSpecRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSpecRow {
    #[serde(default)]
    pub group: Option<String>,
    pub label: String,
    /// Path to a `report.json`, relative to the spec file.
    pub report: PathBuf,
}

fn flat() -> Layout {
    Layout::Flat
}

fn sbic_test() -> Target {
    Target::SbicTest
}

impl ReportSpec {
    pub fn load(path: &Path) -> Result<(Self, Vec<ReportEntry>)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: ReportSpec =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let entries = spec
            .rows
            .iter()
            .map(|r| {
                Ok(ReportEntry {
                    group: r.group.clone(),
                    label: r.label.clone(),
                    report: EvalReport::load(&base.join(&r.report))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((spec, entries))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(label: &str, vals: &[f64]) -> ReportRow {
        ReportRow {
            group: None,
            label: label.into(),
            cells: vals.iter().map(|&v| CellSummary::full(v)).collect(),
        }
    }

    #[test]
    fn bolds_column_maxima_including_ties() {
        let rows = [row("a", &[0.5, 0.30001]), row("b", &[0.4, 0.3])];
        let t = render_table(&rows, &[16, 32], Layout::Flat);
        assert_eq!(
            t,
            "| Model | 16 | 32 |\n|:---|---:|---:|\n| a | **50.00** | **30.00** |\n| b | 40.00 | **30.00** |\n"
        );
    }

    #[test]
    fn partial_and_missing_cells() {
        let rows = [ReportRow {
            group: Some("g".into()),
            label: "x".into(),
            cells: vec![
                CellSummary { mean: Some(0.25), n_ok: 9, n_failed: 1 },
                CellSummary { mean: None, n_ok: 0, n_failed: 10 },
            ],
        }];
        let t = render_table(&rows, &[16, 32], Layout::Grouped);
        assert!(t.contains("| g | x | **25.00**† | n/a |"), "{t}");
        assert!(t.ends_with(&format!("\n\n{DAGGER_NOTE}\n")));
    }

    #[test]
    fn p_formatting() {
        assert_eq!(p_text(1.0), "1.0000");
        assert_eq!(p_text(1e-9), "<0.0001");
    }
}
