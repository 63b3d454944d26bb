mod common;

use common::reports;
use fewshot_hs::runner::{emit_report, render_table, Layout, ReportEntry, ReportRow, Target};

#[test]
fn tables_match_golden_files() {
    for (name, got, want) in reports::cases() {
        assert_eq!(got, want, "{name} table differs from its golden file");
    }
}

#[test]
fn rendering_is_stable() {
    let rows = reports::rows("fixtures/report_grouped.tsv");
    let a = render_table(&rows, &reports::SIZES, Layout::Grouped);
    let b = render_table(&rows.clone(), &reports::SIZES, Layout::Grouped);
    assert_eq!(a.as_bytes(), b.as_bytes());
}

#[test]
fn missing_columns_render_as_na() {
    let mut rows: Vec<ReportRow> = reports::rows("fixtures/report_flat.tsv");
    rows[0].cells.truncate(5);
    let t = render_table(&rows, &reports::SIZES, Layout::Flat);
    assert!(t.contains("| Baseline | 45.31 | 53.23 | 56.41 | 60.12 | 64.37 | n/a | n/a |"), "{t}");
    // Baseline no longer holds the 1024 maximum.
    assert!(t.contains("| + Group Identification | **58.89** | **61.77** | **68.03** | **70.25** | **70.28** | **70.65** | **72.76** |"), "{t}");
}

#[test]
fn empty_report_set_is_an_error() {
    assert!(emit_report(&Vec::<ReportEntry>::new(), Layout::Flat, Target::SbicTest).is_err());
}
