use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{canonicalize_group, GroupId, PostRecord, Source, Split, TargetType};
use crate::error::{Error, Result};

/// One annotator's judgement of one post.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSbicAnnotation {
    pub post_id: String,
    pub text: String,
    pub offensive_score: f64,
    pub who_target_score: Option<f64>,
    pub target_minorities: Vec<String>,
    pub target_stereotype: String,
}

const COL_TEXT: &str = "post";
const COL_OFFENSIVE: &str = "offensiveYN";
const COL_WHO: &str = "whoTarget";
const COL_MINORITY: &str = "targetMinority";
const COL_STEREOTYPE: &str = "targetStereotype";
const COL_ID: &str = "post_id";

/// Reads an SBIC release file (`.csv`, or `.tsv` for tab-separated).
///
/// Required columns: `post`, `offensiveYN`, `whoTarget`, `targetMinority`,
/// `targetStereotype`. An optional `post_id` column is used as the id;
/// without it the id is `sbic-` followed by the first 16 hex digits of the
/// SHA-256 of the post text.
///
/// A `whoTarget` value on a row whose `offensiveYN` is 0 is discarded.
pub fn load_sbic(path: &Path) -> Result<Vec<RawSbicAnnotation>> {
    let delimiter = if path.extension().is_some_and(|e| e == "tsv") {
        b'\t'
    } else {
        b','
    };
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .from_reader(file);
    let headers = reader.headers()?.clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let text_col = column(COL_TEXT)?;
    let off_col = column(COL_OFFENSIVE)?;
    let who_col = column(COL_WHO)?;
    let min_col = column(COL_MINORITY)?;
    let st_col = column(COL_STEREOTYPE)?;
    let id_col = headers.iter().position(|h| h == COL_ID);

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let bad = |message: String| Error::BadRow {
            path: path.to_path_buf(),
            row: row_no,
            message,
        };
        let field = |c: usize| row.get(c).unwrap_or("").trim();

        let text = field(text_col).to_string();
        let offensive_score = parse_offensive(field(off_col)).map_err(&bad)?;
        let who_target_score = parse_who(field(who_col)).map_err(&bad)?;
        let who_target_score = who_target_score.filter(|_| offensive_score > 0.0);
        let target_minorities = field(min_col)
            .split([',', ';'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let post_id = match id_col.map(field) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => derived_id(&text),
        };
        out.push(RawSbicAnnotation {
            post_id,
            text,
            offensive_score,
            who_target_score,
            target_minorities,
            target_stereotype: field(st_col).to_string(),
        });
    }
    Ok(out)
}

fn derived_id(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
    format!("sbic-{hex}")
}

fn parse_offensive(raw: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("unparseable {COL_OFFENSIVE} `{raw}`"))?;
    if [0.0, 0.5, 1.0].contains(&v) {
        Ok(v)
    } else {
        Err(format!("{COL_OFFENSIVE} `{raw}` not in {{0, 0.5, 1}}"))
    }
}

fn parse_who(raw: &str) -> std::result::Result<Option<f64>, String> {
    if raw.is_empty() {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("unparseable {COL_WHO} `{raw}`"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(Some(v))
    } else {
        Err(format!("{COL_WHO} `{raw}` outside [0, 1]"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AggregateWarning {
    /// Offensive post with no annotator answering the target question;
    /// labelled `Individual`.
    NoTargetAnnotation { post_id: String },
    /// Group-targeted post whose annotators named no group; the group list
    /// is set to the placeholder `unspecified`.
    GroupWithoutMinority { post_id: String },
}

#[derive(Debug, Clone, Default)]
pub struct AggregateOutput {
    pub records: Vec<PostRecord>,
    pub warnings: Vec<AggregateWarning>,
}

/// Placeholder group for group-targeted posts whose annotators left the
/// minority field empty.
pub const UNSPECIFIED_GROUP: &str = "unspecified";

/// Collapses per-annotator rows into one record per post.
///
/// Output is sorted by id and independent of annotation order.
pub fn aggregate_sbic(annotations: &[RawSbicAnnotation], split: Split) -> AggregateOutput {
    let mut by_post: BTreeMap<&str, Vec<&RawSbicAnnotation>> = BTreeMap::new();
    for a in annotations {
        by_post.entry(a.post_id.as_str()).or_default().push(a);
    }

    let mut out = AggregateOutput::default();
    for (post_id, anns) in by_post {
        let n = anns.len() as f64;
        let offensive = anns.iter().map(|a| a.offensive_score).sum::<f64>() / n >= 0.5;

        let who: Vec<f64> = anns.iter().filter_map(|a| a.who_target_score).collect();
        let target_type = if !offensive {
            TargetType::None
        } else if who.is_empty() {
            out.warnings.push(AggregateWarning::NoTargetAnnotation {
                post_id: post_id.to_string(),
            });
            TargetType::Individual
        } else if who.iter().sum::<f64>() / who.len() as f64 >= 0.5 {
            TargetType::Group
        } else {
            TargetType::Individual
        };

        let groups = if target_type == TargetType::Group {
            let mut groups = union_groups(&anns);
            if groups.is_empty() {
                out.warnings.push(AggregateWarning::GroupWithoutMinority {
                    post_id: post_id.to_string(),
                });
                groups.push(GroupId::new(UNSPECIFIED_GROUP).expect("nonempty"));
            }
            groups
        } else {
            Vec::new()
        };

        let text = anns.iter().map(|a| a.text.as_str()).min().unwrap_or_default();
        out.records.push(PostRecord {
            id: post_id.to_string(),
            text: text.to_string(),
            offensive,
            target_type,
            groups,
            implication: majority_stereotype(&anns),
            hs: offensive && target_type == TargetType::Group,
            source: Source::Sbic,
            split,
        });
    }
    out
}

/// Groups named by annotators who marked the post as group-targeted,
/// ordered by mention count (descending) then id.
fn union_groups(anns: &[&RawSbicAnnotation]) -> Vec<GroupId> {
    let mut counts: HashMap<GroupId, usize> = HashMap::new();
    for a in anns.iter().filter(|a| a.who_target_score.is_some_and(|w| w >= 0.5)) {
        let mut seen = Vec::new();
        for m in &a.target_minorities {
            for g in canonicalize_group(m) {
                if !seen.contains(&g) {
                    seen.push(g);
                }
            }
        }
        for g in seen {
            *counts.entry(g).or_default() += 1;
        }
    }
    let mut groups: Vec<(GroupId, usize)> = counts.into_iter().collect();
    groups.sort_by(|(ga, ca), (gb, cb)| cb.cmp(ca).then_with(|| ga.cmp(gb)));
    groups.into_iter().map(|(g, _)| g).collect()
}

fn majority_stereotype(anns: &[&RawSbicAnnotation]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for a in anns {
        let s = a.target_stereotype.trim();
        if !s.is_empty() && !s.eq_ignore_ascii_case("none") {
            *counts.entry(s).or_default() += 1;
        }
    }
    // BTreeMap iterates lexicographically, so `max_by_key` over reversed
    // order keeps the smallest string among ties.
    counts
        .into_iter()
        .rev()
        .max_by_key(|(_, c)| *c)
        .map(|(s, _)| s.to_string())
}
