//! Loaders for the out-of-distribution evaluation corpora.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{binary_record, PostRecord, Source};
use crate::error::{Error, Result};

/// Records plus bookkeeping about what the loader dropped or defaulted.
#[derive(Debug, Clone, Default, Serialize)]
pub struct OodLoad {
    pub records: Vec<PostRecord>,
    /// Excluded rows by label.
    pub excluded: BTreeMap<String, usize>,
    /// Ids that had no strict annotator majority (HateXplain only).
    pub ties: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct HateXplainOptions {
    /// `post_id_divisions.json`; when set only the `test` ids are kept.
    pub divisions: Option<PathBuf>,
    /// Count a majority `offensive` label as hate speech too.
    pub offensive_is_hs: bool,
}

#[derive(Deserialize)]
struct HxPost {
    post_id: String,
    annotators: Vec<HxAnnotator>,
    post_tokens: Vec<String>,
}

#[derive(Deserialize)]
struct HxAnnotator {
    label: String,
}

#[derive(Deserialize)]
struct HxDivisions {
    test: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum HxLabel {
    Hate,
    Offensive,
    Normal,
}

fn hx_label(raw: &str) -> Option<HxLabel> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "hatespeech" | "hate" | "hateful" => Some(HxLabel::Hate),
        "offensive" => Some(HxLabel::Offensive),
        "normal" => Some(HxLabel::Normal),
        _ => None,
    }
}

/// Reads the HateXplain `dataset.json` (a map from post id to post).
///
/// A strict majority of `hatespeech` votes gives `hs = true`. A post is
/// offensive when hate and offensive votes together form a strict
/// majority. Posts without any strict majority label are non-HS and listed
/// in [`OodLoad::ties`].
pub fn load_hatexplain(path: &Path, opts: &HateXplainOptions) -> Result<OodLoad> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let posts: BTreeMap<String, HxPost> =
        serde_json::from_str(&raw).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            line: 0,
            source,
        })?;

    let keep: Option<HashSet<String>> = match &opts.divisions {
        Some(div_path) => {
            let raw = std::fs::read_to_string(div_path).map_err(|e| Error::io(div_path, e))?;
            let div: HxDivisions = serde_json::from_str(&raw).map_err(|source| Error::Json {
                path: div_path.clone(),
                line: 0,
                source,
            })?;
            Some(div.test.into_iter().collect())
        }
        None => None,
    };

    let mut out = OodLoad::default();
    for (i, (_, post)) in posts.into_iter().enumerate() {
        if keep.as_ref().is_some_and(|k| !k.contains(&post.post_id)) {
            continue;
        }
        let mut votes: HashMap<HxLabel, usize> = HashMap::new();
        for a in &post.annotators {
            let label = hx_label(&a.label).ok_or_else(|| Error::BadRow {
                path: path.to_path_buf(),
                row: i + 1,
                message: format!("post {}: unknown label `{}`", post.post_id, a.label),
            })?;
            *votes.entry(label).or_default() += 1;
        }
        let n = post.annotators.len();
        let count = |l: HxLabel| votes.get(&l).copied().unwrap_or(0);
        let majority = [HxLabel::Hate, HxLabel::Offensive, HxLabel::Normal]
            .into_iter()
            .find(|&l| 2 * count(l) > n);
        if majority.is_none() {
            out.ties.push(post.post_id.clone());
        }
        let hs = match majority {
            Some(HxLabel::Hate) => true,
            Some(HxLabel::Offensive) => opts.offensive_is_hs,
            _ => false,
        };
        let offensive = 2 * (count(HxLabel::Hate) + count(HxLabel::Offensive)) > n;
        out.records.push(binary_record(
            format!("hatexplain-{}", post.post_id),
            post.post_tokens.join(" "),
            hs,
            offensive,
            Source::HateXplain,
        ));
    }
    Ok(out)
}

/// Reads the Stormfront corpus. `path` is either the release directory
/// (containing `annotations_metadata.csv` and `all_files/`) or the metadata
/// file itself. Only `hate` and `noHate` rows are kept.
pub fn load_hs18(path: &Path) -> Result<OodLoad> {
    let (meta, root) = if path.is_dir() {
        (path.join("annotations_metadata.csv"), path.to_path_buf())
    } else {
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (path.to_path_buf(), root)
    };
    let file = std::fs::File::open(&meta).map_err(|e| Error::io(&meta, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: meta.clone(),
                column: name.to_string(),
            })
    };
    let id_col = col("file_id")?;
    let label_col = col("label")?;

    let mut out = OodLoad::default();
    for row in reader.records() {
        let row = row?;
        let file_id = row.get(id_col).unwrap_or("").trim().to_string();
        let label = row.get(label_col).unwrap_or("").trim();
        let hs = match label {
            "hate" => true,
            "noHate" => false,
            other => {
                *out.excluded.entry(other.to_string()).or_default() += 1;
                continue;
            }
        };
        let text_path = root.join("all_files").join(format!("{file_id}.txt"));
        let text = std::fs::read_to_string(&text_path).map_err(|e| Error::io(&text_path, e))?;
        out.records.push(binary_record(
            format!("hs18-{file_id}"),
            text.trim().to_string(),
            hs,
            false,
            Source::Hs18,
        ));
    }
    Ok(out)
}

/// Reads `Ethos_Dataset_Binary.csv` (semicolon separated, columns
/// `comment;isHate`). A score of at least 0.5 is hate speech.
pub fn load_ethos(path: &Path) -> Result<OodLoad> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().delimiter(b';').from_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let text_col = col("comment")?;
    let score_col = col("isHate")?;

    let mut out = OodLoad::default();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let raw = row.get(score_col).unwrap_or("").trim();
        let score: f64 = raw.parse().map_err(|_| Error::BadRow {
            path: path.to_path_buf(),
            row: i + 1,
            message: format!("unparseable isHate `{raw}`"),
        })?;
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::BadRow {
                path: path.to_path_buf(),
                row: i + 1,
                message: format!("isHate {score} outside [0, 1]"),
            });
        }
        out.records.push(binary_record(
            format!("ethos-{}", i + 1),
            row.get(text_col).unwrap_or("").trim().to_string(),
            score >= 0.5,
            false,
            Source::Ethos,
        ));
    }
    Ok(out)
}
