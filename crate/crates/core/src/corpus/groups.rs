use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

const ALIAS_TABLE: &str = include_str!("../../data/group_aliases.tsv");

/// Canonical, lowercase, trimmed group identity.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupId(String);

impl GroupId {
    /// Normalizes `raw` (lowercase, trim, alias lookup). `None` when nothing
    /// remains or the mention is the literal "none".
    pub fn new(raw: &str) -> Option<Self> {
        let lowered = raw.trim().to_lowercase();
        if lowered.is_empty() || lowered == "none" {
            return None;
        }
        let canonical = aliases()
            .get(lowered.as_str())
            .map(|c| c.to_string())
            .unwrap_or(lowered);
        Some(GroupId(canonical))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn aliases() -> &'static HashMap<&'static str, &'static str> {
    static TABLE: OnceLock<HashMap<&'static str, &'static str>> = OnceLock::new();
    TABLE.get_or_init(|| {
        ALIAS_TABLE
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let (alias, canonical) = l.split_once('\t')?;
                Some((alias.trim(), canonical.trim()))
            })
            .collect()
    })
}

/// Splits a free-text minority mention on commas and semicolons, then
/// normalizes each piece. Duplicates after aliasing are dropped, first
/// occurrence wins.
pub fn canonicalize_group(raw: &str) -> Vec<GroupId> {
    let mut out: Vec<GroupId> = Vec::new();
    for piece in raw.split([',', ';']) {
        if let Some(id) = GroupId::new(piece) {
            if !out.contains(&id) {
                out.push(id);
            }
        }
    }
    out
}
