//! Canonical post records and the loaders that produce them.
//!
//! SBIC annotations are aggregated per post into a [`PostRecord`] with a
//! derived hate speech label (offensive and aimed at a group). The three
//! out-of-distribution corpora only carry a binary label and are always
//! assigned to [`Split::Test`].

mod groups;
mod ood;
mod sbic;

use serde::{Deserialize, Serialize};

pub use groups::{canonicalize_group, GroupId};
pub use ood::{
    load_ethos, load_hatexplain, load_hs18, HateXplainOptions, OodLoad,
};
pub use sbic::{aggregate_sbic, load_sbic, AggregateOutput, AggregateWarning, RawSbicAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TargetType {
    Group,
    Individual,
    None,
}

impl TargetType {
    pub const ALL: [TargetType; 3] = [TargetType::Group, TargetType::Individual, TargetType::None];

    pub fn as_str(self) -> &'static str {
        match self {
            TargetType::Group => "Group",
            TargetType::Individual => "Individual",
            TargetType::None => "None",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "SBIC")]
    Sbic,
    HateXplain,
    #[serde(rename = "HS18")]
    Hs18,
    Ethos,
}

impl Source {
    pub fn is_ood(self) -> bool {
        self != Source::Sbic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Split {
    TrainPool,
    ValPool,
    Test,
}

/// One annotated post. Field order is the on-disk order of the canonical
/// corpus file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub id: String,
    pub text: String,
    pub offensive: bool,
    pub target_type: TargetType,
    pub groups: Vec<GroupId>,
    pub implication: Option<String>,
    pub hs: bool,
    pub source: Source,
    pub split: Split,
}

impl PostRecord {
    /// Label invariants. SBIC records get the full set; other sources only
    /// need `hs ⇒ offensive`.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.hs && !self.offensive {
            return Err(format!("{}: hs without offensive", self.id));
        }
        if self.source == Source::Sbic {
            let derived = self.offensive && self.target_type == TargetType::Group;
            if self.hs != derived {
                return Err(format!("{}: hs disagrees with offensive ∧ Group", self.id));
            }
            if self.target_type != TargetType::None && !self.offensive {
                return Err(format!("{}: target without offensive", self.id));
            }
            if self.groups.is_empty() == (self.target_type == TargetType::Group) {
                return Err(format!("{}: groups/target_type mismatch", self.id));
            }
        }
        Ok(())
    }

    /// Label stratum used by the few-shot sampler.
    pub fn stratum(&self) -> Stratum {
        if self.hs {
            Stratum::Hs
        } else if self.offensive {
            Stratum::OffensiveNonHs
        } else {
            Stratum::Inoffensive
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratum {
    Inoffensive,
    OffensiveNonHs,
    Hs,
}

impl Stratum {
    pub fn as_str(self) -> &'static str {
        match self {
            Stratum::Inoffensive => "inoffensive",
            Stratum::OffensiveNonHs => "offensive_non_hs",
            Stratum::Hs => "hs",
        }
    }
}

/// Sets the `offensive`/`target_type` fields of a binary-labelled
/// out-of-distribution record so that they agree with `hs`.
pub(crate) fn binary_record(id: String, text: String, hs: bool, offensive: bool, source: Source) -> PostRecord {
    let offensive = offensive || hs;
    let target_type = match (hs, offensive) {
        (true, _) => TargetType::Group,
        (false, true) => TargetType::Individual,
        (false, false) => TargetType::None,
    };
    PostRecord {
        id,
        text,
        offensive,
        target_type,
        groups: Vec::new(),
        implication: None,
        hs,
        source,
        split: Split::Test,
    }
}
