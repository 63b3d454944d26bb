//! Knowledge-infusion corpora: templated commonsense tuples and linearized
//! stereotype entries, each written as its own stage file.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jsonl;
use crate::rng::{HarnessRng, Stream};

macro_rules! relations {
    ($($variant:ident => $name:literal, $template:literal;)*) => {
        /// The 23 relations that have a human readable template.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum AtomicRelation { $($variant),* }

        impl AtomicRelation {
            pub const ALL: [AtomicRelation; 23] = [$(AtomicRelation::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(AtomicRelation::$variant => $name),* }
            }

            /// Template with `{0}` for the head and `{1}` for the tail.
            pub fn template(self) -> &'static str {
                match self { $(AtomicRelation::$variant => $template),* }
            }
        }

        impl FromStr for AtomicRelation {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok(AtomicRelation::$variant),)*
                    other => Err(Error::UnknownRelation(other.to_string())),
                }
            }
        }
    };
}

relations! {
    ObjectUse => "ObjectUse", "{0} is used for {1}";
    AtLocation => "AtLocation", "You are likely to find {0} in {1}";
    MadeUpOf => "MadeUpOf", "{0} is made up of {1}";
    HasProperty => "HasProperty", "{0} is {1}";
    CapableOf => "CapableOf", "{0} can {1}";
    Desires => "Desires", "{0} wants {1}";
    NotDesires => "NotDesires", "{0} does not want {1}";
    IsAfter => "isAfter", "Something that happens after {0} is {1}";
    HasSubEvent => "HasSubEvent", "Something you might do while {0} is {1}";
    IsBefore => "isBefore", "Something that happens before {0} is {1}";
    HinderedBy => "HinderedBy", "{0} is hindered by {1}";
    Causes => "Causes", "Sometimes {0} causes {1}";
    XReason => "xReason", "{0}. The reason for PersonX doing this is {1}";
    IsFilledBy => "isFilledBy", "{0} can be filled by {1}";
    XNeed => "xNeed", "But before {0}, PersonX needed {1}";
    XAttr => "xAttr", "{0} is seen as {1}";
    XEffect => "xEffect", "As a result of {0}, PersonX will {1}";
    XReact => "xReact", "As a result of {0}, PersonX feels {1}";
    XWant => "xWant", "After {0}, PersonX would want {1}";
    XIntent => "xIntent", "Because of {0}, PersonX wanted {1}";
    OEffect => "oEffect", "as a result of {0}, others will {1}";
    OReact => "oReact", "as a result of {0}, others would feel {1}";
    OWant => "oWant", "as a result of {0}, others would want {1}";
}

impl fmt::Display for AtomicRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicTuple {
    pub head: String,
    pub relation: AtomicRelation,
    pub tail: String,
}

impl AtomicTuple {
    pub fn new(head: &str, relation: &str, tail: &str) -> Result<Self> {
        let relation: AtomicRelation = relation.parse()?;
        let (head, tail) = (head.trim(), tail.trim());
        for (what, s) in [("head", head), ("tail", tail)] {
            if s.is_empty() {
                return Err(Error::Config(format!("{relation} tuple with empty {what}")));
            }
            if s.contains("{0}") || s.contains("{1}") {
                return Err(Error::Config(format!("{what} `{s}` contains a template slot")));
            }
        }
        Ok(Self {
            head: head.to_string(),
            relation,
            tail: tail.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    Atomic,
    StereoSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeExample {
    pub input: String,
    pub output: String,
    pub origin: Origin,
}

/// Fills the head into the relation template and drops the tail slot
/// together with the space before it. The tail becomes the target.
pub fn expand_atomic(t: &AtomicTuple) -> KnowledgeExample {
    let template = t.relation.template();
    let prompt = template
        .strip_suffix(" {1}")
        .expect("every template ends with the tail slot");
    let (before, after) = prompt.split_once("{0}").expect("every template has a head slot");
    KnowledgeExample {
        input: format!("{before}{}{after}", t.head),
        output: t.tail.clone(),
        origin: Origin::Atomic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BiasType {
    Gender,
    Profession,
    Race,
    Religion,
}

impl BiasType {
    fn as_str(self) -> &'static str {
        match self {
            BiasType::Gender => "gender",
            BiasType::Profession => "profession",
            BiasType::Race => "race",
            BiasType::Religion => "religion",
        }
    }
}

/// A stereotype-labelled intersentence entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StereoEntry {
    pub target: String,
    pub bias_type: BiasType,
    pub sentence: String,
    pub context: String,
}

/// `None` when the entry has no context to predict.
pub fn linearize_stereoset(e: &StereoEntry) -> Option<KnowledgeExample> {
    let context = e.context.trim();
    if context.is_empty() {
        return None;
    }
    Some(KnowledgeExample {
        input: format!(
            "Target: {} Bias Type: {} Sentence: {} Context?",
            e.target,
            e.bias_type.as_str(),
            e.sentence
        ),
        output: context.to_string(),
        origin: Origin::StereoSet,
    })
}

#[derive(Debug, Clone, Default)]
pub struct AtomicLoad {
    pub tuples: Vec<AtomicTuple>,
    /// Skipped rows by relation name (unknown relations, empty fields).
    pub skipped: BTreeMap<String, usize>,
}

/// Reads a tab-separated `head<TAB>relation<TAB>tail` file without header.
/// With `strict`, the first unknown relation is an error; otherwise such
/// rows are counted in [`AtomicLoad::skipped`].
pub fn load_atomic(path: &Path, strict: bool) -> Result<AtomicLoad> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = AtomicLoad::default();
    for (i, line) in raw.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        let (head, rel, tail) = match (cols.next(), cols.next(), cols.next()) {
            (Some(h), Some(r), Some(t)) => (h, r.trim(), t),
            _ => {
                return Err(Error::BadRow {
                    path: path.to_path_buf(),
                    row: i + 1,
                    message: "expected head, relation, tail".into(),
                })
            }
        };
        match AtomicTuple::new(head, rel, tail) {
            Ok(t) => out.tuples.push(t),
            Err(e @ Error::UnknownRelation(_)) if strict => return Err(e),
            Err(_) => *out.skipped.entry(rel.to_string()).or_default() += 1,
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct SsFile {
    data: SsData,
}

#[derive(Deserialize)]
struct SsData {
    intersentence: Vec<SsItem>,
    #[serde(default)]
    intrasentence: Vec<serde_json::Value>,
}

#[derive(Deserialize)]
struct SsItem {
    target: String,
    bias_type: BiasType,
    context: String,
    sentences: Vec<SsSentence>,
}

#[derive(Deserialize)]
struct SsSentence {
    sentence: String,
    gold_label: String,
}

#[derive(Debug, Clone, Default)]
pub struct StereoLoad {
    pub entries: Vec<StereoEntry>,
    pub omitted_anti_stereotype: usize,
    pub omitted_unrelated: usize,
    pub omitted_intrasentence: usize,
}

/// Reads a StereoSet release file and keeps only stereotype sentences of
/// the intersentence task.
pub fn load_stereoset(path: &Path) -> Result<StereoLoad> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SsFile = serde_json::from_str(&raw).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        line: 0,
        source,
    })?;
    let mut out = StereoLoad {
        omitted_intrasentence: file.data.intrasentence.len(),
        ..Default::default()
    };
    for item in file.data.intersentence {
        for s in item.sentences {
            match s.gold_label.as_str() {
                "stereotype" => out.entries.push(StereoEntry {
                    target: item.target.clone(),
                    bias_type: item.bias_type,
                    sentence: s.sentence,
                    context: item.context.clone(),
                }),
                "anti-stereotype" => out.omitted_anti_stereotype += 1,
                _ => out.omitted_unrelated += 1,
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnowledgeConfig {
    pub atomic: bool,
    pub stereoset: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeCorpus {
    pub atomic: Vec<KnowledgeExample>,
    pub stereoset: Vec<KnowledgeExample>,
    pub skipped_stereoset: usize,
}

pub const ATOMIC_STAGE_FILE: &str = "atomic-stage.jsonl";
pub const STEREOSET_STAGE_FILE: &str = "stereoset-stage.jsonl";

/// Expands and shuffles each enabled source into its own stage.
pub fn build_knowledge_corpus(
    tuples: &[AtomicTuple],
    entries: &[StereoEntry],
    config: KnowledgeConfig,
) -> Result<KnowledgeCorpus> {
    if !config.atomic && !config.stereoset {
        return Err(Error::Config("no knowledge source enabled".into()));
    }
    let mut rng = HarnessRng::new(config.seed, Stream::KnowledgeShuffle);
    let mut corpus = KnowledgeCorpus::default();
    if config.atomic {
        corpus.atomic = tuples.iter().map(expand_atomic).collect();
        rng.shuffle(&mut corpus.atomic);
    }
    if config.stereoset {
        for e in entries {
            match linearize_stereoset(e) {
                Some(ex) => corpus.stereoset.push(ex),
                None => corpus.skipped_stereoset += 1,
            }
        }
        rng.shuffle(&mut corpus.stereoset);
    }
    Ok(corpus)
}

impl KnowledgeCorpus {
    /// Writes one file per enabled stage into `dir`, returning their paths.
    pub fn write(&self, dir: &Path, config: KnowledgeConfig) -> Result<Vec<PathBuf>> {
        let mut written = Vec::new();
        if config.atomic {
            let p = dir.join(ATOMIC_STAGE_FILE);
            jsonl::write(&p, &self.atomic)?;
            written.push(p);
        }
        if config.stereoset {
            let p = dir.join(STEREOSET_STAGE_FILE);
            jsonl::write(&p, &self.stereoset)?;
            written.push(p);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(head: &str, rel: &str, tail: &str) -> AtomicTuple {
        AtomicTuple::new(head, rel, tail).unwrap()
    }

    #[test]
    fn x_need_template() {
        let ex = expand_atomic(&tuple("PersonX goes jogging", "xNeed", "to put on running shoes"));
        assert_eq!(ex.input, "But before PersonX goes jogging, PersonX needed");
        assert_eq!(ex.output, "to put on running shoes");
        assert_eq!(ex.origin, Origin::Atomic);
    }

    #[test]
    fn object_use_template() {
        let ex = expand_atomic(&tuple("a knife", "ObjectUse", "cutting bread"));
        assert_eq!(ex.input, "a knife is used for");
        assert_eq!(ex.output, "cutting bread");
    }

    #[test]
    fn unknown_relation_is_named() {
        let err = AtomicTuple::new("h", "xFoo", "t").unwrap_err();
        assert!(matches!(err, Error::UnknownRelation(ref r) if r == "xFoo"));
    }

    #[test]
    fn relation_names_round_trip() {
        for rel in AtomicRelation::ALL {
            assert_eq!(rel.name().parse::<AtomicRelation>().unwrap(), rel);
            assert!(rel.template().ends_with(" {1}"));
            assert_eq!(rel.template().matches("{0}").count(), 1);
        }
    }

    #[test]
    fn stereoset_format() {
        let e = StereoEntry {
            target: "nurse".into(),
            bias_type: BiasType::Profession,
            sentence: "She is caring.".into(),
            context: "The nurse greeted us.".into(),
        };
        let ex = linearize_stereoset(&e).unwrap();
        assert_eq!(
            ex.input,
            "Target: nurse Bias Type: profession Sentence: She is caring. Context?"
        );
        assert_eq!(ex.output, "The nurse greeted us.");
    }

    #[test]
    fn stereoset_cape_verde() {
        let e = StereoEntry {
            target: "Cape Verde".into(),
            bias_type: BiasType::Race,
            sentence: "They rely on the ports.".into(),
            context: "Cape Verde has a lot of water.".into(),
        };
        let ex = linearize_stereoset(&e).unwrap();
        assert_eq!(
            ex.input,
            "Target: Cape Verde Bias Type: race Sentence: They rely on the ports. Context?"
        );
        assert_eq!(ex.output, "Cape Verde has a lot of water.");
    }

    #[test]
    fn empty_context_skipped() {
        let e = StereoEntry {
            target: "x".into(),
            bias_type: BiasType::Gender,
            sentence: "s".into(),
            context: "  ".into(),
        };
        assert!(linearize_stereoset(&e).is_none());
    }

    #[test]
    fn both_sources_disabled_fails() {
        let cfg = KnowledgeConfig {
            atomic: false,
            stereoset: false,
            seed: 0,
        };
        assert!(build_knowledge_corpus(&[], &[], cfg).is_err());
    }

    #[test]
    fn atomic_loader_counts_unknown_relations() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("train.tsv");
        std::fs::write(
            &p,
            "a knife\tObjectUse\tcutting bread\nPersonX eats\tHasA\tfood\nPersonX runs\txNeed\t\n",
        )
        .unwrap();
        let out = load_atomic(&p, false).unwrap();
        assert_eq!(out.tuples.len(), 1);
        assert_eq!(out.skipped.get("HasA"), Some(&1));
        assert_eq!(out.skipped.get("xNeed"), Some(&1));
        assert!(matches!(load_atomic(&p, true), Err(Error::UnknownRelation(_))));
    }
}
