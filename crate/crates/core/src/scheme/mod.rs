//! Linearization schemes: how a post's labels are written as a target
//! sequence for a sequence-to-sequence model, and how a generated sequence
//! is read back.
//!
//! A decomposed scheme asks the first question in the input and interleaves
//! the remaining questions with their answers in the output, always ending
//! up with the hate speech answer somewhere in the sequence:
//!
//! ```text
//! input:  Post: <text> Offensive?
//! output: Yes Target implication? Group Targeted minorities? women Hate speech? Yes
//! ```

mod linearize;
mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use linearize::{
    expected_prediction, linearize, reference_output, render_output, render_with_hs, LinearizedExample,
};
pub use parse::{parse, ParsedPrediction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Field {
    Off,
    Gd,
    Gi,
    Impl,
    Hs,
}

impl Field {
    pub fn tag(self) -> &'static str {
        match self {
            Field::Off => "OFF",
            Field::Gd => "GD",
            Field::Gi => "GI",
            Field::Impl => "IMPL",
            Field::Hs => "HS",
        }
    }

    pub fn default_question(self) -> &'static str {
        match self {
            Field::Off => "Offensive?",
            Field::Gd => "Target implication?",
            Field::Gi => "Targeted minorities?",
            Field::Impl => "Implied stereotype?",
            Field::Hs => "Hate speech?",
        }
    }
}

impl FromStr for Field {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "OFF" => Ok(Field::Off),
            "GD" => Ok(Field::Gd),
            "GI" => Ok(Field::Gi),
            "IMPL" => Ok(Field::Impl),
            "HS" => Ok(Field::Hs),
            _ => Err(Error::UnknownScheme(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    Baseline,
    MinimalDecomposition,
    FullSubtasks,
    WithImplication,
}

pub type PromptTable = BTreeMap<Field, String>;

pub fn default_prompt_table() -> PromptTable {
    [Field::Off, Field::Gd, Field::Gi, Field::Impl, Field::Hs]
        .into_iter()
        .map(|f| (f, f.default_question().to_string()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub variant: Variant,
    pub field_order: Vec<Field>,
    pub prompt_table: PromptTable,
}

/// The field order of the default decomposed scheme.
pub const FULL_ORDER: [Field; 4] = [Field::Off, Field::Gd, Field::Gi, Field::Hs];

fn is_permutation(order: &[Field], of: &[Field]) -> bool {
    let mut a = order.to_vec();
    let mut b = of.to_vec();
    a.sort();
    b.sort();
    a == b
}

impl SchemeConfig {
    /// Classifies `order` into its variant, rejecting orders that match none.
    pub fn from_order(order: Vec<Field>) -> Result<Self> {
        let variant = if order == [Field::Hs] {
            Variant::Baseline
        } else if is_permutation(&order, &[Field::Off, Field::Gd, Field::Hs]) {
            Variant::MinimalDecomposition
        } else if is_permutation(&order, &FULL_ORDER) {
            Variant::FullSubtasks
        } else {
            let hs_at = order.iter().position(|&f| f == Field::Hs);
            let impl_ok = hs_at.is_some_and(|i| i > 0 && order[i - 1] == Field::Impl);
            let rest: Vec<Field> = order.iter().copied().filter(|&f| f != Field::Impl).collect();
            if impl_ok && is_permutation(&rest, &FULL_ORDER) {
                Variant::WithImplication
            } else {
                let tags: Vec<&str> = order.iter().map(|f| f.tag()).collect();
                return Err(Error::UnknownScheme(tags.join("-")));
            }
        };
        Ok(Self {
            variant,
            field_order: order,
            prompt_table: default_prompt_table(),
        })
    }

    pub fn baseline() -> Self {
        Self::from_order(vec![Field::Hs]).expect("valid order")
    }

    pub fn minimal() -> Self {
        Self::from_order(vec![Field::Off, Field::Gd, Field::Hs]).expect("valid order")
    }

    pub fn full() -> Self {
        Self::from_order(FULL_ORDER.to_vec()).expect("valid order")
    }

    pub fn with_implication() -> Self {
        Self::from_order(vec![Field::Off, Field::Gd, Field::Gi, Field::Impl, Field::Hs])
            .expect("valid order")
    }

    /// Looks up a scheme by name: `baseline`, `minimal`, `full`,
    /// `full+impl`, or any valid dash-joined field order such as
    /// `off-hs-gd-gi`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "baseline" => Ok(Self::baseline()),
            "minimal" => Ok(Self::minimal()),
            "full" => Ok(Self::full()),
            "full+impl" => Ok(Self::with_implication()),
            other => {
                let order = other
                    .split('-')
                    .map(str::parse)
                    .collect::<Result<Vec<Field>>>()
                    .map_err(|_| Error::UnknownScheme(other.to_string()))?;
                Self::from_order(order).map_err(|_| Error::UnknownScheme(other.to_string()))
            }
        }
    }

    /// Stable identifier: the short name for the four standard schemes,
    /// otherwise the dash-joined order.
    pub fn name(&self) -> String {
        let order: Vec<String> = self
            .field_order
            .iter()
            .map(|f| f.tag().to_ascii_lowercase())
            .collect();
        let dashed = order.join("-");
        match dashed.as_str() {
            "hs" => "baseline".into(),
            "off-gd-hs" => "minimal".into(),
            "off-gd-gi-hs" => "full".into(),
            "off-gd-gi-impl-hs" => "full+impl".into(),
            _ => dashed,
        }
    }

    /// Name plus a marker when the prompt table differs from the default.
    pub fn fingerprint(&self) -> String {
        if self.prompt_table == default_prompt_table() {
            self.name()
        } else {
            let prompts: Vec<String> = self.prompt_table.values().cloned().collect();
            format!("{}[{}]", self.name(), prompts.join("|"))
        }
    }

    pub fn question(&self, f: Field) -> &str {
        self.prompt_table
            .get(&f)
            .map(String::as_str)
            .unwrap_or_else(|| f.default_question())
    }

    pub fn demands(&self, f: Field) -> bool {
        self.field_order.contains(&f)
    }

    pub fn is_decomposed(&self) -> bool {
        self.variant != Variant::Baseline
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// The five subtask orders compared when studying where the hate speech
/// label goes; the first is the default full order.
pub fn enumerate_order_variants() -> Vec<SchemeConfig> {
    use Field::*;
    [
        vec![Off, Gd, Gi, Hs],
        vec![Off, Gd, Hs, Gi],
        vec![Off, Hs, Gd, Gi],
        vec![Hs, Off, Gd, Gi],
        vec![Gd, Gi, Off, Hs],
    ]
    .into_iter()
    .map(|o| SchemeConfig::from_order(o).expect("valid order"))
    .collect()
}

/// Every scheme the harness ships: baseline, minimal, the five full
/// orders, and the full scheme with the implication subtask.
pub fn all_variants() -> Vec<SchemeConfig> {
    let mut out = vec![SchemeConfig::baseline(), SchemeConfig::minimal()];
    out.extend(enumerate_order_variants());
    out.push(SchemeConfig::with_implication());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_orders_first_is_default() {
        let v = enumerate_order_variants();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], SchemeConfig::full());
        for c in &v {
            assert_eq!(c.field_order.iter().filter(|&&f| f == Field::Hs).count(), 1);
            assert_eq!(c.variant, Variant::FullSubtasks);
        }
    }

    #[test]
    fn eight_shipped_variants_with_distinct_names() {
        let names: Vec<String> = all_variants().iter().map(SchemeConfig::name).collect();
        assert_eq!(
            names,
            vec![
                "baseline",
                "minimal",
                "full",
                "off-gd-hs-gi",
                "off-hs-gd-gi",
                "hs-off-gd-gi",
                "gd-gi-off-hs",
                "full+impl"
            ]
        );
        for n in &names {
            assert_eq!(&SchemeConfig::named(n).unwrap().name(), n);
        }
    }

    #[test]
    fn variant_classification() {
        use Field::*;
        assert_eq!(SchemeConfig::from_order(vec![Gd, Off, Hs]).unwrap().variant, Variant::MinimalDecomposition);
        assert_eq!(
            SchemeConfig::from_order(vec![Impl, Hs, Off, Gd, Gi]).unwrap().variant,
            Variant::WithImplication
        );
        assert!(SchemeConfig::from_order(vec![Off, Gd, Gi]).is_err());
        assert!(SchemeConfig::from_order(vec![Off, Impl, Gd, Gi, Hs]).is_err());
        assert!(SchemeConfig::from_order(vec![Hs, Hs]).is_err());
        assert!(SchemeConfig::named("nope").is_err());
    }

    #[test]
    fn table_two_questions_verbatim() {
        let c = SchemeConfig::full();
        assert_eq!(c.question(Field::Off), "Offensive?");
        assert_eq!(c.question(Field::Gd), "Target implication?");
        assert_eq!(c.question(Field::Gi), "Targeted minorities?");
        assert_eq!(c.question(Field::Hs), "Hate speech?");
        assert_eq!(c.question(Field::Impl), "Implied stereotype?");
    }

    #[test]
    fn fingerprint_marks_custom_prompts() {
        let mut c = SchemeConfig::full();
        assert_eq!(c.fingerprint(), "full");
        c.prompt_table.insert(Field::Off, "Rude?".into());
        assert!(c.fingerprint().starts_with("full["));
    }
}
