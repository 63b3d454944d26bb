use serde::{Deserialize, Serialize};

use super::{Field, SchemeConfig};
use crate::corpus::{GroupId, TargetType};

/// Fields recovered from one generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedPrediction {
    pub offensive: Option<bool>,
    pub target_type: Option<TargetType>,
    pub groups: Vec<GroupId>,
    pub implication: Option<String>,
    pub hs: Option<bool>,
    pub valid: bool,
    pub raw: String,
}

impl ParsedPrediction {
    fn empty(raw: &str) -> Self {
        Self {
            offensive: None,
            target_type: None,
            groups: Vec::new(),
            implication: None,
            hs: None,
            valid: false,
            raw: raw.to_string(),
        }
    }

    /// The hate speech decision used for scoring: invalid generations count
    /// as "No".
    pub fn scored_hs(&self) -> bool {
        self.valid && self.hs == Some(true)
    }

    /// Assigns one answer. Returns false when the answer does not normalize.
    fn assign(&mut self, field: Field, answer: &str) -> bool {
        let answer = answer.trim();
        match field {
            Field::Off => yes_no(answer).map(|v| self.offensive = Some(v)).is_some(),
            Field::Hs => yes_no(answer).map(|v| self.hs = Some(v)).is_some(),
            Field::Gd => {
                let t = match answer.to_ascii_lowercase().as_str() {
                    "group" => TargetType::Group,
                    "individual" => TargetType::Individual,
                    "none" => TargetType::None,
                    _ => return false,
                };
                self.target_type = Some(t);
                true
            }
            Field::Gi => {
                if answer.is_empty() {
                    return false;
                }
                if !answer.eq_ignore_ascii_case("none") {
                    let mut groups = Vec::new();
                    for g in answer.split(',').filter_map(GroupId::new) {
                        if !groups.contains(&g) {
                            groups.push(g);
                        }
                    }
                    if groups.is_empty() {
                        return false;
                    }
                    self.groups = groups;
                }
                true
            }
            Field::Impl => {
                if answer.is_empty() {
                    return false;
                }
                if !answer.eq_ignore_ascii_case("none") {
                    self.implication = Some(answer.to_string());
                }
                true
            }
        }
    }
}

fn yes_no(s: &str) -> Option<bool> {
    if s.eq_ignore_ascii_case("yes") {
        Some(true)
    } else if s.eq_ignore_ascii_case("no") {
        Some(false)
    } else {
        None
    }
}

/// Leftmost ASCII-case-insensitive match of `needle` at or after `from`.
/// `haystack` must already be ASCII-lowercased.
fn find_from(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    haystack.get(from..)?.find(needle).map(|i| i + from)
}

/// Reads a generation back into fields by scanning for the scheme's
/// question markers in order. Never fails: a generation that does not
/// follow the scheme comes back with `valid = false` and whatever answers
/// preceded the first problem.
pub fn parse(generation: &str, c: &SchemeConfig) -> ParsedPrediction {
    let mut pred = ParsedPrediction::empty(generation);
    // ASCII lowercasing keeps byte offsets aligned with `generation`.
    let lower = generation.to_ascii_lowercase();
    let order = &c.field_order;
    let markers: Vec<String> = order
        .iter()
        .map(|&f| c.question(f).to_ascii_lowercase())
        .collect();

    let mut pos = 0;
    for (i, &field) in order.iter().enumerate() {
        let Some(next) = markers.get(i + 1) else {
            // Last field: the answer runs to the end.
            pred.valid = pred.assign(field, &generation[pos..]);
            return pred;
        };
        match find_from(&lower, next, pos) {
            Some(at) => {
                if !pred.assign(field, &generation[pos..at]) {
                    return pred;
                }
                pos = at + next.len();
            }
            None => {
                // Expected marker missing: keep this answer if a later
                // marker still bounds it, then stop.
                let end = markers[i + 2..]
                    .iter()
                    .filter_map(|m| find_from(&lower, m, pos))
                    .min();
                if let Some(end) = end {
                    pred.assign(field, &generation[pos..end]);
                }
                return pred;
            }
        }
    }
    pred
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_marker_keeps_prefix() {
        let p = parse("Yes Target implication? Group Hate speech? Yes", &SchemeConfig::full());
        assert!(!p.valid);
        assert_eq!(p.offensive, Some(true));
        assert_eq!(p.target_type, Some(TargetType::Group));
        assert_eq!(p.hs, None);
        assert!(!p.scored_hs());
    }

    #[test]
    fn case_folding() {
        let p = parse(
            "yes target implication? group targeted minorities? women hate speech? yes",
            &SchemeConfig::full(),
        );
        assert!(p.valid);
        assert_eq!(p.offensive, Some(true));
        assert_eq!(p.target_type, Some(TargetType::Group));
        assert_eq!(p.groups, vec![GroupId::new("women").unwrap()]);
        assert_eq!(p.hs, Some(true));
    }

    #[test]
    fn baseline_answers() {
        let c = SchemeConfig::baseline();
        assert_eq!(parse("Yes", &c).hs, Some(true));
        assert_eq!(parse(" no ", &c).hs, Some(false));
        let bad = parse("maybe", &c);
        assert!(!bad.valid && bad.hs.is_none());
    }

    #[test]
    fn bad_closed_set_answer_invalidates() {
        let p = parse(
            "Sure Target implication? Group Targeted minorities? women Hate speech? Yes",
            &SchemeConfig::full(),
        );
        assert!(!p.valid);
        assert_eq!(p.offensive, None);
    }

    #[test]
    fn repeated_question_text_uses_leftmost_marker() {
        let p = parse(
            "Yes Target implication? Group Targeted minorities? women Hate speech? Yes Hate speech? No",
            &SchemeConfig::full(),
        );
        // Trailing text after the final answer is not a valid Yes/No.
        assert!(!p.valid);
        assert_eq!(p.groups, vec![GroupId::new("women").unwrap()]);
    }

    #[test]
    fn never_panics_on_odd_input() {
        let c = SchemeConfig::with_implication();
        for g in ["", "?", "Hate speech?", "Ünïcode Target implication? Ğroup", "Yes Yes Yes", "\u{0} Offensive?"] {
            let p = parse(g, &c);
            assert!(!p.valid, "{g}");
            assert_eq!(p.raw, g);
        }
    }

    #[test]
    fn none_groups_and_implication() {
        let p = parse(
            "No Target implication? None Targeted minorities? None Implied stereotype? None Hate speech? No",
            &SchemeConfig::with_implication(),
        );
        assert!(p.valid);
        assert!(p.groups.is_empty());
        assert_eq!(p.implication, None);
        assert_eq!(p.target_type, Some(TargetType::None));
    }

    #[test]
    fn empty_group_answer_invalid() {
        let p = parse(
            "Yes Target implication? Group Targeted minorities?  Hate speech? Yes",
            &SchemeConfig::full(),
        );
        assert!(!p.valid);
    }
}
