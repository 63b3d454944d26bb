use serde::{Deserialize, Serialize};

use super::confusion::ConfusionCounts;
use crate::corpus::{PostRecord, TargetType};
use crate::error::{Error, Result};
use crate::scheme::{Field, ParsedPrediction, SchemeConfig};

/// Group detection scores: F1 with `Group` as the positive class, and the
/// macro average of per-class F1 over {Group, Individual, None}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GdScores {
    pub group_f1: f64,
    pub macro_f1: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubtaskScores {
    pub f1_off: Option<f64>,
    pub gd: Option<GdScores>,
}

/// Macro F1 over the three target types. A missing prediction counts
/// against the gold class and for no class. Classes that appear in
/// neither golds nor predictions are left out of the average.
pub fn gd_macro_f1(preds: &[Option<TargetType>], golds: &[TargetType]) -> f64 {
    let mut per_class = Vec::new();
    for class in TargetType::ALL {
        let mut c = ConfusionCounts::default();
        for (p, &g) in preds.iter().zip(golds) {
            match (*p == Some(class), g == class) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        if c.tp + c.fp + c.fn_ > 0 {
            per_class.push(c.f1());
        }
    }
    if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().sum::<f64>() / per_class.len() as f64
    }
}

/// Offensiveness and group detection scores for decomposed schemes.
/// Subtask answers are taken as parsed, even from invalid generations;
/// a missing answer is a negative.
pub fn subtask_scores(
    parsed: &[ParsedPrediction],
    golds: &[&PostRecord],
    scheme: &SchemeConfig,
) -> Result<SubtaskScores> {
    if parsed.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: parsed.len(),
            right: golds.len(),
        });
    }
    let mut out = SubtaskScores::default();
    if scheme.demands(Field::Off) {
        let preds: Vec<bool> = parsed.iter().map(|p| p.offensive == Some(true)).collect();
        let gold: Vec<bool> = golds.iter().map(|g| g.offensive).collect();
        out.f1_off = Some(super::confusion::confusion(&preds, &gold)?.f1());
    }
    if scheme.demands(Field::Gd) {
        let preds: Vec<Option<TargetType>> = parsed.iter().map(|p| p.target_type).collect();
        let gold: Vec<TargetType> = golds.iter().map(|g| g.target_type).collect();
        let bin_p: Vec<bool> = preds.iter().map(|p| *p == Some(TargetType::Group)).collect();
        let bin_g: Vec<bool> = gold.iter().map(|g| *g == TargetType::Group).collect();
        out.gd = Some(GdScores {
            group_f1: super::confusion::confusion(&bin_p, &bin_g)?.f1(),
            macro_f1: gd_macro_f1(&preds, &gold),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{GroupId, Source, Split};
    use crate::scheme::{linearize, parse};

    fn rec(id: &str, t: TargetType) -> PostRecord {
        let offensive = t != TargetType::None;
        PostRecord {
            id: id.into(),
            text: id.into(),
            offensive,
            target_type: t,
            groups: if t == TargetType::Group { vec![GroupId::new("women").unwrap()] } else { vec![] },
            implication: None,
            hs: t == TargetType::Group,
            source: Source::Sbic,
            split: Split::Test,
        }
    }

    #[test]
    fn gold_echo_is_perfect() {
        let scheme = SchemeConfig::full();
        let golds: Vec<PostRecord> = [TargetType::Group, TargetType::Individual, TargetType::None]
            .iter()
            .enumerate()
            .map(|(i, &t)| rec(&i.to_string(), t))
            .collect();
        let parsed: Vec<ParsedPrediction> = golds
            .iter()
            .map(|g| parse(&linearize(g, &scheme).unwrap().output, &scheme))
            .collect();
        let refs: Vec<&PostRecord> = golds.iter().collect();
        let s = subtask_scores(&parsed, &refs, &scheme).unwrap();
        assert_eq!(s.f1_off, Some(1.0));
        assert_eq!(s.gd, Some(GdScores { group_f1: 1.0, macro_f1: 1.0 }));
    }

    #[test]
    fn always_individual_against_all_group() {
        let golds = vec![TargetType::Group; 4];
        let preds = vec![Some(TargetType::Individual); 4];
        let bin_p: Vec<bool> = preds.iter().map(|p| *p == Some(TargetType::Group)).collect();
        let bin_g = vec![true; 4];
        assert_eq!(super::super::binary_f1(&bin_p, &bin_g).unwrap(), 0.0);
        assert_eq!(gd_macro_f1(&preds, &golds), 0.0);
    }

    #[test]
    fn baseline_has_no_subtasks() {
        let scheme = SchemeConfig::baseline();
        let g = rec("a", TargetType::Group);
        let parsed = vec![parse("Yes", &scheme)];
        let s = subtask_scores(&parsed, &[&g], &scheme).unwrap();
        assert_eq!(s, SubtaskScores::default());
    }

    #[test]
    fn minimal_has_off_and_gd() {
        let scheme = SchemeConfig::minimal();
        let g = rec("a", TargetType::Group);
        let parsed = vec![parse(&linearize(&g, &scheme).unwrap().output, &scheme)];
        let s = subtask_scores(&parsed, &[&g], &scheme).unwrap();
        assert!(s.f1_off.is_some() && s.gd.is_some());
    }
}
