use serde::{Deserialize, Serialize};

use super::{Field, ParsedPrediction, SchemeConfig};
use crate::corpus::PostRecord;
use crate::error::{Error, Result};

/// One emitted training or evaluation pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizedExample {
    pub id: String,
    pub input: String,
    pub output: String,
    #[serde(skip)]
    pub scheme: String,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "Yes"
    } else {
        "No"
    }
}

fn answer(p: &PostRecord, f: Field) -> String {
    match f {
        Field::Off => yes_no(p.offensive).to_string(),
        Field::Hs => yes_no(p.hs).to_string(),
        Field::Gd => p.target_type.as_str().to_string(),
        Field::Gi => {
            if p.groups.is_empty() {
                "None".to_string()
            } else {
                let names: Vec<&str> = p.groups.iter().map(|g| g.as_str()).collect();
                names.join(", ")
            }
        }
        Field::Impl => match (&p.implication, p.hs) {
            (Some(text), true) => text.clone(),
            _ => "None".to_string(),
        },
    }
}

/// The target sequence for `p` under `c`, without any source check.
pub fn render_output(p: &PostRecord, c: &SchemeConfig) -> String {
    render_with_hs(p, c, p.hs)
}

/// Like [`render_output`] but with the hate speech answer replaced by `hs`.
/// Every other answer, the implication included, is taken from `p`.
pub fn render_with_hs(p: &PostRecord, c: &SchemeConfig, hs: bool) -> String {
    let mut out = String::new();
    for (i, &f) in c.field_order.iter().enumerate() {
        if i > 0 {
            out.push(' ');
            out.push_str(c.question(f));
            out.push(' ');
        }
        if f == Field::Hs {
            out.push_str(yes_no(hs));
        } else {
            out.push_str(&answer(p, f));
        }
    }
    out
}

fn input(p: &PostRecord, c: &SchemeConfig) -> String {
    format!("Post: {} {}", p.text, c.question(c.field_order[0]))
}

/// Training pair for `p`. Decomposed schemes need the full SBIC label set,
/// so out-of-distribution records are rejected for them.
pub fn linearize(p: &PostRecord, c: &SchemeConfig) -> Result<LinearizedExample> {
    if c.is_decomposed() && p.source.is_ood() {
        return Err(Error::Linearize {
            id: p.id.clone(),
            message: format!(
                "scheme `{}` needs subtask labels that {:?} records do not carry",
                c.name(),
                p.source
            ),
        });
    }
    Ok(LinearizedExample {
        id: p.id.clone(),
        input: input(p, c),
        output: render_output(p, c),
        scheme: c.fingerprint(),
    })
}

/// Evaluation pair for any record. The reference output uses whatever
/// labels the record has; only its hate speech answer is meaningful for
/// out-of-distribution records.
pub fn reference_output(p: &PostRecord, c: &SchemeConfig) -> LinearizedExample {
    LinearizedExample {
        id: p.id.clone(),
        input: input(p, c),
        output: render_output(p, c),
        scheme: c.fingerprint(),
    }
}

/// What [`super::parse`] should return for the gold output of `p`.
pub fn expected_prediction(p: &PostRecord, c: &SchemeConfig) -> ParsedPrediction {
    let has = |f| c.demands(f);
    ParsedPrediction {
        offensive: has(Field::Off).then_some(p.offensive),
        target_type: has(Field::Gd).then_some(p.target_type),
        groups: if has(Field::Gi) { p.groups.clone() } else { Vec::new() },
        implication: if has(Field::Impl) && p.hs {
            p.implication.clone()
        } else {
            None
        },
        hs: Some(p.hs),
        valid: true,
        raw: render_output(p, c),
    }
}
