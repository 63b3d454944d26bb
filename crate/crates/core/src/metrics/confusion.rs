use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// F1 of the positive class; 0 when there are no positives on either side.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    pub fn fp_pct(&self) -> f64 {
        pct(self.fp, self.total())
    }

    pub fn fn_pct(&self) -> f64 {
        pct(self.fn_, self.total())
    }
}

fn pct(x: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        x as f64 / total as f64 * 100.0
    }
}

fn check_lengths(preds: usize, golds: usize) -> Result<()> {
    if preds != golds {
        return Err(Error::LengthMismatch {
            left: preds,
            right: golds,
        });
    }
    Ok(())
}

pub fn confusion(preds: &[bool], golds: &[bool]) -> Result<ConfusionCounts> {
    check_lengths(preds.len(), golds.len())?;
    let mut c = ConfusionCounts::default();
    for (&p, &g) in preds.iter().zip(golds) {
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// F1 on the positive (hate speech) class.
pub fn binary_f1(preds: &[bool], golds: &[bool]) -> Result<f64> {
    if preds.is_empty() && golds.is_empty() {
        return Err(Error::Empty("binary_f1 needs at least one example".into()));
    }
    Ok(confusion(preds, golds)?.f1())
}
