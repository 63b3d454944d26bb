//! Evaluation statistics: binary F1 and confusion percentages, subtask
//! scores, invalid-generation rate, robustness spread across
//! hyperparameters, and Welch's t-test for comparing seeds.

mod confusion;
mod robustness;
mod subtask;
mod welch;

use serde::{Deserialize, Serialize};

use crate::corpus::PostRecord;
use crate::error::{Error, Result};
use crate::scheme::{ParsedPrediction, SchemeConfig};

pub use confusion::{binary_f1, confusion, ConfusionCounts};
pub use robustness::{robustness_std, RobustnessAxis};
pub use subtask::{gd_macro_f1, subtask_scores, GdScores, SubtaskScores};
pub use welch::{welch_t, TTestResult, ALPHA};

/// Scores for one (config, size, seed, target) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricBundle {
    pub f1_hs: f64,
    pub f1_off: Option<f64>,
    pub gd: Option<GdScores>,
    pub fp_pct: f64,
    pub fn_pct: f64,
    pub invalid_rate: f64,
    pub n: usize,
    pub confusion: ConfusionCounts,
}

/// Scores parsed generations against gold records. Invalid generations
/// count as hate speech "No". Subtask scores are only computed when
/// `with_subtasks` is set (the in-distribution test set).
pub fn evaluate(
    parsed: &[ParsedPrediction],
    golds: &[&PostRecord],
    scheme: &SchemeConfig,
    with_subtasks: bool,
) -> Result<MetricBundle> {
    if parsed.len() != golds.len() {
        return Err(Error::LengthMismatch {
            left: parsed.len(),
            right: golds.len(),
        });
    }
    if parsed.is_empty() {
        return Err(Error::Empty("nothing to evaluate".into()));
    }
    let preds: Vec<bool> = parsed.iter().map(ParsedPrediction::scored_hs).collect();
    let gold_hs: Vec<bool> = golds.iter().map(|g| g.hs).collect();
    let c = confusion(&preds, &gold_hs)?;
    let invalid = parsed.iter().filter(|p| !p.valid).count();
    let subtasks = if with_subtasks {
        subtask_scores(parsed, golds, scheme)?
    } else {
        SubtaskScores::default()
    };
    Ok(MetricBundle {
        f1_hs: c.f1(),
        f1_off: subtasks.f1_off,
        gd: subtasks.gd,
        fp_pct: c.fp_pct(),
        fn_pct: c.fn_pct(),
        invalid_rate: invalid as f64 / parsed.len() as f64,
        n: parsed.len(),
        confusion: c,
    })
}

/// Sample mean and standard deviation (n-1); std is 0 for fewer than two
/// values.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
