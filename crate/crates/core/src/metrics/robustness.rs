use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which axis the standard deviation is taken over before averaging.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustnessAxis {
    /// Std across hyperparameter configs within a seed, averaged over seeds.
    #[default]
    AcrossConfigs,
    /// Std across seeds within a config, averaged over configs.
    AcrossSeeds,
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Mean of per-group sample standard deviations of validation scores keyed
/// by `(seed, config)`. The grid must be complete.
pub fn robustness_std(
    results: &BTreeMap<(u64, String), f64>,
    axis: RobustnessAxis,
) -> Result<f64> {
    let seeds: BTreeSet<u64> = results.keys().map(|(s, _)| *s).collect();
    let configs: BTreeSet<&str> = results.keys().map(|(_, c)| c.as_str()).collect();
    if seeds.is_empty() {
        return Err(Error::Empty("no robustness results".into()));
    }

    let mut missing = Vec::new();
    for &s in &seeds {
        for &c in &configs {
            if !results.contains_key(&(s, c.to_string())) {
                missing.push(format!("seed {s} / {c}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::MissingCells(missing));
    }

    let groups: Vec<Vec<f64>> = match axis {
        RobustnessAxis::AcrossConfigs => seeds
            .iter()
            .map(|&s| configs.iter().map(|&c| results[&(s, c.to_string())]).collect())
            .collect(),
        RobustnessAxis::AcrossSeeds => configs
            .iter()
            .map(|&c| seeds.iter().map(|&s| results[&(s, c.to_string())]).collect())
            .collect(),
    };
    if groups[0].len() < 2 {
        return Err(Error::Empty(match axis {
            RobustnessAxis::AcrossConfigs => "need at least 2 hyperparameter configs per seed".into(),
            RobustnessAxis::AcrossSeeds => "need at least 2 seeds per config".into(),
        }));
    }
    Ok(groups.iter().map(|g| sample_std(g)).sum::<f64>() / groups.len() as f64)
}
