use serde::{Deserialize, Serialize};

use crate::attacks::KeyRanking;

/// 1-based rank of the true key, if it is among the hypotheses.
pub fn key_rank(ranking: &KeyRanking, true_key: u16) -> Option<usize> {
    ranking.rank_of(true_key)
}

/// Mean rank over experiments.
pub fn guessing_entropy(ranks: &[usize]) -> f64 {
    if ranks.is_empty() {
        return f64::NAN;
    }
    ranks.iter().sum::<usize>() as f64 / ranks.len() as f64
}

/// Rank after a given number of attack traces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankPoint {
    pub traces: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
    /// Wilson score interval at 95% confidence.
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-sided 95% standard normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `successes` out of `trials` at 95%.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // At k = 0 and k = n the bounds are exactly 0 and 1.
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

pub fn success_rate(outcomes: &[bool]) -> SuccessRate {
    let successes = outcomes.iter().filter(|o| **o).count();
    let trials = outcomes.len();
    let (ci_low, ci_high) = wilson_interval(successes, trials);
    SuccessRate {
        successes,
        trials,
        rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
        ci_low,
        ci_high,
    }
}

/// Run `experiment` once per seed and summarize the outcomes.
pub fn success_rate_over<E>(
    seeds: impl IntoIterator<Item = u64>,
    mut experiment: impl FnMut(u64) -> Result<bool, E>,
) -> Result<SuccessRate, E> {
    let outcomes = seeds
        .into_iter()
        .map(&mut experiment)
        .collect::<Result<Vec<_>, E>>()?;
    Ok(success_rate(&outcomes))
}
