use std::ops::Range;

use ndarray::{Array1, Array2, Axis};

use super::dima::argmax;
use super::{check_key_space, plaintext_bytes, AttackError, KeyRanking, RankedKey};
use crate::crypto::{hamming_weight, IntermediateSelector};
use crate::trace::TraceBatch;

#[derive(Debug, Clone, PartialEq)]
pub struct CimaResult {
    pub ranking: KeyRanking,
    /// Pearson correlation, one row per hypothesis (key-space order), one
    /// column per feature.
    pub correlation: Array2<f64>,
    /// Entries `(row, feature)` forced to zero because predictions or
    /// measurements had no variance.
    pub zero_variance: Vec<(usize, usize)>,
    pub key_space: Range<u16>,
}

/// Correlate the Hamming weight of the selected S-box output bits with every
/// feature, for every key hypothesis. Score = max |correlation|.
pub fn cima_attack(
    batch: &TraceBatch,
    sel: &IntermediateSelector,
    key_space: Range<u16>,
) -> Result<CimaResult, AttackError> {
    check_key_space(sel, &key_space)?;
    if batch.len() < 3 {
        return Err(AttackError::TooFewTraces {
            needed: 3,
            got: batch.len(),
        });
    }
    let pts = plaintext_bytes(batch, sel.byte)?;
    let n = pts.len();
    let mask: u8 = sel.bits().iter().fold(0, |m, b| m | (1 << b));

    let mut x = batch.feature_matrix();
    // A constant column can center to rounding residue; treat it as exactly
    // zero variance.
    let constant: Vec<bool> = x
        .columns()
        .into_iter()
        .map(|c| c.iter().all(|v| *v == c[0]))
        .collect();
    let mean = x.mean_axis(Axis(0)).expect("non-empty batch");
    x -= &mean;
    let mut x_norm: Array1<f64> = x.map_axis(Axis(0), |c| c.dot(&c).sqrt());
    for (n, &c) in x_norm.iter_mut().zip(&constant) {
        if c {
            *n = 0.0;
        }
    }

    let hyps: Vec<u16> = key_space.clone().collect();
    let mut h = Array2::<f64>::zeros((hyps.len(), n));
    for (mut row, &k) in h.rows_mut().into_iter().zip(&hyps) {
        for (v, &p) in row.iter_mut().zip(&pts) {
            *v = hamming_weight(sel.output(k as u8, p) & mask) as f64;
        }
        let m = row.sum() / n as f64;
        row -= m;
    }
    let h_norm: Vec<f64> = h.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();

    let mut corr = h.dot(&x);
    let mut zero_variance = Vec::new();
    for (i, mut row) in corr.rows_mut().into_iter().enumerate() {
        for (j, c) in row.iter_mut().enumerate() {
            let d = h_norm[i] * x_norm[j];
            if d == 0.0 || !d.is_finite() {
                *c = 0.0;
                zero_variance.push((i, j));
            } else {
                *c = (*c / d).clamp(-1.0, 1.0);
            }
        }
    }

    let entries = hyps
        .iter()
        .enumerate()
        .map(|(i, &hypothesis)| {
            let abs: Vec<f64> = corr.row(i).iter().map(|c| c.abs()).collect();
            let best = argmax(&abs);
            RankedKey {
                hypothesis,
                score: best.map_or(0.0, |j| abs[j]),
                best_feature: best,
                best_frequency_hz: best.map(|j| batch.feature_frequency(j)),
                degenerate: h_norm[i] == 0.0,
            }
        })
        .collect();
    Ok(CimaResult {
        ranking: KeyRanking::new(entries),
        correlation: corr,
        zero_variance,
        key_space,
    })
}
