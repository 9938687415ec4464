use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_key_space, plaintext_bytes, AttackError, KeyRanking, RankedKey};
use crate::crypto::IntermediateSelector;
use crate::trace::TraceBatch;

/// How the per-stamp difference of means becomes one hypothesis score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DimaScore {
    /// Mean over all features.
    #[default]
    Mean,
    /// Largest single feature; narrow lobes are not diluted by the band.
    Max,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimaResult {
    pub ranking: KeyRanking,
    /// `|mean(class 1) − mean(class 0)|`, one row per hypothesis of the key
    /// space (in key-space order), one column per feature. Multi-bit
    /// selectors sum the per-bit rows.
    pub dom: Array2<f64>,
    /// Hypotheses (key-space order) for which some selected bit left a
    /// class empty; their rows and scores are zero.
    pub degenerate: Vec<bool>,
    pub key_space: Range<u16>,
}

impl DimaResult {
    pub fn dom_row(&self, hypothesis: u16) -> Option<ndarray::ArrayView1<'_, f64>> {
        self.key_space
            .contains(&hypothesis)
            .then(|| self.dom.row((hypothesis - self.key_space.start) as usize))
    }
}

pub fn dima_attack(
    batch: &TraceBatch,
    sel: &IntermediateSelector,
    key_space: Range<u16>,
) -> Result<DimaResult, AttackError> {
    dima_attack_with(batch, sel, key_space, DimaScore::Mean)
}

/// Partition the traces by the selected intermediate bit under each key
/// hypothesis and score the per-feature difference of class means.
pub fn dima_attack_with(
    batch: &TraceBatch,
    sel: &IntermediateSelector,
    key_space: Range<u16>,
    score: DimaScore,
) -> Result<DimaResult, AttackError> {
    check_key_space(sel, &key_space)?;
    if batch.len() < 2 {
        return Err(AttackError::TooFewTraces {
            needed: 2,
            got: batch.len(),
        });
    }
    let pts = plaintext_bytes(batch, sel.byte)?;
    let x = batch.feature_matrix();
    let bits = sel.bits();

    let rows: Vec<(Vec<f64>, bool)> = key_space
        .clone()
        .into_par_iter()
        .map(|k| hypothesis_dom(x.view(), &pts, k as u8, sel, &bits))
        .collect();

    let f = x.ncols();
    let mut dom = Array2::zeros((rows.len(), f));
    let mut degenerate = Vec::with_capacity(rows.len());
    let mut entries = Vec::with_capacity(rows.len());
    for (i, (row, degen)) in rows.into_iter().enumerate() {
        let hypothesis = key_space.start + i as u16;
        let (s, best) = if degen {
            (0.0, None)
        } else {
            match score {
                DimaScore::Mean => (row.iter().sum::<f64>() / f as f64, argmax(&row)),
                DimaScore::Max => {
                    let b = argmax(&row);
                    (b.map_or(0.0, |j| row[j]), b)
                }
            }
        };
        entries.push(RankedKey {
            hypothesis,
            score: s,
            best_feature: best,
            best_frequency_hz: best.map(|j| batch.feature_frequency(j)),
            degenerate: degen,
        });
        dom.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        degenerate.push(degen);
    }
    Ok(DimaResult {
        ranking: KeyRanking::new(entries),
        dom,
        degenerate,
        key_space,
    })
}

/// DOM row for one hypothesis. Class sums accumulate in trace order.
fn hypothesis_dom(
    x: ArrayView2<'_, f64>,
    pts: &[u8],
    k: u8,
    sel: &IntermediateSelector,
    bits: &[u8],
) -> (Vec<f64>, bool) {
    let f = x.ncols();
    let mut total = vec![0.0; f];
    let mut degenerate = false;
    let mut sums = [vec![0.0; f], vec![0.0; f]];
    for &b in bits {
        sums[0].iter_mut().for_each(|v| *v = 0.0);
        sums[1].iter_mut().for_each(|v| *v = 0.0);
        let mut counts = [0usize; 2];
        for (row, &p) in x.rows().into_iter().zip(pts) {
            let c = ((sel.output(k, p) >> b) & 1) as usize;
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        if counts[0] == 0 || counts[1] == 0 {
            degenerate = true;
            break;
        }
        for ((t, s0), s1) in total.iter_mut().zip(&sums[0]).zip(&sums[1]) {
            *t += (s1 / counts[1] as f64 - s0 / counts[0] as f64).abs();
        }
    }
    if degenerate {
        total.iter_mut().for_each(|v| *v = 0.0);
    }
    (total, degenerate)
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, x) in v.iter().enumerate() {
        match best {
            Some(j) if v[j] >= *x => {}
            _ => best = Some(i),
        }
    }
    best
}
