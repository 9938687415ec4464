use super::MetricsError;
use crate::crypto::BitId;
use crate::trace::TraceBatch;

fn labels_of(batch: &TraceBatch, bit: &BitId) -> Result<Vec<bool>, MetricsError> {
    batch
        .traces()
        .iter()
        .enumerate()
        .map(|(index, t)| {
            t.meta
                .as_ref()
                .and_then(|m| m.bit_value(bit))
                .ok_or_else(|| MetricsError::Unlabeled {
                    index,
                    bit: bit.clone(),
                })
        })
        .collect()
}

/// `|mean(features | bit = 1) − mean(features | bit = 0)|` per feature.
pub fn difference_of_means(batch: &TraceBatch, bit: &BitId) -> Result<Vec<f64>, MetricsError> {
    difference_of_means_labels(batch, &labels_of(batch, bit)?)
}

pub fn difference_of_means_labels(
    batch: &TraceBatch,
    labels: &[bool],
) -> Result<Vec<f64>, MetricsError> {
    let mut acc = DmAccumulator::new(batch.features_per_trace());
    if labels.len() != batch.len() {
        return Err(MetricsError::LabelCount {
            labels: labels.len(),
            traces: batch.len(),
        });
    }
    let mut row = vec![0.0; batch.features_per_trace()];
    for (t, &l) in batch.traces().iter().zip(labels) {
        batch.channel.extract_into(t.samples(), &mut row);
        acc.push(&row, l);
    }
    acc.finish()
}

/// Streaming class sums for one difference-of-means curve.
#[derive(Debug, Clone, PartialEq)]
pub struct DmAccumulator {
    sums: [Vec<f64>; 2],
    counts: [usize; 2],
}

impl DmAccumulator {
    pub fn new(features: usize) -> Self {
        Self {
            sums: [vec![0.0; features], vec![0.0; features]],
            counts: [0; 2],
        }
    }

    pub fn push(&mut self, features: &[f64], label: bool) {
        let c = label as usize;
        self.counts[c] += 1;
        for (s, v) in self.sums[c].iter_mut().zip(features) {
            *s += v;
        }
    }

    pub fn counts(&self) -> [usize; 2] {
        self.counts
    }

    pub fn finish(&self) -> Result<Vec<f64>, MetricsError> {
        for c in 0..2 {
            if self.counts[c] == 0 {
                return Err(MetricsError::EmptyClass { class: c as u8 });
            }
        }
        let (n0, n1) = (self.counts[0] as f64, self.counts[1] as f64);
        Ok(self.sums[0]
            .iter()
            .zip(&self.sums[1])
            .map(|(a, b)| (b / n1 - a / n0).abs())
            .collect())
    }
}

/// Per-feature signal-to-noise ratio of a two-class partition.
#[derive(Debug, Clone, PartialEq)]
pub struct SnrCurve {
    /// Variance of the two class means over the mean within-class
    /// variance. Infinite where the classes differ without noise.
    pub values: Vec<f64>,
    /// Features with zero within-class variance.
    pub zero_noise: Vec<usize>,
}

pub fn snr_per_stamp(batch: &TraceBatch, bit: &BitId) -> Result<SnrCurve, MetricsError> {
    snr_per_stamp_labels(batch, &labels_of(batch, bit)?)
}

pub fn snr_per_stamp_labels(batch: &TraceBatch, labels: &[bool]) -> Result<SnrCurve, MetricsError> {
    if labels.len() != batch.len() {
        return Err(MetricsError::LabelCount {
            labels: labels.len(),
            traces: batch.len(),
        });
    }
    let x = batch.feature_matrix();
    let f = x.ncols();
    let mut counts = [0usize; 2];
    let mut sums = [vec![0.0; f], vec![0.0; f]];
    for (row, &l) in x.rows().into_iter().zip(labels) {
        counts[l as usize] += 1;
        for (s, v) in sums[l as usize].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(MetricsError::TooFewInClass {
                class: c as u8,
                needed: 2,
                got: n,
            });
        }
    }
    let means: [Vec<f64>; 2] = [0, 1].map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect());
    let mut ss = [vec![0.0; f], vec![0.0; f]];
    for (row, &l) in x.rows().into_iter().zip(labels) {
        let c = l as usize;
        for ((s, v), m) in ss[c].iter_mut().zip(row).zip(&means[c]) {
            *s += (v - m).powi(2);
        }
    }
    let mut values = Vec::with_capacity(f);
    let mut zero_noise = Vec::new();
    for j in 0..f {
        let signal = ((means[1][j] - means[0][j]) / 2.0).powi(2);
        let noise = 0.5 * (ss[0][j] / (counts[0] - 1) as f64 + ss[1][j] / (counts[1] - 1) as f64);
        if noise == 0.0 {
            zero_noise.push(j);
            values.push(if signal > 0.0 { f64::INFINITY } else { 0.0 });
        } else {
            values.push(signal / noise);
        }
    }
    Ok(SnrCurve { values, zero_noise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::trace::{Channel, ComplexTrace, TraceMeta};
    use num_complex::Complex64;

    fn batch(phases: &[(u8, [f64; 3])]) -> TraceBatch {
        let g = FrequencyGrid::new(1e9, 2e9, 3).unwrap();
        let t = phases
            .iter()
            .map(|(c, ph)| {
                ComplexTrace::new(g, ph.iter().map(|p| Complex64::from_polar(0.7, p.to_radians())).collect())
                    .unwrap()
                    .with_meta(TraceMeta {
                        class: Some(*c),
                        ..Default::default()
                    })
            })
            .collect();
        TraceBatch::new(g, t, Channel::PhaseDeg).unwrap()
    }

    #[test]
    fn dm_and_snr_basics() {
        let b = batch(&[
            (0, [1.0, 5.0, 2.0]),
            (0, [1.0, 5.0, 4.0]),
            (1, [1.0, 7.0, 2.0]),
            (1, [1.0, 7.0, 4.0]),
        ]);
        let dm = difference_of_means(&b, &BitId::label("c")).unwrap();
        assert!(dm[0] == 0.0 && (dm[1] - 2.0).abs() < 1e-9 && dm[2].abs() < 1e-9);
        let snr = snr_per_stamp(&b, &BitId::label("c")).unwrap();
        assert_eq!(snr.values[0], 0.0);
        assert!(snr.values[1].is_infinite());
        assert!(snr.values[2].abs() < 1e-9);
        assert_eq!(snr.zero_noise, [0, 1]);
    }

    #[test]
    fn dm_symmetry_and_errors() {
        let b = batch(&[(0, [1.0, 5.0, 2.0]), (1, [2.0, 7.0, 3.0]), (1, [3.0, 9.0, 4.0])]);
        let l: Vec<bool> = vec![false, true, true];
        let nl: Vec<bool> = l.iter().map(|x| !x).collect();
        assert_eq!(
            difference_of_means_labels(&b, &l).unwrap(),
            difference_of_means_labels(&b, &nl).unwrap()
        );
        assert!(matches!(
            difference_of_means_labels(&b, &[true, true, true]),
            Err(MetricsError::EmptyClass { class: 0 })
        ));
        assert!(matches!(
            snr_per_stamp_labels(&b, &l),
            Err(MetricsError::TooFewInClass { class: 0, .. })
        ));
    }
}
