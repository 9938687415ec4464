use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{select_pois, AttackError};
use crate::crypto::BitId;
use crate::grid::FrequencyGrid;
use crate::trace::{Channel, TraceBatch};

/// How per-trace class likelihoods are combined over several attack traces.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulation {
    /// Sum of log-densities (product of densities).
    #[default]
    LogLikelihood,
    /// Sum of per-trace posterior probabilities under equal priors.
    ProbabilitySum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimaOptions {
    pub pois: usize,
    /// Exclusion radius of the localized top-K, as a fraction of features.
    pub alpha: f64,
    /// Ridge strength relative to the mean covariance diagonal.
    pub ridge: f64,
    #[serde(default)]
    pub accumulation: Accumulation,
}

impl Default for TimaOptions {
    fn default() -> Self {
        Self {
            pois: 5,
            alpha: 0.01,
            ridge: 1e-6,
            accumulation: Accumulation::LogLikelihood,
        }
    }
}

/// Two-class Gaussian template of one register bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitTemplate {
    pub bit: BitId,
    /// Strictly increasing feature indices.
    pub pois: Vec<usize>,
    pub shortfall: bool,
    /// Class-mean distance at each POI.
    pub dom: Vec<f64>,
    pub counts: [usize; 2],
    pub means: [Vec<f64>; 2],
    /// Row-major `p × p`, ridge already applied.
    pub covariances: [Vec<f64>; 2],
}

impl BitTemplate {
    pub fn p(&self) -> usize {
        self.pois.len()
    }

    fn covariance(&self, c: usize) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.p(), self.p(), &self.covariances[c])
    }

    /// Log-density of a full feature vector under both classes.
    pub fn log_densities(&self, features: ArrayView1<'_, f64>) -> Result<[f64; 2], AttackError> {
        Evaluator::new(self)?.log_densities(features)
    }

    /// Same template with POIs (and every vector/matrix) permuted by
    /// `order`; used to check that evaluation does not depend on POI order.
    pub fn permuted(&self, order: &[usize]) -> BitTemplate {
        let p = self.p();
        let perm_cov = |c: &Vec<f64>| {
            let mut out = vec![0.0; p * p];
            for (i, &oi) in order.iter().enumerate() {
                for (j, &oj) in order.iter().enumerate() {
                    out[i * p + j] = c[oi * p + oj];
                }
            }
            out
        };
        BitTemplate {
            bit: self.bit.clone(),
            pois: order.iter().map(|&i| self.pois[i]).collect(),
            shortfall: self.shortfall,
            dom: order.iter().map(|&i| self.dom[i]).collect(),
            counts: self.counts,
            means: [0, 1].map(|c| order.iter().map(|&i| self.means[c][i]).collect()),
            covariances: [0, 1].map(|c| perm_cov(&self.covariances[c])),
        }
    }
}

/// Templates for a set of bits, profiled on one grid and channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub grid: FrequencyGrid,
    pub channel: Channel,
    pub pois: usize,
    pub alpha: f64,
    pub ridge: f64,
    pub profiling_traces: usize,
    pub templates: Vec<BitTemplate>,
}

impl TemplateSet {
    pub fn template(&self, bit: &BitId) -> Option<&BitTemplate> {
        self.templates.iter().find(|t| &t.bit == bit)
    }

    pub fn bits(&self) -> Vec<BitId> {
        self.templates.iter().map(|t| t.bit.clone()).collect()
    }
}

/// Build per-bit templates from a labeled profiling batch.
pub fn tima_profile(
    batch: &TraceBatch,
    targets: &[BitId],
    opts: &TimaOptions,
) -> Result<TemplateSet, AttackError> {
    if !(opts.ridge.is_finite() && opts.ridge >= 0.0) {
        return Err(AttackError::InvalidParameter(format!(
            "ridge must be finite and >= 0, got {}",
            opts.ridge
        )));
    }
    if targets.is_empty() {
        return Err(AttackError::InvalidParameter("no target bits".into()));
    }
    let labels: Vec<Vec<bool>> = targets
        .iter()
        .map(|bit| {
            batch
                .traces()
                .iter()
                .enumerate()
                .map(|(index, t)| {
                    t.meta
                        .as_ref()
                        .and_then(|m| m.bit_value(bit))
                        .ok_or_else(|| AttackError::Unlabeled {
                            index,
                            what: format!("value of {bit}"),
                        })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let x = batch.feature_matrix();
    let templates = targets
        .par_iter()
        .zip(labels.par_iter())
        .map(|(bit, lab)| profile_bit(&x, bit, lab, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TemplateSet {
        grid: *batch.grid(),
        channel: batch.channel,
        pois: opts.pois,
        alpha: opts.alpha,
        ridge: opts.ridge,
        profiling_traces: batch.len(),
        templates,
    })
}

/// Per-class feature means of the rows selected by `labels`.
pub(crate) fn class_means(x: &Array2<f64>, labels: &[bool]) -> ([Vec<f64>; 2], [usize; 2]) {
    let f = x.ncols();
    let mut sums = [vec![0.0; f], vec![0.0; f]];
    let mut counts = [0usize; 2];
    for (row, &l) in x.rows().into_iter().zip(labels) {
        let c = l as usize;
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    for c in 0..2 {
        let n = counts[c].max(1) as f64;
        sums[c].iter_mut().for_each(|s| *s /= n);
    }
    (sums, counts)
}

fn profile_bit(
    x: &Array2<f64>,
    bit: &BitId,
    labels: &[bool],
    opts: &TimaOptions,
) -> Result<BitTemplate, AttackError> {
    let (means, counts) = class_means(x, labels);
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(AttackError::InsufficientData {
                bit: bit.clone(),
                class: c as u8,
                got: n,
                needed: 2,
            });
        }
    }
    let dom: Vec<f64> = means[0]
        .iter()
        .zip(&means[1])
        .map(|(a, b)| (b - a).abs())
        .collect();
    let sel = select_pois(&dom, opts.pois, opts.alpha)?;
    let p = sel.indices.len();

    let mut covariances = [vec![0.0; p * p], vec![0.0; p * p]];
    let mut poi_means = [vec![0.0; p], vec![0.0; p]];
    for c in 0..2 {
        for (k, &j) in sel.indices.iter().enumerate() {
            poi_means[c][k] = means[c][j];
        }
        let cov = &mut covariances[c];
        let mut d = vec![0.0; p];
        for (row, &l) in x.rows().into_iter().zip(labels) {
            if l as usize != c {
                continue;
            }
            for (k, &j) in sel.indices.iter().enumerate() {
                d[k] = row[j] - poi_means[c][k];
            }
            for a in 0..p {
                for b in a..p {
                    cov[a * p + b] += d[a] * d[b];
                }
            }
        }
        let denom = (counts[c] - 1) as f64;
        for a in 0..p {
            for b in a..p {
                let v = cov[a * p + b] / denom;
                cov[a * p + b] = v;
                cov[b * p + a] = v;
            }
        }
        let trace: f64 = (0..p).map(|a| cov[a * p + a]).sum();
        let scale = if trace > 0.0 { trace / p as f64 } else { 1.0 };
        for a in 0..p {
            cov[a * p + a] += opts.ridge * scale;
        }
    }
    let t = BitTemplate {
        bit: bit.clone(),
        dom: sel.indices.iter().map(|&j| dom[j]).collect(),
        pois: sel.indices,
        shortfall: sel.shortfall,
        counts,
        means: poi_means,
        covariances,
    };
    Evaluator::new(&t)?;
    Ok(t)
}

/// Cholesky factors and log-normalizers of one template.
struct Evaluator<'a> {
    t: &'a BitTemplate,
    chol: [DMatrix<f64>; 2],
    log_norm: [f64; 2],
}

impl<'a> Evaluator<'a> {
    fn new(t: &'a BitTemplate) -> Result<Self, AttackError> {
        let p = t.p();
        let mut chol = [DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)];
        let mut log_norm = [0.0; 2];
        for c in 0..2 {
            let l = t
                .covariance(c)
                .cholesky()
                .ok_or_else(|| AttackError::NotPositiveDefinite { bit: t.bit.clone() })?
                .l();
            let log_det: f64 = 2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>();
            log_norm[c] = -0.5 * (log_det + p as f64 * (2.0 * std::f64::consts::PI).ln());
            chol[c] = l;
        }
        Ok(Self { t, chol, log_norm })
    }

    fn log_densities(&self, features: ArrayView1<'_, f64>) -> Result<[f64; 2], AttackError> {
        let mut out = [0.0; 2];
        for c in 0..2 {
            let d = DVector::from_iterator(
                self.t.p(),
                self.t
                    .pois
                    .iter()
                    .zip(&self.t.means[c])
                    .map(|(&j, m)| features[j] - m),
            );
            let y = self.chol[c]
                .solve_lower_triangular(&d)
                .ok_or_else(|| AttackError::NonFiniteDensity {
                    bit: self.t.bit.clone(),
                })?;
            out[c] = self.log_norm[c] - 0.5 * y.norm_squared();
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(AttackError::NonFiniteDensity {
                bit: self.t.bit.clone(),
            });
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitPosterior {
    pub bit: BitId,
    /// Accumulated score per class (log-likelihood or probability sum).
    pub scores: [f64; 2],
    pub decision: bool,
    /// |scores[1] − scores[0]|.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult {
    pub accumulation: Accumulation,
    pub traces: usize,
    pub bits: Vec<BitPosterior>,
}

impl PosteriorResult {
    pub fn decision(&self, bit: &BitId) -> Option<bool> {
        self.bits.iter().find(|b| &b.bit == bit).map(|b| b.decision)
    }
}

/// Classify every templated bit from the attack traces.
pub fn tima_attack(
    templates: &TemplateSet,
    batch: &TraceBatch,
) -> Result<PosteriorResult, AttackError> {
    tima_attack_with(templates, batch, Accumulation::LogLikelihood)
}

pub fn tima_attack_with(
    templates: &TemplateSet,
    batch: &TraceBatch,
    accumulation: Accumulation,
) -> Result<PosteriorResult, AttackError> {
    if batch.grid().fingerprint() != templates.grid.fingerprint() {
        return Err(AttackError::GridMismatch {
            expected: templates.grid.fingerprint(),
            got: batch.grid().fingerprint(),
        });
    }
    if batch.is_empty() {
        return Err(AttackError::TooFewTraces { needed: 1, got: 0 });
    }
    let x = batch.clone().with_channel(templates.channel).feature_matrix();
    let bits = templates
        .templates
        .par_iter()
        .map(|t| {
            let ev = Evaluator::new(t)?;
            let mut per_class = [Vec::with_capacity(x.nrows()), Vec::with_capacity(x.nrows())];
            for row in x.rows() {
                let ll = ev.log_densities(row)?;
                let v = match accumulation {
                    Accumulation::LogLikelihood => ll,
                    Accumulation::ProbabilitySum => {
                        let m = ll[0].max(ll[1]);
                        let z = m + ((ll[0] - m).exp() + (ll[1] - m).exp()).ln();
                        [(ll[0] - z).exp(), (ll[1] - z).exp()]
                    }
                };
                per_class[0].push(v[0]);
                per_class[1].push(v[1]);
            }
            let scores = per_class.map(|mut v| {
                // Summing in sorted order makes the result independent of
                // trace order.
                v.sort_by(f64::total_cmp);
                v.iter().sum::<f64>()
            });
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(AttackError::NonFiniteDensity { bit: t.bit.clone() });
            }
            Ok(BitPosterior {
                bit: t.bit.clone(),
                scores,
                decision: scores[1] > scores[0],
                margin: (scores[1] - scores[0]).abs(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PosteriorResult {
        accumulation,
        traces: batch.len(),
        bits,
    })
}
