use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DeviceModel, SimError};
use crate::crypto::BitId;
use crate::rng;
use crate::trace::ComplexTrace;

/// Register contents at the measured instant. Bits not listed hold zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnapshotState {
    pub bits: BTreeMap<BitId, bool>,
}

impl SnapshotState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, bit: BitId, value: bool) -> &mut Self {
        self.bits.insert(bit, value);
        self
    }

    pub fn with(mut self, bit: BitId, value: bool) -> Self {
        self.bits.insert(bit, value);
        self
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (BitId, bool)>) -> Self {
        Self {
            bits: pairs.into_iter().collect(),
        }
    }

    pub fn active(&self) -> impl Iterator<Item = &BitId> {
        self.bits.iter().filter(|(_, v)| **v).map(|(b, _)| b)
    }

    /// Every named bit must be part of the model's layout.
    pub fn check(&self, model: &DeviceModel) -> Result<(), SimError> {
        match self.bits.keys().find(|b| !model.knows(b)) {
            Some(b) => Err(SimError::UnknownBit(b.clone())),
            None => Ok(()),
        }
    }
}

/// How instrument averaging is realized.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingMode {
    /// One noise draw with variance divided by the averaging factor.
    #[default]
    VarianceScaled,
    /// Draw every raw sweep and average them (slow; for auditing).
    Materialized,
}

/// Reference normalization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// `trace / reference`: its dB magnitude is the dB difference and its
    /// phase the principal-value phase difference. Self-normalization gives
    /// 1 + 0j, i.e. 0 dB and 0°.
    #[default]
    Ratio,
    /// `trace − reference` as complex numbers; self-normalization gives 0.
    Subtract,
}

/// Normalize `trace` against a reference sweep on the same grid. The
/// result keeps the metadata of `trace`.
pub fn reference_normalize(
    trace: &ComplexTrace,
    reference: &ComplexTrace,
    mode: NormalizeMode,
) -> Result<ComplexTrace, SimError> {
    if trace.grid() != reference.grid() {
        return Err(SimError::GridMismatch);
    }
    let samples: Vec<Complex64> = trace
        .samples()
        .iter()
        .zip(reference.samples())
        .map(|(t, r)| match mode {
            NormalizeMode::Ratio => t / r,
            NormalizeMode::Subtract => t - r,
        })
        .collect();
    let mut out = ComplexTrace::new(*trace.grid(), samples)?;
    out.meta = trace.meta.clone();
    Ok(out)
}

/// Per-stamp (dB, degree) deflection of one lobe over a contiguous window.
#[derive(Debug, Clone)]
struct Window {
    start: usize,
    mag_db: Vec<f64>,
    phase_deg: Vec<f64>,
}

/// Noiseless deflection tables of a device model, ready for repeated
/// synthesis.
#[derive(Debug, Clone)]
pub struct Synthesizer<'a> {
    model: &'a DeviceModel,
    windows: BTreeMap<&'a BitId, Vec<Window>>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(model: &'a DeviceModel) -> Self {
        let grid = model.grid();
        let windows = model
            .signatures()
            .iter()
            .map(|(bit, sig)| {
                let w = sig
                    .lobes
                    .iter()
                    .filter(|l| !l.is_null())
                    .filter_map(|l| {
                        let (lo, hi) = l.support_hz();
                        let r = grid.index_range(lo, hi);
                        if r.is_empty() {
                            return None;
                        }
                        let prof: Vec<f64> = r.clone().map(|i| l.profile(grid.stamp(i))).collect();
                        Some(Window {
                            start: r.start,
                            mag_db: prof.iter().map(|p| p * l.magnitude_db).collect(),
                            phase_deg: prof.iter().map(|p| p * l.phase_deg).collect(),
                        })
                    })
                    .collect();
                (bit, w)
            })
            .collect();
        Self { model, windows }
    }

    pub fn model(&self) -> &DeviceModel {
        self.model
    }

    /// Summed (dB, degree) deflection of the active bits, per stamp.
    pub fn deflection(&self, state: &SnapshotState) -> Result<(Vec<f64>, Vec<f64>), SimError> {
        state.check(self.model)?;
        let n = self.model.grid().points();
        let mut mag = vec![0.0; n];
        let mut ph = vec![0.0; n];
        for bit in state.active() {
            for w in self.windows.get(bit).into_iter().flatten() {
                for (k, (m, p)) in w.mag_db.iter().zip(&w.phase_deg).enumerate() {
                    mag[w.start + k] += m;
                    ph[w.start + k] += p;
                }
            }
        }
        Ok((mag, ph))
    }

    /// Noiseless sweep for `state`, with an extra global offset (drift).
    pub fn noiseless(
        &self,
        state: &SnapshotState,
        offset_db: f64,
        offset_deg: f64,
    ) -> Result<Vec<Complex64>, SimError> {
        let (mag, ph) = self.deflection(state)?;
        Ok(self
            .model
            .baseline()
            .iter()
            .zip(mag.iter().zip(&ph))
            .map(|(b, (m, p))| {
                let gain = 10f64.powf((m + offset_db) / 20.0);
                b * Complex64::from_polar(gain, (p + offset_deg).to_radians())
            })
            .collect())
    }

    /// One stored sweep: noiseless response plus complex Gaussian noise of
    /// per-quadrature deviation `noise_sigma / √averaging`.
    pub fn synthesize(
        &self,
        state: &SnapshotState,
        noise_seed: u64,
        averaging: u32,
        mode: AveragingMode,
    ) -> Result<ComplexTrace, SimError> {
        self.synthesize_with_offset(state, noise_seed, averaging, mode, 0.0, 0.0)
    }

    pub fn synthesize_with_offset(
        &self,
        state: &SnapshotState,
        noise_seed: u64,
        averaging: u32,
        mode: AveragingMode,
        offset_db: f64,
        offset_deg: f64,
    ) -> Result<ComplexTrace, SimError> {
        if averaging == 0 {
            return Err(SimError::InvalidAveraging);
        }
        let mut samples = self.noiseless(state, offset_db, offset_deg)?;
        let sigma = self.model.noise_sigma();
        if sigma > 0.0 {
            let mut r = rng::stream(noise_seed, "synth-noise", 0);
            match mode {
                AveragingMode::VarianceScaled => {
                    let d = Normal::new(0.0, sigma / (averaging as f64).sqrt())
                        .map_err(|_| SimError::InvalidNoise(sigma))?;
                    for s in &mut samples {
                        *s += Complex64::new(d.sample(&mut r), d.sample(&mut r));
                    }
                }
                AveragingMode::Materialized => {
                    let d = Normal::new(0.0, sigma).map_err(|_| SimError::InvalidNoise(sigma))?;
                    let mut acc = vec![Complex64::new(0.0, 0.0); samples.len()];
                    for _ in 0..averaging {
                        for a in &mut acc {
                            *a += Complex64::new(d.sample(&mut r), d.sample(&mut r));
                        }
                    }
                    for (s, a) in samples.iter_mut().zip(acc) {
                        *s += a / averaging as f64;
                    }
                }
            }
        }
        Ok(ComplexTrace::new(*self.model.grid(), samples)?)
    }
}

/// One-shot form of [`Synthesizer::synthesize`].
pub fn synthesize_trace(
    model: &DeviceModel,
    state: &SnapshotState,
    noise_seed: u64,
    averaging: u32,
) -> Result<ComplexTrace, SimError> {
    Synthesizer::new(model).synthesize(state, noise_seed, averaging, AveragingMode::VarianceScaled)
}

/// A frequency at which one bit's two values give different noiseless
/// sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub index: usize,
    pub frequency_hz: f64,
    /// |S11(bit = 1) − S11(bit = 0)| at that stamp, other bits zero.
    pub deflection: f64,
}

/// Stamp maximizing the noiseless |S11(bit=1) − S11(bit=0)|; ties go to the
/// lowest stamp.
pub fn masking_distinguishability_witness(
    model: &DeviceModel,
    bit: &BitId,
) -> Result<Witness, SimError> {
    if model.signature(bit).is_none() {
        return Err(SimError::MissingSignature(bit.clone()));
    }
    let syn = Synthesizer::new(model);
    let zero = syn.noiseless(&SnapshotState::new(), 0.0, 0.0)?;
    let one = syn.noiseless(&SnapshotState::new().with(bit.clone(), true), 0.0, 0.0)?;
    let mut best = (0usize, 0.0f64);
    for (i, (a, b)) in one.iter().zip(&zero).enumerate() {
        let d = (a - b).norm();
        if d > best.1 {
            best = (i, d);
        }
    }
    if best.1 == 0.0 {
        return Err(SimError::NoWitness(bit.clone()));
    }
    Ok(Witness {
        index: best.0,
        frequency_hz: model.grid().stamp(best.0),
        deflection: best.1,
    })
}

/// Noiseless leakage energy of a state: Σ over stamps of the squared dB and
/// degree deflections from the baseline.
pub fn power_proxy(model: &DeviceModel, state: &SnapshotState) -> Result<f64, SimError> {
    let (mag, ph) = Synthesizer::new(model).deflection(state)?;
    Ok(mag.iter().zip(&ph).map(|(m, p)| m * m + p * p).sum())
}

/// Uniform random `SnapshotState` over `bits`, for tests and examples.
pub fn random_state(bits: &[BitId], seed: u64) -> SnapshotState {
    let mut r = rng::stream(seed, "random-state", 0);
    SnapshotState::from_pairs(bits.iter().map(|b| (b.clone(), r.random::<bool>())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use crate::sim::{BitSignature, Lobe};

    fn model(sigma: f64) -> DeviceModel {
        let g = FrequencyGrid::new(1e9, 2e9, 201).unwrap();
        let baseline: Vec<Complex64> = (0..201)
            .map(|i| Complex64::from_polar(0.9, 0.3 + 0.001 * i as f64))
            .collect();
        let sig = |name: &str, c: f64, m: f64, p: f64| BitSignature {
            owner: BitId::label(name),
            lobes: vec![Lobe {
                center_hz: c,
                bandwidth_hz: 10e6,
                magnitude_db: m,
                phase_deg: p,
            }],
        };
        DeviceModel::new(
            g,
            baseline,
            vec![
                sig("a", 1.2e9, 0.05, 0.5),
                sig("b", 1.6e9, 0.03, -0.4),
                sig("c", 1.21e9, 0.02, 0.3),
                sig("z", 1.5e9, 0.0, 0.0),
            ],
            sigma,
            1,
        )
        .unwrap()
    }

    #[test]
    fn all_zero_state_is_baseline() {
        let m = model(0.0);
        let t = synthesize_trace(&m, &SnapshotState::new(), 3, 1).unwrap();
        assert_eq!(t.samples(), m.baseline());
    }

    #[test]
    fn single_bit_stays_in_its_lobe() {
        let m = model(0.0);
        let t = synthesize_trace(&m, &SnapshotState::new().with(BitId::label("b"), true), 3, 1).unwrap();
        for (i, (s, b)) in t.samples().iter().zip(m.baseline()).enumerate() {
            let f = m.grid().stamp(i);
            if (f - 1.6e9).abs() > 4.0 * 10e6 {
                assert!((s - b).norm() < 1e-9);
            }
        }
        let k = m.grid().nearest_index(1.6e9);
        assert!((t.samples()[k] - m.baseline()[k]).norm() > 1e-3);
    }

    #[test]
    fn superposition_in_db_and_degrees() {
        let m = model(0.0);
        let s = Synthesizer::new(&m);
        let a = SnapshotState::new().with(BitId::label("a"), true);
        let c = SnapshotState::new().with(BitId::label("c"), true);
        let ac = a.clone().with(BitId::label("c"), true);
        let (ma, pa) = s.deflection(&a).unwrap();
        let (mc, pc) = s.deflection(&c).unwrap();
        let (mac, pac) = s.deflection(&ac).unwrap();
        for i in 0..mac.len() {
            assert!((mac[i] - ma[i] - mc[i]).abs() < 1e-9);
            assert!((pac[i] - pa[i] - pc[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn unknown_bit_rejected() {
        let m = model(0.0);
        let st = SnapshotState::new().with(BitId::label("nope"), true);
        assert!(matches!(synthesize_trace(&m, &st, 0, 1), Err(SimError::UnknownBit(_))));
        assert!(matches!(
            synthesize_trace(&m, &SnapshotState::new(), 0, 0),
            Err(SimError::InvalidAveraging)
        ));
    }

    #[test]
    fn normalization() {
        let m = model(0.01);
        let st = SnapshotState::new().with(BitId::label("a"), true);
        let t = synthesize_trace(&m, &st, 5, 1).unwrap();
        let r = reference_normalize(&t, &t, NormalizeMode::Ratio).unwrap();
        assert!(r.magnitude_db().iter().all(|x| *x == 0.0));
        assert!(r.phase_deg().iter().all(|x| *x == 0.0));
        let d = reference_normalize(&t, &t, NormalizeMode::Subtract).unwrap();
        assert!(d.samples().iter().all(|x| x.norm() == 0.0));

        let clean = model(0.0);
        let on = synthesize_trace(&clean, &st, 0, 1).unwrap();
        let off = clean.baseline_trace();
        let iso = reference_normalize(&on, &off, NormalizeMode::Ratio).unwrap();
        let k = clean.grid().nearest_index(1.2e9);
        let (mag, ph) = Synthesizer::new(&clean).deflection(&st).unwrap();
        assert!((iso.magnitude_db()[k] - mag[k]).abs() < 1e-9);
        assert!((iso.phase_deg()[k] - ph[k]).abs() < 1e-9);
    }

    #[test]
    fn witness() {
        let m = model(0.0);
        let w = masking_distinguishability_witness(&m, &BitId::label("b")).unwrap();
        assert_eq!(w.index, m.grid().nearest_index(1.6e9));
        assert!(w.deflection > 0.0);
        assert!(matches!(
            masking_distinguishability_witness(&m, &BitId::label("z")),
            Err(SimError::NoWitness(_))
        ));
        assert!(matches!(
            masking_distinguishability_witness(&m, &BitId::label("q")),
            Err(SimError::MissingSignature(_))
        ));
    }

    #[test]
    fn power_proxy_cross_term() {
        // (0,0)+(1,1) equals (1,0)+(0,1) only if the two deflections are
        // orthogonal; overlapping lobes a and c break it.
        let m = model(0.0);
        let p = |bits: &[&str]| {
            let st = SnapshotState::from_pairs(bits.iter().map(|b| (BitId::label(*b), true)));
            power_proxy(&m, &st).unwrap()
        };
        let disjoint = p(&[]) + p(&["a", "b"]) - p(&["a"]) - p(&["b"]);
        assert!(disjoint.abs() < 1e-12);
        let overlapping = p(&[]) + p(&["a", "c"]) - p(&["a"]) - p(&["c"]);
        assert!(overlapping > 1e-3);
    }

    #[test]
    fn materialized_averaging_matches_scaled_variance() {
        let m = model(0.02);
        let s = Synthesizer::new(&m);
        let st = SnapshotState::new();
        let k = 17;
        let var = |mode| {
            let xs: Vec<f64> = (0..400)
                .map(|seed| s.synthesize(&st, seed, 16, mode).unwrap().samples()[k].re)
                .collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
        };
        let target = 0.02f64.powi(2) / 16.0;
        for mode in [AveragingMode::VarianceScaled, AveragingMode::Materialized] {
            let v = var(mode);
            assert!((v / target - 1.0).abs() < 0.25, "{mode:?} {v}");
        }
    }
}
