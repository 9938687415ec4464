//! S11 sweeps, their labels, and batches of them.

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crypto::{sbox, BitId};
use crate::grid::FrequencyGrid;
use crate::pdn::{magnitude_db, phase_deg};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("trace has {got} samples but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("trace {index} was taken on grid {got}, batch grid is {expected}")]
    GridMismatch {
        index: usize,
        expected: String,
        got: String,
    },
}

/// What was loaded into the device when a trace was taken.
///
/// Byte strings travel as lowercase hex in structured text. Shares are
/// indexed `[share][byte]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceMeta {
    #[serde(with = "hex_bytes", default)]
    pub plaintext: Vec<u8>,
    #[serde(with = "hex_opt", default, skip_serializing_if = "Option::is_none")]
    pub key: Option<Vec<u8>>,
    #[serde(with = "hex_shares", default, skip_serializing_if = "Option::is_none")]
    pub key_shares: Option<Vec<Vec<u8>>>,
    #[serde(with = "hex_shares", default, skip_serializing_if = "Option::is_none")]
    pub input_shares: Option<Vec<Vec<u8>>>,
    /// Free-form class label (e.g. fan-out register state).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<u8>,
    #[serde(default = "one")]
    pub averaging: u32,
    #[serde(default)]
    pub noise_seed: u64,
}

fn one() -> u32 {
    1
}

impl TraceMeta {
    /// Known value of a register bit, if the metadata determines it.
    /// `SboxOut` bits use the AES S-box; labels read `class`.
    pub fn bit_value(&self, bit: &BitId) -> Option<bool> {
        let get = |v: &Option<Vec<Vec<u8>>>, share: u8, byte: u8, b: u8| {
            v.as_ref()
                .and_then(|s| s.get(share as usize))
                .and_then(|s| s.get(byte as usize))
                .map(|x| (x >> b) & 1 == 1)
        };
        match *bit {
            BitId::KeyShare { share, byte, bit } => get(&self.key_shares, share, byte, bit),
            BitId::InputShare { share, byte, bit } => get(&self.input_shares, share, byte, bit),
            BitId::SboxOut { byte, bit } => {
                let k = self.key.as_ref()?.get(byte as usize)?;
                let p = self.plaintext.get(byte as usize)?;
                Some((sbox(k ^ p) >> bit) & 1 == 1)
            }
            BitId::Label(_) => self.class.map(|c| c != 0),
        }
    }
}

/// One S11 sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTrace {
    grid: FrequencyGrid,
    samples: Vec<Complex64>,
    pub meta: Option<TraceMeta>,
}

impl ComplexTrace {
    pub fn new(grid: FrequencyGrid, samples: Vec<Complex64>) -> Result<Self, TraceError> {
        if samples.len() != grid.points() {
            return Err(TraceError::LengthMismatch {
                expected: grid.points(),
                got: samples.len(),
            });
        }
        if let Some(index) = samples
            .iter()
            .position(|s| !(s.re.is_finite() && s.im.is_finite()))
        {
            return Err(TraceError::NonFinite { index });
        }
        Ok(Self {
            grid,
            samples,
            meta: None,
        })
    }

    pub fn with_meta(mut self, meta: TraceMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.samples.iter().map(|s| magnitude_db(*s)).collect()
    }

    pub fn phase_deg(&self) -> Vec<f64> {
        self.samples.iter().map(|s| phase_deg(*s)).collect()
    }
}

/// Scalar view of a complex sweep analyzed by the attacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Channel {
    /// Principal phase of S11 in degrees.
    #[default]
    PhaseDeg,
    MagnitudeDb,
    /// Magnitude (dB) features followed by phase (degree) features.
    Both,
}

impl Channel {
    pub fn features_per_trace(self, points: usize) -> usize {
        match self {
            Channel::Both => 2 * points,
            _ => points,
        }
    }

    pub fn extract_into(self, samples: &[Complex64], out: &mut [f64]) {
        let n = samples.len();
        match self {
            Channel::PhaseDeg => {
                for (o, s) in out.iter_mut().zip(samples) {
                    *o = phase_deg(*s);
                }
            }
            Channel::MagnitudeDb => {
                for (o, s) in out.iter_mut().zip(samples) {
                    *o = magnitude_db(*s);
                }
            }
            Channel::Both => {
                let (mag, ph) = out.split_at_mut(n);
                Channel::MagnitudeDb.extract_into(samples, mag);
                Channel::PhaseDeg.extract_into(samples, ph);
            }
        }
    }

    pub fn extract(self, samples: &[Complex64]) -> Vec<f64> {
        let mut out = vec![0.0; self.features_per_trace(samples.len())];
        self.extract_into(samples, &mut out);
        out
    }

    /// Grid stamp index for a feature index.
    pub fn stamp_of_feature(self, feature: usize, points: usize) -> usize {
        feature % points
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::PhaseDeg => "phase_deg",
            Channel::MagnitudeDb => "mag_db",
            Channel::Both => "mag_db+phase_deg",
        }
    }
}

/// Traces sharing one grid, plus the channel the attacks analyze.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBatch {
    grid: FrequencyGrid,
    traces: Vec<ComplexTrace>,
    pub channel: Channel,
}

impl TraceBatch {
    pub fn new(
        grid: FrequencyGrid,
        traces: Vec<ComplexTrace>,
        channel: Channel,
    ) -> Result<Self, TraceError> {
        for (index, t) in traces.iter().enumerate() {
            if t.grid != grid {
                return Err(TraceError::GridMismatch {
                    index,
                    expected: grid.fingerprint(),
                    got: t.grid.fingerprint(),
                });
            }
        }
        Ok(Self {
            grid,
            traces,
            channel,
        })
    }

    pub fn empty(grid: FrequencyGrid, channel: Channel) -> Self {
        Self {
            grid,
            traces: Vec::new(),
            channel,
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn traces(&self) -> &[ComplexTrace] {
        &self.traces
    }

    pub fn into_traces(self) -> Vec<ComplexTrace> {
        self.traces
    }

    pub fn len(&self) -> usize {
        self.traces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traces.is_empty()
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.channel = channel;
        self
    }

    pub fn push(&mut self, trace: ComplexTrace) -> Result<(), TraceError> {
        if trace.grid != self.grid {
            return Err(TraceError::GridMismatch {
                index: self.traces.len(),
                expected: self.grid.fingerprint(),
                got: trace.grid.fingerprint(),
            });
        }
        self.traces.push(trace);
        Ok(())
    }

    pub fn features_per_trace(&self) -> usize {
        self.channel.features_per_trace(self.grid.points())
    }

    /// Channel values, one row per trace.
    pub fn feature_matrix(&self) -> Array2<f64> {
        let f = self.features_per_trace();
        let mut m = Array2::zeros((self.traces.len(), f));
        for (mut row, t) in m.rows_mut().into_iter().zip(&self.traces) {
            self.channel.extract_into(
                t.samples(),
                row.as_slice_mut().expect("standard layout rows are contiguous"),
            );
        }
        m
    }

    /// Grid frequency of a feature column.
    pub fn feature_frequency(&self, feature: usize) -> f64 {
        self.grid
            .stamp(self.channel.stamp_of_feature(feature, self.grid.points()))
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

mod hex_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<u8>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&hex::encode(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<u8>>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .transpose()
    }
}

mod hex_shares {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Vec<u8>>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.serialize_some(&v.iter().map(hex::encode).collect::<Vec<_>>()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<Vec<Vec<u8>>>, D::Error> {
        Option::<Vec<String>>::deserialize(d)?
            .map(|v| {
                v.into_iter()
                    .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .transpose()
    }
}
