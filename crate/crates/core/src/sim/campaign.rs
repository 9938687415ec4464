use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AveragingMode, DeviceModel, NormalizeMode, SimError, SnapshotState, Synthesizer};
use crate::crypto::{recombine_bytes, split_bytes, BitId, Scenario};
use crate::rng;
use crate::trace::{Channel, ComplexTrace, TraceBatch, TraceMeta};

/// Which inputs are loaded for each trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InputSchedule {
    /// `count` traces with uniformly random plaintexts (and, for fan-out,
    /// random classes).
    Random { count: usize },
    /// Every plaintext value of the targeted S-box input, `repeats` times,
    /// other bytes random.
    Exhaustive { repeats: usize },
    /// `per_class` traces of each fan-out class, alternating 0, 1, 0, …
    FanOut { per_class: usize },
    /// Fully specified inputs.
    Explicit { traces: Vec<TraceMeta> },
}

/// Secret loaded into the device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KeySpec {
    /// A fresh random key per trace (profiling).
    Random,
    /// One key for the whole campaign; masked scenarios draw fresh shares
    /// per trace.
    Fixed {
        #[serde(with = "hex_key")]
        key: Vec<u8>,
    },
    /// Exact key shares `[share][byte]` for every trace.
    FixedShares {
        #[serde(with = "hex_key_shares")]
        shares: Vec<Vec<u8>>,
    },
}

/// Slow deterministic drift applied to every stamp, growing linearly with
/// the trace index.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    #[serde(default)]
    pub magnitude_db_per_trace: f64,
    #[serde(default)]
    pub phase_deg_per_trace: f64,
}

impl DriftSpec {
    pub fn at(&self, index: usize) -> (f64, f64) {
        let i = index as f64;
        (self.magnitude_db_per_trace * i, self.phase_deg_per_trace * i)
    }

    pub fn is_zero(&self) -> bool {
        self.magnitude_db_per_trace == 0.0 && self.phase_deg_per_trace == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub averaging: u32,
    pub seed: u64,
    #[serde(default)]
    pub averaging_mode: AveragingMode,
    /// When set, each trace is normalized against a reference sweep of the
    /// all-zero register state taken right after it.
    #[serde(default)]
    pub normalize: Option<NormalizeMode>,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub channel: Channel,
}

impl CampaignSettings {
    pub fn new(averaging: u32, seed: u64) -> Self {
        Self {
            averaging,
            seed,
            averaging_mode: AveragingMode::VarianceScaled,
            normalize: None,
            drift: DriftSpec::default(),
            channel: Channel::PhaseDeg,
        }
    }
}

/// Check that every register bit of `scenario` is part of the model and
/// every signature belongs to the scenario.
pub fn check_layout(model: &DeviceModel, scenario: &Scenario) -> Result<(), SimError> {
    scenario.validate().map_err(SimError::LayoutMismatch)?;
    let layout: BTreeSet<BitId> = scenario.layout().into_iter().collect();
    if let Some(b) = layout.iter().find(|b| !model.knows(b)) {
        return Err(SimError::LayoutMismatch(format!(
            "scenario bit {b} has neither a signature nor a passive entry"
        )));
    }
    if let Some(b) = model.signatures().keys().find(|b| !layout.contains(*b)) {
        return Err(SimError::LayoutMismatch(format!(
            "signature owner {b} is not a register of the scenario"
        )));
    }
    Ok(())
}

/// Simulate one measured trace per scheduled input. Every random draw is
/// keyed by `(settings.seed, trace index)`, so the result does not depend
/// on thread scheduling.
pub fn run_campaign(
    model: &DeviceModel,
    scenario: &Scenario,
    schedule: &InputSchedule,
    key: &KeySpec,
    settings: &CampaignSettings,
) -> Result<TraceBatch, SimError> {
    check_layout(model, scenario)?;
    if settings.averaging == 0 {
        return Err(SimError::InvalidAveraging);
    }
    let metas = plan_inputs(scenario, schedule, key, settings)?;
    let syn = Synthesizer::new(model);
    let reference = SnapshotState::new();
    let traces: Vec<ComplexTrace> = metas
        .into_par_iter()
        .enumerate()
        .map(|(i, meta)| {
            let state = SnapshotState::from_pairs(
                scenario
                    .bit_values(&meta)
                    .map_err(|b| SimError::InvalidInput(format!("trace {i}: no value for {b}")))?,
            );
            let (db, deg) = settings.drift.at(i);
            let t = syn.synthesize_with_offset(
                &state,
                meta.noise_seed,
                settings.averaging,
                settings.averaging_mode,
                db,
                deg,
            )?;
            let t = match settings.normalize {
                None => t,
                Some(mode) => {
                    let r = syn.synthesize_with_offset(
                        &reference,
                        rng::derive_seed(settings.seed, "reference-noise", i as u64),
                        settings.averaging,
                        settings.averaging_mode,
                        db,
                        deg,
                    )?;
                    super::reference_normalize(&t, &r, mode)?
                }
            };
            Ok(t.with_meta(meta))
        })
        .collect::<Result<_, SimError>>()?;
    Ok(TraceBatch::new(*model.grid(), traces, settings.channel)?)
}

/// Expand the schedule into per-trace metadata.
pub fn plan_inputs(
    scenario: &Scenario,
    schedule: &InputSchedule,
    key: &KeySpec,
    settings: &CampaignSettings,
) -> Result<Vec<TraceMeta>, SimError> {
    let seed = settings.seed;
    let bytes = scenario.state_bytes();
    let bad = |s: String| SimError::InvalidInput(s);

    match key {
        KeySpec::Fixed { key } if bytes > 0 && key.len() != bytes => {
            return Err(bad(format!("key must be {bytes} bytes, got {}", key.len())));
        }
        KeySpec::FixedShares { shares } => {
            let Some(n) = scenario.shares() else {
                return Err(bad("fixed shares need a masked scenario".into()));
            };
            if shares.len() != n as usize || shares.iter().any(|s| s.len() != bytes) {
                return Err(bad(format!("expected {n} shares of {bytes} bytes")));
            }
        }
        _ => {}
    }

    let count = match schedule {
        InputSchedule::Random { count } => *count,
        InputSchedule::Exhaustive { repeats } => match scenario {
            Scenario::UnprotectedSbox { sbox, .. } => repeats * sbox.key_space() as usize,
            _ => return Err(bad("exhaustive schedule needs an S-box scenario".into())),
        },
        InputSchedule::FanOut { per_class } => match scenario {
            Scenario::FanOut { .. } => 2 * per_class,
            _ => return Err(bad("fan-out schedule needs a fan-out scenario".into())),
        },
        InputSchedule::Explicit { traces } => traces.len(),
    };

    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut r = rng::stream(seed, "inputs", i as u64);
        let mut meta = match schedule {
            InputSchedule::Explicit { traces } => traces[i].clone(),
            _ => TraceMeta {
                plaintext: (0..bytes).map(|_| r.random()).collect(),
                ..Default::default()
            },
        };
        meta.averaging = settings.averaging;
        meta.noise_seed = rng::derive_seed(seed, "noise", i as u64);

        match scenario {
            Scenario::FanOut { .. } => {
                meta.class = Some(match schedule {
                    InputSchedule::FanOut { .. } => (i % 2) as u8,
                    InputSchedule::Explicit { .. } => meta.class.ok_or_else(|| {
                        bad(format!("trace {i}: fan-out input needs a class"))
                    })?,
                    _ => r.random_range(0..2u8),
                });
            }
            Scenario::UnprotectedSbox { byte, sbox } => {
                let b = *byte as usize;
                if meta.key.is_none() {
                    meta.key = Some(draw_key(key, bytes, &mut r));
                }
                if let InputSchedule::Exhaustive { .. } = schedule {
                    meta.plaintext[b] = (i % sbox.key_space() as usize) as u8;
                }
                if meta.plaintext.len() <= b || meta.key.as_ref().is_some_and(|k| k.len() <= b) {
                    return Err(bad(format!("trace {i}: inputs shorter than byte {b}")));
                }
                meta.plaintext[b] &= sbox.mask();
                if let Some(k) = meta.key.as_mut() {
                    k[b] &= sbox.mask();
                }
            }
            Scenario::MaskedKeyByte { shares, .. } | Scenario::MaskedFullKey { shares } => {
                let order = *shares as usize - 1;
                if meta.key_shares.is_none() {
                    let ks = match (key, meta.key.clone()) {
                        (KeySpec::FixedShares { shares }, _) => shares.clone(),
                        (_, Some(k)) => split_bytes(&k, order, &mut r),
                        (_, None) => split_bytes(&draw_key(key, bytes, &mut r), order, &mut r),
                    };
                    meta.key_shares = Some(ks);
                }
                let ks = meta.key_shares.as_ref().expect("set above");
                meta.key = Some(recombine_bytes(ks));
                if meta.input_shares.is_none() {
                    meta.input_shares = Some(split_bytes(&meta.plaintext, order, &mut r));
                }
            }
        }
        out.push(meta);
    }
    Ok(out)
}

fn draw_key<R: Rng>(key: &KeySpec, bytes: usize, r: &mut R) -> Vec<u8> {
    match key {
        KeySpec::Fixed { key } => key.clone(),
        KeySpec::FixedShares { shares } => recombine_bytes(shares),
        KeySpec::Random => (0..bytes).map(|_| r.random()).collect(),
    }
}

mod hex_key {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

mod hex_key_shares {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(hex::encode))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<u8>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .into_iter()
            .map(|s| hex::decode(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SboxKind;
    use crate::grid::FrequencyGrid;
    use crate::pdn::RlcLadder;
    use crate::sim::{build_device_model, BaselineSource, Placement, SignaturePolicy};

    fn masked_model(sigma: f64) -> (DeviceModel, Scenario) {
        let sc = Scenario::MaskedKeyByte { shares: 3, byte: 0 };
        let g = FrequencyGrid::new(1e9, 2e9, 500).unwrap();
        let p = SignaturePolicy::for_grid(&g, Placement::Disjoint);
        let m = build_device_model(
            &g,
            &BaselineSource::ladder(RlcLadder::reference_pdn(4)),
            &sc.secret_bits(),
            &p,
            4,
        )
        .unwrap()
        .with_noise(sigma)
        .unwrap()
        .with_passive(sc.input_bits())
        .unwrap();
        (m, sc)
    }

    #[test]
    fn empty_and_deterministic() {
        let (m, sc) = masked_model(0.01);
        let s = CampaignSettings::new(10, 3);
        let empty = run_campaign(&m, &sc, &InputSchedule::Random { count: 0 }, &KeySpec::Random, &s).unwrap();
        assert!(empty.is_empty());
        let a = run_campaign(&m, &sc, &InputSchedule::Random { count: 40 }, &KeySpec::Random, &s).unwrap();
        let b = run_campaign(&m, &sc, &InputSchedule::Random { count: 40 }, &KeySpec::Random, &s).unwrap();
        assert_eq!(a, b);
        for t in a.traces() {
            let meta = t.meta.as_ref().unwrap();
            assert_eq!(recombine_bytes(meta.key_shares.as_ref().unwrap()), *meta.key.as_ref().unwrap());
            assert_eq!(meta.averaging, 10);
        }
    }

    #[test]
    fn fixed_shares_are_used_verbatim() {
        let (m, sc) = masked_model(0.0);
        let shares = vec![vec![0xc6; 16], vec![0x30; 16], vec![0x65; 16]];
        let b = run_campaign(
            &m,
            &sc,
            &InputSchedule::Random { count: 2 },
            &KeySpec::FixedShares { shares },
            &CampaignSettings::new(1, 0),
        )
        .unwrap();
        assert_eq!(b.traces()[0].meta.as_ref().unwrap().key.as_ref().unwrap()[0], 0x93);
    }

    #[test]
    fn layout_mismatch_is_reported() {
        let (m, _) = masked_model(0.0);
        let other = Scenario::MaskedKeyByte { shares: 3, byte: 1 };
        assert!(matches!(
            run_campaign(&m, &other, &InputSchedule::Random { count: 1 }, &KeySpec::Random, &CampaignSettings::new(1, 0)),
            Err(SimError::LayoutMismatch(_))
        ));
    }

    #[test]
    fn exhaustive_schedule_covers_the_sbox_input() {
        let sc = Scenario::UnprotectedSbox {
            byte: 0,
            sbox: SboxKind::Present4,
        };
        let metas = plan_inputs(
            &sc,
            &InputSchedule::Exhaustive { repeats: 2 },
            &KeySpec::Fixed { key: vec![0xab; 16] },
            &CampaignSettings::new(1, 0),
        )
        .unwrap();
        assert_eq!(metas.len(), 32);
        let pts: BTreeSet<u8> = metas.iter().map(|m| m.plaintext[0]).collect();
        assert_eq!(pts, (0..16).collect());
        assert!(metas.iter().all(|m| m.key.as_ref().unwrap()[0] == 0x0b));
    }

    #[test]
    fn normalization_cancels_drift() {
        let sc = Scenario::fan_out(2048);
        let g = FrequencyGrid::new(1e9, 2e9, 100).unwrap();
        let m = build_device_model(
            &g,
            &BaselineSource::ladder(RlcLadder::reference_pdn(2)),
            &sc.secret_bits(),
            &SignaturePolicy::for_grid(&g, Placement::Disjoint),
            1,
        )
        .unwrap();
        let mut s = CampaignSettings::new(1, 0);
        s.drift.phase_deg_per_trace = 0.5;
        s.normalize = Some(NormalizeMode::Ratio);
        let b = run_campaign(&m, &sc, &InputSchedule::FanOut { per_class: 5 }, &KeySpec::Random, &s).unwrap();
        // Class-0 traces normalize to exactly 0°, however far the drift went.
        for t in b.traces().iter().step_by(2) {
            assert!(t.phase_deg().iter().all(|p| p.abs() < 1e-9));
        }
    }
}
