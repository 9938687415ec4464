use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BitSignature, SignaturePolicy, SimError};
use crate::crypto::BitId;
use crate::grid::FrequencyGrid;
use crate::pdn::{impedance_to_reflection, RlcLadder, DEFAULT_Z0_OHMS};
use crate::trace::ComplexTrace;

pub const DEVICE_SCHEMA_VERSION: u32 = 1;

/// Where the data-independent S11 curve comes from.
#[derive(Debug, Clone)]
pub enum BaselineSource {
    /// Ladder impedance converted to S11, then rotated by a fixed
    /// reference-plane phase (fixture/port extension) so the curve does not
    /// sit on the ±180° branch cut of a near-short.
    Ladder {
        ladder: RlcLadder,
        z0_ohms: f64,
        reference_plane_deg: f64,
    },
    /// A measured or previously synthesized sweep on the same grid.
    Trace(ComplexTrace),
}

impl BaselineSource {
    pub fn ladder(ladder: RlcLadder) -> Self {
        BaselineSource::Ladder {
            ladder,
            z0_ohms: DEFAULT_Z0_OHMS,
            reference_plane_deg: -90.0,
        }
    }

    pub fn samples(&self, grid: &FrequencyGrid) -> Result<Vec<Complex64>, SimError> {
        match self {
            BaselineSource::Ladder {
                ladder,
                z0_ohms,
                reference_plane_deg,
            } => {
                let rot = Complex64::from_polar(1.0, reference_plane_deg.to_radians());
                grid.stamps()
                    .map(|f| {
                        let z = ladder.input_impedance(f)?;
                        Ok(impedance_to_reflection(z, *z0_ohms)?.0 * rot)
                    })
                    .collect()
            }
            BaselineSource::Trace(t) => {
                if t.grid() != grid {
                    return Err(SimError::GridMismatch);
                }
                Ok(t.samples().to_vec())
            }
        }
    }
}

/// Noise levels, as per-quadrature S11 standard deviation of one raw sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePreset {
    Clean,
    /// Single-trace template recovery at averaging 200 succeeds; chosen by
    /// the acceptance runs.
    Nominal,
    Hard,
}

impl NoisePreset {
    pub fn sigma(self) -> f64 {
        match self {
            NoisePreset::Clean => 0.0,
            NoisePreset::Nominal => 0.005,
            NoisePreset::Hard => 0.02,
        }
    }
}

/// The simulated device: baseline sweep, per-bit signatures and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceModel {
    pub schema_version: u32,
    grid: FrequencyGrid,
    baseline: Vec<Complex64>,
    signatures: BTreeMap<BitId, BitSignature>,
    /// Bits that exist in the register layout but leave no trace.
    #[serde(default)]
    passive: BTreeSet<BitId>,
    noise_sigma: f64,
    seed: u64,
}

impl DeviceModel {
    pub fn new(
        grid: FrequencyGrid,
        baseline: Vec<Complex64>,
        signatures: Vec<BitSignature>,
        noise_sigma: f64,
        seed: u64,
    ) -> Result<Self, SimError> {
        let mut map = BTreeMap::new();
        for s in signatures {
            if map.contains_key(&s.owner) {
                return Err(SimError::DuplicateBit(s.owner));
            }
            map.insert(s.owner.clone(), s);
        }
        let m = Self {
            schema_version: DEVICE_SCHEMA_VERSION,
            grid,
            baseline,
            signatures: map,
            passive: BTreeSet::new(),
            noise_sigma,
            seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.baseline.len() != self.grid.points() {
            return Err(SimError::BaselineLength {
                expected: self.grid.points(),
                got: self.baseline.len(),
            });
        }
        if self.baseline.iter().any(|s| !(s.re.is_finite() && s.im.is_finite())) {
            return Err(SimError::InvalidInput("baseline has non-finite samples".into()));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SimError::InvalidNoise(self.noise_sigma));
        }
        for (bit, sig) in &self.signatures {
            if &sig.owner != bit {
                return Err(SimError::InvalidSignature {
                    bit: bit.clone(),
                    reason: format!("stored under a different owner {}", sig.owner),
                });
            }
            sig.validate(&self.grid)?;
            if self.passive.contains(bit) {
                return Err(SimError::DuplicateBit(bit.clone()));
            }
        }
        Ok(())
    }

    pub fn with_noise(mut self, sigma: f64) -> Result<Self, SimError> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(SimError::InvalidNoise(sigma));
        }
        self.noise_sigma = sigma;
        Ok(self)
    }

    /// Declare register bits that carry no signature.
    pub fn with_passive(mut self, bits: impl IntoIterator<Item = BitId>) -> Result<Self, SimError> {
        for b in bits {
            if self.signatures.contains_key(&b) || !self.passive.insert(b.clone()) {
                return Err(SimError::DuplicateBit(b));
            }
        }
        Ok(self)
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn baseline(&self) -> &[Complex64] {
        &self.baseline
    }

    pub fn baseline_trace(&self) -> ComplexTrace {
        ComplexTrace::new(self.grid, self.baseline.clone()).expect("validated baseline")
    }

    pub fn signatures(&self) -> &BTreeMap<BitId, BitSignature> {
        &self.signatures
    }

    pub fn signature(&self, bit: &BitId) -> Option<&BitSignature> {
        self.signatures.get(bit)
    }

    pub fn passive(&self) -> &BTreeSet<BitId> {
        &self.passive
    }

    /// True if the bit is part of the register layout.
    pub fn knows(&self, bit: &BitId) -> bool {
        self.signatures.contains_key(bit) || self.passive.contains(bit)
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, SimError> {
        let m: DeviceModel = serde_json::from_str(s)
            .map_err(|e| SimError::InvalidInput(format!("device model: {e}")))?;
        if m.schema_version != DEVICE_SCHEMA_VERSION {
            return Err(SimError::InvalidInput(format!(
                "device model schema_version {} (supported: {DEVICE_SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        m.validate()?;
        Ok(m)
    }

    /// Short content hash identifying this exact model.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("device model serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }
}

/// Draw a device model: baseline from `baseline`, one signature per entry of
/// `bits` according to `policy`. Noise starts at zero; see
/// [`DeviceModel::with_noise`].
pub fn build_device_model(
    grid: &FrequencyGrid,
    baseline: &BaselineSource,
    bits: &[BitId],
    policy: &SignaturePolicy,
    seed: u64,
) -> Result<DeviceModel, SimError> {
    let mut seen = BTreeSet::new();
    for b in bits {
        if !seen.insert(b) {
            return Err(SimError::DuplicateBit(b.clone()));
        }
    }
    let samples = baseline.samples(grid)?;
    let signatures = policy.generate(grid, bits, seed)?;
    DeviceModel::new(*grid, samples, signatures, 0.0, seed)
}
