use serde::{Deserialize, Serialize};

use super::{BitId, SboxKind};
use crate::trace::TraceMeta;

/// Register layout of a simulated target and how trace metadata maps onto
/// register bit values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    /// A bank of registers all loaded with the same bit (`class` in the
    /// metadata), observed through one aggregate signature.
    FanOut {
        registers: u32,
        #[serde(default = "fanout_label")]
        label: String,
    },
    /// First-round S-box output register for one state byte.
    UnprotectedSbox {
        byte: u8,
        #[serde(default)]
        sbox: SboxKind,
    },
    /// One key byte stored as `shares` Boolean shares, alongside the shares
    /// of the matching plaintext byte.
    MaskedKeyByte { shares: u8, byte: u8 },
    /// The whole 16-byte key stored as `shares` Boolean shares, alongside
    /// the plaintext shares.
    MaskedFullKey { shares: u8 },
}

fn fanout_label() -> String {
    "fanout".into()
}

pub(crate) const STATE_BYTES: usize = 16;

impl Scenario {
    pub fn fan_out(registers: u32) -> Self {
        Scenario::FanOut {
            registers,
            label: fanout_label(),
        }
    }

    /// Number of key/plaintext bytes a trace of this scenario carries.
    pub fn state_bytes(&self) -> usize {
        match self {
            Scenario::FanOut { .. } => 0,
            _ => STATE_BYTES,
        }
    }

    /// Share count for masked scenarios.
    pub fn shares(&self) -> Option<u8> {
        match *self {
            Scenario::MaskedKeyByte { shares, .. } | Scenario::MaskedFullKey { shares } => {
                Some(shares)
            }
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Scenario::FanOut { registers, .. } if registers == 0 => {
                Err("fan-out needs at least one register".into())
            }
            Scenario::UnprotectedSbox { byte, .. } | Scenario::MaskedKeyByte { byte, .. }
                if byte as usize >= STATE_BYTES =>
            {
                Err(format!("byte index {byte} out of range 0..{STATE_BYTES}"))
            }
            Scenario::MaskedKeyByte { shares, .. } | Scenario::MaskedFullKey { shares }
                if shares < 2 =>
            {
                Err("masked scenarios need at least two shares".into())
            }
            _ => Ok(()),
        }
    }

    /// Bits whose values depend on the secret.
    pub fn secret_bits(&self) -> Vec<BitId> {
        match self {
            Scenario::FanOut { label, .. } => vec![BitId::label(label.clone())],
            Scenario::UnprotectedSbox { byte, sbox } => (0..sbox.width_bits())
                .map(|b| BitId::sbox_out(*byte, b))
                .collect(),
            Scenario::MaskedKeyByte { shares, byte } => BitId::key_share_bits(*shares, [*byte]),
            Scenario::MaskedFullKey { shares } => {
                BitId::key_share_bits(*shares, 0..STATE_BYTES as u8)
            }
        }
    }

    /// Plaintext-share bits held next to the key shares.
    pub fn input_bits(&self) -> Vec<BitId> {
        let (shares, bytes): (u8, Vec<u8>) = match *self {
            Scenario::MaskedKeyByte { shares, byte } => (shares, vec![byte]),
            Scenario::MaskedFullKey { shares } => (shares, (0..STATE_BYTES as u8).collect()),
            _ => return Vec::new(),
        };
        let mut out = Vec::new();
        for byte in bytes {
            for share in 0..shares {
                for bit in 0..8 {
                    out.push(BitId::input_share(share, byte, bit));
                }
            }
        }
        out
    }

    /// Every register bit of the layout.
    pub fn layout(&self) -> Vec<BitId> {
        let mut v = self.secret_bits();
        v.extend(self.input_bits());
        v
    }

    /// Register values implied by the metadata, in layout order. `None`
    /// names the first bit the metadata does not determine.
    pub fn bit_values(&self, meta: &TraceMeta) -> Result<Vec<(BitId, bool)>, BitId> {
        match self {
            Scenario::FanOut { label, .. } => {
                let bit = BitId::label(label.clone());
                let v = meta.class.ok_or_else(|| bit.clone())?;
                Ok(vec![(bit, v != 0)])
            }
            Scenario::UnprotectedSbox { byte, sbox } => {
                let i = *byte as usize;
                let key = meta.key.as_ref().and_then(|k| k.get(i).copied());
                let pt = meta.plaintext.get(i).copied();
                let (Some(k), Some(p)) = (key, pt) else {
                    return Err(BitId::sbox_out(*byte, 0));
                };
                let out = sbox.apply((k ^ p) & sbox.mask());
                Ok((0..sbox.width_bits())
                    .map(|b| (BitId::sbox_out(*byte, b), (out >> b) & 1 == 1))
                    .collect())
            }
            _ => self
                .layout()
                .into_iter()
                .map(|bit| match meta.bit_value(&bit) {
                    Some(v) => Ok((bit, v)),
                    None => Err(bit),
                })
                .collect(),
        }
    }

    /// Number of register bits that are set, for a fan-out class.
    pub fn fanout_registers(&self) -> Option<u32> {
        match self {
            Scenario::FanOut { registers, .. } => Some(*registers),
            _ => None,
        }
    }
}
