use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Identifier of one register bit on the device.
///
/// Text forms: `k<share>.<byte>.<bit>` for key-share bits,
/// `p<share>.<byte>.<bit>` for plaintext-share bits, `sbox.<byte>.<bit>` for
/// first-round S-box output bits; anything else is a free-form label.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BitId {
    KeyShare { share: u8, byte: u8, bit: u8 },
    InputShare { share: u8, byte: u8, bit: u8 },
    SboxOut { byte: u8, bit: u8 },
    Label(String),
}

impl BitId {
    pub fn key_share(share: u8, byte: u8, bit: u8) -> Self {
        BitId::KeyShare { share, byte, bit }
    }

    pub fn input_share(share: u8, byte: u8, bit: u8) -> Self {
        BitId::InputShare { share, byte, bit }
    }

    pub fn sbox_out(byte: u8, bit: u8) -> Self {
        BitId::SboxOut { byte, bit }
    }

    pub fn label(s: impl Into<String>) -> Self {
        BitId::Label(s.into())
    }

    /// Key-share bits for `shares` shares of the given key bytes, ordered
    /// byte-major, then share, then bit.
    pub fn key_share_bits(shares: u8, bytes: impl IntoIterator<Item = u8>) -> Vec<BitId> {
        let mut out = Vec::new();
        for byte in bytes {
            for share in 0..shares {
                for bit in 0..8 {
                    out.push(BitId::key_share(share, byte, bit));
                }
            }
        }
        out
    }
}

impl fmt::Display for BitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BitId::KeyShare { share, byte, bit } => write!(f, "k{share}.{byte}.{bit}"),
            BitId::InputShare { share, byte, bit } => write!(f, "p{share}.{byte}.{bit}"),
            BitId::SboxOut { byte, bit } => write!(f, "sbox.{byte}.{bit}"),
            BitId::Label(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("empty bit identifier")]
pub struct EmptyBitId;

fn parse_triplet(prefix: char, s: &str) -> Option<(u8, u8, u8)> {
    let rest = s.strip_prefix(prefix)?;
    let mut it = rest.split('.');
    let a = it.next()?.parse().ok()?;
    let b = it.next()?.parse().ok()?;
    let c: u8 = it.next()?.parse().ok()?;
    (it.next().is_none() && c < 8).then_some((a, b, c))
}

impl FromStr for BitId {
    type Err = EmptyBitId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(EmptyBitId);
        }
        if let Some((share, byte, bit)) = parse_triplet('k', s) {
            return Ok(BitId::KeyShare { share, byte, bit });
        }
        if let Some((share, byte, bit)) = parse_triplet('p', s) {
            return Ok(BitId::InputShare { share, byte, bit });
        }
        if let Some(rest) = s.strip_prefix("sbox.") {
            let mut it = rest.split('.');
            if let (Some(Ok(byte)), Some(Ok(bit)), None) = (
                it.next().map(str::parse::<u8>),
                it.next().map(str::parse::<u8>),
                it.next(),
            ) {
                if bit < 8 {
                    return Ok(BitId::SboxOut { byte, bit });
                }
            }
        }
        Ok(BitId::Label(s.to_owned()))
    }
}

impl From<BitId> for String {
    fn from(b: BitId) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for BitId {
    type Error = EmptyBitId;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        for b in [
            BitId::key_share(2, 15, 7),
            BitId::input_share(0, 0, 0),
            BitId::sbox_out(3, 1),
            BitId::label("fanout"),
            BitId::label("k1.2"),
        ] {
            assert_eq!(b.to_string().parse::<BitId>().unwrap(), b);
        }
        assert_eq!("k0.0.8".parse::<BitId>().unwrap(), BitId::label("k0.0.8"));
        assert!("".parse::<BitId>().is_err());
    }

    #[test]
    fn serde_as_string_keys() {
        let mut m = std::collections::BTreeMap::new();
        m.insert(BitId::key_share(1, 0, 3), 1u8);
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"k1.0.3":1}"#);
        let back: std::collections::BTreeMap<BitId, u8> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn canonical_key_bit_order() {
        let bits = BitId::key_share_bits(3, [0u8]);
        assert_eq!(bits.len(), 24);
        assert_eq!(bits[0], BitId::key_share(0, 0, 0));
        assert_eq!(bits[8], BitId::key_share(1, 0, 0));
        assert_eq!(bits[23], BitId::key_share(2, 0, 7));
    }
}
