use serde::{Deserialize, Serialize};

use super::{AttackError, PosteriorResult};
use crate::crypto::{recombine_bytes, BitId};

/// Key shares and key assembled from per-bit decisions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveredKey {
    /// Key byte indices, in the order requested.
    pub bytes: Vec<u8>,
    /// `[share][i]` for `bytes[i]`.
    pub shares: Vec<Vec<u8>>,
    /// XOR of the shares, one entry per requested byte.
    pub key: Vec<u8>,
}

/// Byte from eight bit decisions, bit 0 first.
pub fn assemble_byte(bits: [bool; 8]) -> u8 {
    bits.iter()
        .enumerate()
        .fold(0u8, |acc, (i, b)| acc | ((*b as u8) << i))
}

pub fn byte_bits(x: u8) -> [bool; 8] {
    std::array::from_fn(|i| (x >> i) & 1 == 1)
}

/// Assemble each share byte from its key-share bit decisions and XOR-fold
/// the shares.
pub fn recover_master_key(
    posterior: &PosteriorResult,
    shares: u8,
    bytes: &[u8],
) -> Result<RecoveredKey, AttackError> {
    let mut missing = Vec::new();
    let mut out = vec![vec![0u8; bytes.len()]; shares as usize];
    for (i, &byte) in bytes.iter().enumerate() {
        for share in 0..shares {
            let mut bits = [false; 8];
            for (bit, slot) in bits.iter_mut().enumerate() {
                let id = BitId::key_share(share, byte, bit as u8);
                match posterior.decision(&id) {
                    Some(v) => *slot = v,
                    None => missing.push(id),
                }
            }
            out[share as usize][i] = assemble_byte(bits);
        }
    }
    if !missing.is_empty() {
        return Err(AttackError::IncompleteRecovery { missing });
    }
    Ok(RecoveredKey {
        bytes: bytes.to_vec(),
        key: recombine_bytes(&out),
        shares: out,
    })
}
