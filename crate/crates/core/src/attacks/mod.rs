//! Differential (DIMA), correlation (CIMA) and template (TIMA) attacks on
//! batches of S11 traces.

mod cima;
mod dima;
mod poi;
mod ranking;
mod recovery;
mod template;

pub use cima::{cima_attack, CimaResult};
pub use dima::{dima_attack, dima_attack_with, DimaResult, DimaScore};
pub use poi::{select_pois, select_pois_from_means, PoiSelection};
pub use ranking::{KeyRanking, RankedKey};
pub use recovery::{assemble_byte, byte_bits, recover_master_key, RecoveredKey};
pub use template::{
    tima_attack, tima_attack_with, tima_profile, Accumulation, BitPosterior, BitTemplate, PosteriorResult,
    TemplateSet, TimaOptions,
};

use thiserror::Error;

use crate::crypto::BitId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AttackError {
    #[error("trace {index} carries no {what}")]
    Unlabeled { index: usize, what: String },
    #[error("need at least {needed} traces, got {got}")]
    TooFewTraces { needed: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bit {bit}: class {class} has {got} profiling traces, need at least {needed}")]
    InsufficientData {
        bit: BitId,
        class: u8,
        got: usize,
        needed: usize,
    },
    #[error("bit {bit}: template density is not finite")]
    NonFiniteDensity { bit: BitId },
    #[error("bit {bit}: covariance is not positive definite after regularization")]
    NotPositiveDefinite { bit: BitId },
    #[error("traces were taken on grid {got}, templates on {expected}")]
    GridMismatch { expected: String, got: String },
    #[error("missing decisions for {}", list(.missing))]
    IncompleteRecovery { missing: Vec<BitId> },
}

fn list(bits: &[BitId]) -> String {
    bits.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(", ")
}

/// Plaintext byte `byte` of every trace.
pub(crate) fn plaintext_bytes(
    batch: &crate::trace::TraceBatch,
    byte: usize,
) -> Result<Vec<u8>, AttackError> {
    batch
        .traces()
        .iter()
        .enumerate()
        .map(|(index, t)| {
            t.meta
                .as_ref()
                .and_then(|m| m.plaintext.get(byte).copied())
                .ok_or_else(|| AttackError::Unlabeled {
                    index,
                    what: format!("plaintext byte {byte}"),
                })
        })
        .collect()
}

pub(crate) fn check_key_space(
    sel: &crate::crypto::IntermediateSelector,
    key_space: &std::ops::Range<u16>,
) -> Result<(), AttackError> {
    if !sel.is_valid() {
        return Err(AttackError::InvalidParameter(format!(
            "selector {sel:?} is out of range"
        )));
    }
    if key_space.is_empty() || key_space.end > 256 {
        return Err(AttackError::InvalidParameter(format!(
            "key space {key_space:?} must be a non-empty subrange of 0..256"
        )));
    }
    Ok(())
}
