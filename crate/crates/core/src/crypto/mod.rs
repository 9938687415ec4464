//! The attacked cryptographic semantics: AES S-box intermediates, Hamming
//! weight, Boolean sharing, and the register layouts of the simulated
//! targets.

mod bits;
mod masking;
mod sbox;
mod scenario;

pub use bits::{BitId, EmptyBitId};
pub use masking::{
    recombine_bytes, share_recombine, share_split, share_split_with, split_bytes, SharedSecret,
};
pub use sbox::{
    hamming_weight, intermediate_value, sbox, IntermediateSelector, IntermediateTarget, SboxKind,
    AES_SBOX, PRESENT_SBOX,
};
pub use scenario::Scenario;
