//! Simulated device under test.
//!
//! A [`DeviceModel`] holds a baseline S11 curve and, for every register bit,
//! a frequency signature: a few resonance lobes that deflect the magnitude
//! (dB) and phase (degrees) of the baseline while the bit holds a one.
//! Active bits superpose additively in (dB, degree) space, then circular
//! complex Gaussian noise is added with variance reduced by the instrument
//! averaging factor.

mod campaign;
mod device;
mod signature;
mod synth;

pub use campaign::{
    check_layout, plan_inputs, run_campaign, CampaignSettings, DriftSpec, InputSchedule, KeySpec,
};
pub use device::{build_device_model, BaselineSource, DeviceModel, NoisePreset, DEVICE_SCHEMA_VERSION};
pub use signature::{BitSignature, Lobe, Placement, SignaturePolicy, LOBE_SUPPORT};
pub use synth::{
    masking_distinguishability_witness, power_proxy, random_state, reference_normalize,
    synthesize_trace,
    AveragingMode, NormalizeMode, SnapshotState, Synthesizer, Witness,
};

use thiserror::Error;

use crate::crypto::BitId;
use crate::grid::GridError;
use crate::pdn::PdnError;
use crate::trace::TraceError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("duplicate register bit {0}")]
    DuplicateBit(BitId),
    #[error("invalid signature policy: {0}")]
    InvalidPolicy(String),
    #[error("grid too coarse: {lobes} disjoint lobes need {needed_hz:.3e} Hz each, only {available_hz:.3e} Hz available")]
    GridTooCoarse {
        lobes: usize,
        needed_hz: f64,
        available_hz: f64,
    },
    #[error("invalid signature for {bit}: {reason}")]
    InvalidSignature { bit: BitId, reason: String },
    #[error("baseline has {got} samples, grid has {expected} points")]
    BaselineLength { expected: usize, got: usize },
    #[error("noise sigma must be finite and >= 0, got {0}")]
    InvalidNoise(f64),
    #[error("state names bit {0} which the device model does not know")]
    UnknownBit(BitId),
    #[error("bit {0} has no signature")]
    MissingSignature(BitId),
    #[error("signature of {0} never deflects the baseline: no distinguishing frequency")]
    NoWitness(BitId),
    #[error("averaging factor must be >= 1")]
    InvalidAveraging,
    #[error("traces are on different grids")]
    GridMismatch,
    #[error("scenario layout does not match the device model: {0}")]
    LayoutMismatch(String),
    #[error("invalid campaign input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Pdn(#[from] PdnError),
    #[error(transparent)]
    Trace(#[from] TraceError),
}
