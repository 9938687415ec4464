//! Impedance side-channel analysis toolkit.
//!
//! Models frequency-dependent chip impedance, synthesizes data-dependent S11
//! sweeps for a simulated device, and mounts differential, correlation and
//! template attacks on the resulting traces.

pub mod attacks;
pub mod crypto;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod pdn;
pub mod rng;
pub mod sim;
pub mod trace;

pub use grid::{FrequencyGrid, GridError};
pub use trace::{Channel, ComplexTrace, TraceBatch, TraceError, TraceMeta};
