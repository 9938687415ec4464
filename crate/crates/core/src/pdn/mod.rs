//! Closed-form impedance and reflection models: one-port S11 ↔ Z conversion,
//! the ideal three-media transmission-line reflection, and a lumped RLC
//! ladder for the power distribution network baseline.

mod ladder;
mod reflection;
mod tline;

pub use ladder::{rlc_ladder_impedance, LadderStage, RlcLadder};
pub use reflection::{
    impedance_to_reflection, magnitude_db, phase_deg, reflection_to_impedance, ComplexReflection,
    DEFAULT_Z0_OHMS,
};
pub use tline::{
    s11_transmission_line, s11_transmission_line_with, transmission_line_sweep, ExponentConvention,
    MediumSpec, TlPoint,
};

use thiserror::Error;

/// Vacuum permittivity, F/m (CODATA 2018).
pub const EPSILON_0: f64 = 8.8541878128e-12;
/// Vacuum permeability, H/m (CODATA 2018).
pub const MU_0: f64 = 1.25663706212e-6;

/// Free-space wave impedance √(μ0/ε0), ohms.
pub fn eta_0() -> f64 {
    (MU_0 / EPSILON_0).sqrt()
}

/// Free-space wave number 2πf√(ε0μ0), rad/m.
pub fn beta_0(f_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_hz * (EPSILON_0 * MU_0).sqrt()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdnError {
    #[error("relative permittivity must be finite and >= 1, got {0}")]
    InvalidPermittivity(f64),
    #[error("medium length must be finite and >= 0 m, got {0}")]
    InvalidLength(f64),
    #[error("frequency must be finite and > 0 Hz, got {0}")]
    InvalidFrequency(f64),
    #[error("reference impedance must be finite and > 0 ohm, got {0}")]
    InvalidReferenceImpedance(f64),
    #[error("S11 = 1 is an open circuit: impedance is infinite")]
    OpenCircuit,
    #[error("impedance {re}{im:+}j equals -z0: reflection coefficient is undefined")]
    DegenerateImpedance { re: f64, im: f64 },
    #[error("non-finite S11 at f = {f_hz} Hz, er = {relative_permittivity}, L = {length_m} m")]
    NonFinite {
        f_hz: f64,
        relative_permittivity: f64,
        length_m: f64,
    },
    #[error("ladder element values must be finite and >= 0 (stage {stage})")]
    InvalidElement { stage: usize },
    #[error("ladder needs at least one stage")]
    EmptyLadder,
    #[error("ladder admittance vanishes at {f_hz} Hz: input impedance is infinite")]
    ZeroAdmittance { f_hz: f64 },
    #[error("ladder impedance is not finite at {f_hz} Hz")]
    NonFiniteImpedance { f_hz: f64 },
}

pub(crate) fn check_frequency(f_hz: f64) -> Result<(), PdnError> {
    if f_hz.is_finite() && f_hz > 0.0 {
        Ok(())
    } else {
        Err(PdnError::InvalidFrequency(f_hz))
    }
}
