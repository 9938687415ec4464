use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{beta_0, check_frequency, eta_0, ComplexReflection, PdnError};
use crate::grid::FrequencyGrid;

/// The middle slab of the three-media line: a lossless, non-magnetic
/// (μr = 1) dielectric of relative permittivity εr and length L, embedded
/// in free space on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    relative_permittivity: f64,
    length_m: f64,
}

impl MediumSpec {
    /// `length_m = 0` is accepted as a degenerate (absent) slab.
    pub fn new(relative_permittivity: f64, length_m: f64) -> Result<Self, PdnError> {
        if !(relative_permittivity.is_finite() && relative_permittivity >= 1.0) {
            return Err(PdnError::InvalidPermittivity(relative_permittivity));
        }
        if !(length_m.is_finite() && length_m >= 0.0) {
            return Err(PdnError::InvalidLength(length_m));
        }
        Ok(Self {
            relative_permittivity,
            length_m,
        })
    }

    pub fn relative_permittivity(&self) -> f64 {
        self.relative_permittivity
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    /// Wave impedance of the slab, η = η0/√εr.
    pub fn wave_impedance(&self) -> f64 {
        eta_0() / self.relative_permittivity.sqrt()
    }

    /// Propagation constant of the slab, γ = jβ0√εr.
    pub fn propagation_constant(&self, f_hz: f64) -> Complex64 {
        Complex64::new(0.0, beta_0(f_hz) * self.relative_permittivity.sqrt())
    }
}

/// Which round-trip factor multiplies ρ² in the slab reflection.
///
/// `BoundaryDerived` uses e^{−2γL}, the factor obtained by solving the
/// interface boundary conditions with forward waves e^{−γz}. `AsPrinted`
/// uses e^{+2jγL}; with γ = jβ0√εr that factor is the real number
/// e^{−2β0√εr·L}, so the two conventions disagree for every L > 0 and
/// εr > 1. Only the boundary-derived form agrees with the direct solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentConvention {
    #[default]
    BoundaryDerived,
    AsPrinted,
}

/// Reflection seen from medium 1 for a normally incident plane wave:
///
/// S11 = (η² − η0²)(1 − X) / ((η0 + η)² − (η − η0)²·X)
///
/// with X = e^{−2γL}. See [`ExponentConvention`] for the printed variant.
pub fn s11_transmission_line(
    f_hz: f64,
    medium: &MediumSpec,
) -> Result<ComplexReflection, PdnError> {
    s11_transmission_line_with(f_hz, medium, ExponentConvention::BoundaryDerived)
}

pub fn s11_transmission_line_with(
    f_hz: f64,
    medium: &MediumSpec,
    convention: ExponentConvention,
) -> Result<ComplexReflection, PdnError> {
    check_frequency(f_hz)?;
    let eta0 = eta_0();
    let eta = medium.wave_impedance();
    let gamma = medium.propagation_constant(f_hz);
    let two_l = 2.0 * medium.length_m;
    let round_trip = match convention {
        ExponentConvention::BoundaryDerived => (-gamma * two_l).exp(),
        ExponentConvention::AsPrinted => (Complex64::i() * gamma * two_l).exp(),
    };
    let num = (eta * eta - eta0 * eta0) * (1.0 - round_trip);
    let den = (eta0 + eta).powi(2) - (eta - eta0).powi(2) * round_trip;
    let s = num / den;
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(PdnError::NonFinite {
            f_hz,
            relative_permittivity: medium.relative_permittivity,
            length_m: medium.length_m,
        });
    }
    Ok(ComplexReflection(s))
}

/// One row of a transmission-line sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlPoint {
    pub frequency_hz: f64,
    pub s11: ComplexReflection,
}

pub fn transmission_line_sweep(
    grid: &FrequencyGrid,
    medium: &MediumSpec,
    convention: ExponentConvention,
) -> Result<Vec<TlPoint>, PdnError> {
    grid.stamps()
        .map(|f| {
            Ok(TlPoint {
                frequency_hz: f,
                s11: s11_transmission_line_with(f, medium, convention)?,
            })
        })
        .collect()
}
