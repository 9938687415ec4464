use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PdnError;

pub const DEFAULT_Z0_OHMS: f64 = 50.0;

/// A one-port reflection coefficient S11.
///
/// Stored in rectangular form; the VNA-style view is magnitude in dB and
/// principal phase in degrees, `(-180, 180]`, never unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexReflection(pub Complex64);

impl ComplexReflection {
    pub fn new(re: f64, im: f64) -> Self {
        Self(Complex64::new(re, im))
    }

    pub fn from_db_deg(magnitude_db: f64, phase_deg: f64) -> Self {
        Self(Complex64::from_polar(
            10f64.powf(magnitude_db / 20.0),
            phase_deg.to_radians(),
        ))
    }

    pub fn value(&self) -> Complex64 {
        self.0
    }

    pub fn magnitude_db(&self) -> f64 {
        magnitude_db(self.0)
    }

    pub fn phase_deg(&self) -> f64 {
        phase_deg(self.0)
    }
}

impl From<Complex64> for ComplexReflection {
    fn from(c: Complex64) -> Self {
        Self(c)
    }
}

/// 20·log10|z|.
pub fn magnitude_db(z: Complex64) -> f64 {
    20.0 * z.norm().log10()
}

/// Principal phase in degrees, mapped into `(-180, 180]`.
pub fn phase_deg(z: Complex64) -> f64 {
    let d = z.arg().to_degrees();
    if d <= -180.0 {
        d + 360.0
    } else {
        d
    }
}

fn check_z0(z0: f64) -> Result<(), PdnError> {
    if z0.is_finite() && z0 > 0.0 {
        Ok(())
    } else {
        Err(PdnError::InvalidReferenceImpedance(z0))
    }
}

/// Z = z0·(1 + S11)/(1 − S11).
pub fn reflection_to_impedance(s11: ComplexReflection, z0: f64) -> Result<Complex64, PdnError> {
    check_z0(z0)?;
    let s = s11.0;
    if s == Complex64::new(1.0, 0.0) {
        return Err(PdnError::OpenCircuit);
    }
    Ok(z0 * (1.0 + s) / (1.0 - s))
}

/// S11 = (Z − z0)/(Z + z0).
pub fn impedance_to_reflection(z: Complex64, z0: f64) -> Result<ComplexReflection, PdnError> {
    check_z0(z0)?;
    let den = z + z0;
    if den == Complex64::new(0.0, 0.0) {
        return Err(PdnError::DegenerateImpedance { re: z.re, im: z.im });
    }
    Ok(ComplexReflection((z - z0) / den))
}
