use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::FrequencyGrid;
use crate::pdn::{magnitude_db, phase_deg};
use crate::trace::ComplexTrace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: data before the option line")]
    MissingOptionLine { line: usize },
    #[error("line {line}: second option line")]
    DuplicateOptionLine { line: usize },
    #[error("line {line}: invalid option {token:?}")]
    InvalidOption { line: usize, token: String },
    #[error("line {line}: only S parameters are supported, got {parameter}")]
    UnsupportedParameter { line: usize, parameter: String },
    #[error("line {line}: keyword {keyword} is not supported (version 1 one-port files only)")]
    UnsupportedKeyword { line: usize, keyword: String },
    #[error("line {line}: {token:?} is not a finite number")]
    InvalidNumber { line: usize, token: String },
    #[error("line {line}: {values} values in a row; a one-port row has 3")]
    WrongPortCount { line: usize, values: usize },
    #[error("line {line}: incomplete data row ({values} values)")]
    IncompleteRow { line: usize, values: usize },
    #[error("line {line}: frequency must be >= 0")]
    NegativeFrequency { line: usize },
    #[error("line {line}: frequency does not increase")]
    NonMonotoneFrequency { line: usize },
    #[error("no data rows")]
    NoData,
    #[error("frequencies are not evenly spaced (point {index})")]
    IrregularGrid { index: usize },
    #[error("a sweep needs at least two points with a positive start frequency")]
    TooFewPoints,
}

impl TouchstoneError {
    /// Stable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            TouchstoneError::MissingOptionLine { .. } => "MissingOptionLine",
            TouchstoneError::DuplicateOptionLine { .. } => "DuplicateOptionLine",
            TouchstoneError::InvalidOption { .. } => "InvalidOption",
            TouchstoneError::UnsupportedParameter { .. } => "UnsupportedParameter",
            TouchstoneError::UnsupportedKeyword { .. } => "UnsupportedKeyword",
            TouchstoneError::InvalidNumber { .. } => "InvalidNumber",
            TouchstoneError::WrongPortCount { .. } => "WrongPortCount",
            TouchstoneError::IncompleteRow { .. } => "IncompleteRow",
            TouchstoneError::NegativeFrequency { .. } => "NegativeFrequency",
            TouchstoneError::NonMonotoneFrequency { .. } => "NonMonotoneFrequency",
            TouchstoneError::NoData => "NoData",
            TouchstoneError::IrregularGrid { .. } => "IrregularGrid",
            TouchstoneError::TooFewPoints => "TooFewPoints",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FrequencyUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FrequencyUnit {
    pub fn multiplier(self) -> f64 {
        match self {
            FrequencyUnit::Hz => 1.0,
            FrequencyUnit::KHz => 1e3,
            FrequencyUnit::MHz => 1e6,
            FrequencyUnit::GHz => 1e9,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "hz" => FrequencyUnit::Hz,
            "khz" => FrequencyUnit::KHz,
            "mhz" => FrequencyUnit::MHz,
            "ghz" => FrequencyUnit::GHz,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TouchstoneFormat {
    /// Real, imaginary.
    RI,
    /// Linear magnitude, angle in degrees.
    MA,
    /// Magnitude in dB, angle in degrees.
    DB,
}

impl TouchstoneFormat {
    fn to_complex(self, a: f64, b: f64) -> Complex64 {
        match self {
            TouchstoneFormat::RI => Complex64::new(a, b),
            TouchstoneFormat::MA => Complex64::from_polar(a, b.to_radians()),
            TouchstoneFormat::DB => Complex64::from_polar(10f64.powf(a / 20.0), b.to_radians()),
        }
    }
}

/// A parsed one-port file.
#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneSweep {
    pub unit: FrequencyUnit,
    pub format: TouchstoneFormat,
    pub reference_ohms: f64,
    pub frequencies_hz: Vec<f64>,
    /// S11 in rectangular form.
    pub samples: Vec<Complex64>,
}

impl TouchstoneSweep {
    /// Convert to a trace on a linear grid. Spacing may deviate from uniform
    /// by 1e-6 of a step (exported frequencies are rounded).
    pub fn to_trace(&self) -> Result<ComplexTrace, TouchstoneError> {
        let f = &self.frequencies_hz;
        if f.len() < 2 || f[0] <= 0.0 {
            return Err(TouchstoneError::TooFewPoints);
        }
        let grid = FrequencyGrid::new(f[0], f[f.len() - 1], f.len())
            .map_err(|_| TouchstoneError::TooFewPoints)?;
        let tol = 1e-6 * grid.step_hz();
        if let Some(index) = (0..f.len()).find(|&i| (grid.stamp(i) - f[i]).abs() > tol) {
            return Err(TouchstoneError::IrregularGrid { index });
        }
        ComplexTrace::new(grid, self.samples.clone()).map_err(|_| TouchstoneError::NoData)
    }
}

/// Parse a one-port Touchstone (version 1) file and place it on a grid.
pub fn parse_touchstone(text: &str) -> Result<ComplexTrace, TouchstoneError> {
    parse_touchstone_sweep(text)?.to_trace()
}

pub fn parse_touchstone_sweep(text: &str) -> Result<TouchstoneSweep, TouchstoneError> {
    let mut options: Option<(FrequencyUnit, TouchstoneFormat, f64)> = None;
    let mut freqs: Vec<f64> = Vec::new();
    let mut samples = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('!').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('#') {
            if options.is_some() {
                return Err(TouchstoneError::DuplicateOptionLine { line });
            }
            if !freqs.is_empty() {
                return Err(TouchstoneError::MissingOptionLine { line });
            }
            options = Some(parse_options(rest, line)?);
            continue;
        }
        if content.starts_with('[') {
            let keyword = content.split(']').next().unwrap_or(content).to_string() + "]";
            return Err(TouchstoneError::UnsupportedKeyword { line, keyword });
        }
        let Some((unit, format, _)) = options else {
            return Err(TouchstoneError::MissingOptionLine { line });
        };
        let values = content
            .split_whitespace()
            .map(|t| match t.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(TouchstoneError::InvalidNumber {
                    line,
                    token: t.to_string(),
                }),
            })
            .collect::<Result<Vec<f64>, _>>()?;
        match values.len() {
            3 => {}
            n if n > 3 => return Err(TouchstoneError::WrongPortCount { line, values: n }),
            n => return Err(TouchstoneError::IncompleteRow { line, values: n }),
        }
        let f = values[0] * unit.multiplier();
        if f < 0.0 {
            return Err(TouchstoneError::NegativeFrequency { line });
        }
        if freqs.last().is_some_and(|&prev| f <= prev) {
            return Err(TouchstoneError::NonMonotoneFrequency { line });
        }
        freqs.push(f);
        samples.push(format.to_complex(values[1], values[2]));
    }
    let Some((unit, format, reference_ohms)) = options else {
        return Err(if freqs.is_empty() {
            TouchstoneError::NoData
        } else {
            TouchstoneError::MissingOptionLine { line: 0 }
        });
    };
    if freqs.is_empty() {
        return Err(TouchstoneError::NoData);
    }
    Ok(TouchstoneSweep {
        unit,
        format,
        reference_ohms,
        frequencies_hz: freqs,
        samples,
    })
}

/// Option line fields; missing ones take the Touchstone defaults
/// (GHz, S, MA, R 50).
fn parse_options(rest: &str, line: usize) -> Result<(FrequencyUnit, TouchstoneFormat, f64), TouchstoneError> {
    let mut unit = None;
    let mut format = None;
    let mut param_seen = false;
    let mut r = None;
    let invalid = |token: &str| TouchstoneError::InvalidOption {
        line,
        token: token.to_string(),
    };
    let mut tokens = rest.split_whitespace();
    while let Some(tok) = tokens.next() {
        let t = tok.to_ascii_lowercase();
        if let Some(u) = FrequencyUnit::parse(&t) {
            if unit.replace(u).is_some() {
                return Err(invalid(tok));
            }
            continue;
        }
        match t.as_str() {
            "s" if !param_seen => param_seen = true,
            "y" | "z" | "h" | "g" => {
                return Err(TouchstoneError::UnsupportedParameter {
                    line,
                    parameter: tok.to_string(),
                })
            }
            "ri" | "ma" | "db" if format.is_none() => {
                format = Some(match t.as_str() {
                    "ri" => TouchstoneFormat::RI,
                    "ma" => TouchstoneFormat::MA,
                    _ => TouchstoneFormat::DB,
                })
            }
            "r" if r.is_none() => {
                let v = tokens.next().ok_or_else(|| invalid(tok))?;
                match v.parse::<f64>() {
                    Ok(x) if x.is_finite() && x > 0.0 => r = Some(x),
                    _ => return Err(invalid(v)),
                }
            }
            _ => return Err(invalid(tok)),
        }
    }
    Ok((
        unit.unwrap_or(FrequencyUnit::GHz),
        format.unwrap_or(TouchstoneFormat::MA),
        r.unwrap_or(50.0),
    ))
}

/// Write a trace as a one-port file with frequencies in Hz.
pub fn write_touchstone(trace: &ComplexTrace, format: TouchstoneFormat, reference_ohms: f64) -> String {
    let name = match format {
        TouchstoneFormat::RI => "RI",
        TouchstoneFormat::MA => "MA",
        TouchstoneFormat::DB => "DB",
    };
    let mut out = format!("! one-port S11 sweep\n# Hz S {name} R {reference_ohms}\n");
    for (f, s) in trace.grid().stamps().zip(trace.samples()) {
        let (a, b) = match format {
            TouchstoneFormat::RI => (s.re, s.im),
            TouchstoneFormat::MA => (s.norm(), phase_deg(*s)),
            TouchstoneFormat::DB => (magnitude_db(*s), phase_deg(*s)),
        };
        let _ = writeln!(out, "{f:?} {a:?} {b:?}");
    }
    out
}
