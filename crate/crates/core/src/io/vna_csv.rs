use num_complex::Complex64;

use super::{IoError, TouchstoneSweep};
use super::touchstone::{FrequencyUnit, TouchstoneFormat};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pair {
    ReIm,
    DbPhase,
    MagPhase,
}

fn unit_of(header: &str) -> FrequencyUnit {
    let h = header.to_ascii_lowercase();
    if h.contains("ghz") {
        FrequencyUnit::GHz
    } else if h.contains("mhz") {
        FrequencyUnit::MHz
    } else if h.contains("khz") {
        FrequencyUnit::KHz
    } else {
        FrequencyUnit::Hz
    }
}

/// First column whose name has a word from `keys`.
fn find(headers: &[String], keys: &[&str]) -> Option<usize> {
    headers.iter().position(|h| {
        h.split(|c: char| !c.is_ascii_alphanumeric())
            .any(|w| keys.contains(&w))
    })
}

/// Import a one-port sweep from a VNA CSV export.
///
/// The header row must name a frequency column (unit read from the name,
/// e.g. `Frequency (GHz)`; Hz if absent) and either real/imaginary columns or
/// dB-or-linear magnitude with phase in degrees.
pub fn parse_vna_csv(text: &str) -> Result<TouchstoneSweep, IoError> {
    let err = |m: String| IoError::Csv(m);
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'!'))
        .from_reader(text.as_bytes());
    let raw: Vec<String> = rdr
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let headers: Vec<String> = raw.iter().map(|h| h.to_ascii_lowercase()).collect();
    let fcol = find(&headers, &["freq", "frequency", "f"]).ok_or_else(|| err("no frequency column".into()))?;
    let unit = unit_of(&raw[fcol]);
    let (pair, a, b) = if let (Some(a), Some(b)) = (find(&headers, &["re", "real"]), find(&headers, &["im", "imag", "imaginary"])) {
        (Pair::ReIm, a, b)
    } else if let (Some(a), Some(b)) = (find(&headers, &["db"]), find(&headers, &["phase", "ang", "angle", "deg"])) {
        (Pair::DbPhase, a, b)
    } else if let (Some(a), Some(b)) = (find(&headers, &["mag", "lin", "magnitude"]), find(&headers, &["phase", "ang", "angle", "deg"])) {
        (Pair::MagPhase, a, b)
    } else {
        return Err(err(format!("no re/im or magnitude/phase columns in {raw:?}")));
    };

    let mut freqs: Vec<f64> = Vec::new();
    let mut samples = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let line = i + 2;
        let get = |c: usize| -> Result<f64, IoError> {
            let s = rec.get(c).ok_or_else(|| err(format!("row {line}: missing column {c}")))?;
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("row {line}: {s:?} is not a finite number")))
        };
        let f = get(fcol)? * unit.multiplier();
        if freqs.last().is_some_and(|&p| f <= p) {
            return Err(err(format!("row {line}: frequency does not increase")));
        }
        let (x, y) = (get(a)?, get(b)?);
        freqs.push(f);
        samples.push(match pair {
            Pair::ReIm => Complex64::new(x, y),
            Pair::DbPhase => Complex64::from_polar(10f64.powf(x / 20.0), y.to_radians()),
            Pair::MagPhase => Complex64::from_polar(x, y.to_radians()),
        });
    }
    if freqs.is_empty() {
        return Err(err("no data rows".into()));
    }
    Ok(TouchstoneSweep {
        unit,
        format: match pair {
            Pair::ReIm => TouchstoneFormat::RI,
            Pair::DbPhase => TouchstoneFormat::DB,
            Pair::MagPhase => TouchstoneFormat::MA,
        },
        reference_ohms: 50.0,
        frequencies_hz: freqs,
        samples,
    })
}
