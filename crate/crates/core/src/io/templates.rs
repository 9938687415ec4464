use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{expect_magic, read_line, IoError, MAX_HEADER_BYTES};
use crate::attacks::{BitTemplate, TemplateSet};
use crate::crypto::BitId;
use crate::grid::FrequencyGrid;
use crate::trace::Channel;

pub const TEMPLATE_MAGIC: &str = "impsca-templates";
pub const TEMPLATE_SCHEMA_VERSION: u32 = 1;

const SAMPLE_FORMAT: &str = "f64le per template: mean0[p], mean1[p], cov0[p*p], cov1[p*p]";

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    grid_fingerprint: String,
    grid: FrequencyGrid,
    channel: Channel,
    pois: usize,
    alpha: f64,
    ridge: f64,
    profiling_traces: usize,
    sample_format: String,
    templates: Vec<TemplateHeader>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TemplateHeader {
    bit: BitId,
    pois: Vec<usize>,
    shortfall: bool,
    dom: Vec<f64>,
    counts: [usize; 2],
}

pub fn write_templates(path: impl AsRef<Path>, set: &TemplateSet) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_templates_to(&mut w, set)?;
    w.flush()?;
    Ok(())
}

pub fn write_templates_to<W: Write>(w: &mut W, set: &TemplateSet) -> Result<(), IoError> {
    let header = Header {
        schema_version: TEMPLATE_SCHEMA_VERSION,
        grid_fingerprint: set.grid.fingerprint(),
        grid: set.grid,
        channel: set.channel,
        pois: set.pois,
        alpha: set.alpha,
        ridge: set.ridge,
        profiling_traces: set.profiling_traces,
        sample_format: SAMPLE_FORMAT.into(),
        templates: set
            .templates
            .iter()
            .map(|t| TemplateHeader {
                bit: t.bit.clone(),
                pois: t.pois.clone(),
                shortfall: t.shortfall,
                dom: t.dom.clone(),
                counts: t.counts,
            })
            .collect(),
    };
    writeln!(w, "{TEMPLATE_MAGIC}")?;
    serde_json::to_writer(&mut *w, &header).map_err(|e| IoError::Header(e.to_string()))?;
    writeln!(w)?;
    for t in &set.templates {
        for v in t.means.iter().chain(&t.covariances).flatten() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_templates(path: impl AsRef<Path>) -> Result<TemplateSet, IoError> {
    read_templates_from(&mut BufReader::new(File::open(path)?))
}

pub fn read_templates_from<R: BufRead>(r: &mut R) -> Result<TemplateSet, IoError> {
    expect_magic(r, TEMPLATE_MAGIC)?;
    let line = read_line(r, MAX_HEADER_BYTES)?.ok_or_else(|| IoError::Header("missing".into()))?;
    let probe: serde_json::Value =
        serde_json::from_str(&line).map_err(|e| IoError::Header(e.to_string()))?;
    let version = probe
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| IoError::Header("no schema_version".into()))?;
    if version != TEMPLATE_SCHEMA_VERSION as u64 {
        return Err(IoError::VersionMismatch {
            found: version.min(u32::MAX as u64) as u32,
            supported: TEMPLATE_SCHEMA_VERSION,
        });
    }
    let h: Header = serde_json::from_value(probe).map_err(|e| IoError::Header(e.to_string()))?;
    if h.grid_fingerprint != h.grid.fingerprint() {
        return Err(IoError::ShapeMismatch("grid fingerprint does not match grid".into()));
    }
    let mut expected = 0usize;
    for t in &h.templates {
        let p = t.pois.len();
        if t.dom.len() != p {
            return Err(IoError::ShapeMismatch(format!("{}: {} DOM values for {p} POIs", t.bit, t.dom.len())));
        }
        if let Some(&bad) = t.pois.iter().find(|&&i| i >= h.channel.features_per_trace(h.grid.points())) {
            return Err(IoError::ShapeMismatch(format!("{}: POI {bad} outside the feature range", t.bit)));
        }
        expected = p
            .checked_mul(p)
            .and_then(|pp| pp.checked_add(p))
            .and_then(|n| n.checked_mul(16))
            .and_then(|n| expected.checked_add(n))
            .ok_or_else(|| IoError::ShapeMismatch("payload size overflows".into()))?;
    }
    let mut payload = Vec::new();
    r.take(expected as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(IoError::Truncated { expected, got: payload.len() });
    }
    if payload.len() > expected {
        return Err(IoError::ShapeMismatch(format!(
            "payload longer than the {expected} bytes the header describes"
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
    let templates = h
        .templates
        .into_iter()
        .map(|t| {
            let p = t.pois.len();
            let means = [take(p), take(p)];
            let covariances = [take(p * p), take(p * p)];
            BitTemplate {
                bit: t.bit,
                pois: t.pois,
                shortfall: t.shortfall,
                dom: t.dom,
                counts: t.counts,
                means,
                covariances,
            }
        })
        .collect();
    Ok(TemplateSet {
        grid: h.grid,
        channel: h.channel,
        pois: h.pois,
        alpha: h.alpha,
        ridge: h.ridge,
        profiling_traces: h.profiling_traces,
        templates,
    })
}
