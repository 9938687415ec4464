use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{expect_magic, read_line, IoError, MAX_HEADER_BYTES};
use crate::grid::FrequencyGrid;
use crate::trace::{Channel, ComplexTrace, TraceBatch, TraceMeta};

pub const ARCHIVE_MAGIC: &str = "impsca-archive";
pub const ARCHIVE_SCHEMA_VERSION: u32 = 1;

/// Sample layout written into every header.
const SAMPLE_FORMAT: &str = "f64le re,im per stamp, traces in order";

/// Structured-text header of a trace archive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub schema_version: u32,
    pub grid: FrequencyGrid,
    pub channel: Channel,
    pub sample_format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device_fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign_seed: Option<u64>,
    pub trace_count: usize,
    pub points: usize,
    /// One record per trace; `null` when a trace carries no metadata.
    pub traces: Vec<Option<TraceMeta>>,
    /// Fields written by other tools or newer versions, kept on rewrite.
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Provenance stored alongside a batch.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ArchiveInfo {
    pub device_fingerprint: Option<String>,
    pub campaign_seed: Option<u64>,
    pub extra: serde_json::Map<String, serde_json::Value>,
}

pub fn write_archive(
    path: impl AsRef<Path>,
    batch: &TraceBatch,
    info: &ArchiveInfo,
) -> Result<(), IoError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_archive_to(&mut w, batch, info)?;
    w.flush()?;
    Ok(())
}

pub fn write_archive_to<W: Write>(
    w: &mut W,
    batch: &TraceBatch,
    info: &ArchiveInfo,
) -> Result<(), IoError> {
    let header = ArchiveHeader {
        schema_version: ARCHIVE_SCHEMA_VERSION,
        grid: *batch.grid(),
        channel: batch.channel,
        sample_format: SAMPLE_FORMAT.into(),
        device_fingerprint: info.device_fingerprint.clone(),
        campaign_seed: info.campaign_seed,
        trace_count: batch.len(),
        points: batch.grid().points(),
        traces: batch.traces().iter().map(|t| t.meta.clone()).collect(),
        extra: info.extra.clone(),
    };
    writeln!(w, "{ARCHIVE_MAGIC}")?;
    serde_json::to_writer(&mut *w, &header).map_err(|e| IoError::Header(e.to_string()))?;
    writeln!(w)?;
    let mut buf = Vec::with_capacity(batch.grid().points() * 16);
    for t in batch.traces() {
        buf.clear();
        for s in t.samples() {
            buf.extend_from_slice(&s.re.to_le_bytes());
            buf.extend_from_slice(&s.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_archive(path: impl AsRef<Path>) -> Result<(TraceBatch, ArchiveInfo), IoError> {
    read_archive_from(&mut BufReader::new(File::open(path)?))
}

/// Parse an archive. Nothing is returned unless the whole payload is
/// present and consistent with the header.
pub fn read_archive_from<R: std::io::BufRead>(
    r: &mut R,
) -> Result<(TraceBatch, ArchiveInfo), IoError> {
    expect_magic(r, ARCHIVE_MAGIC)?;
    let line = read_line(r, MAX_HEADER_BYTES)?.ok_or_else(|| IoError::Header("missing".into()))?;
    let probe: serde_json::Value =
        serde_json::from_str(&line).map_err(|e| IoError::Header(e.to_string()))?;
    let version = probe
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| IoError::Header("no schema_version".into()))?;
    if version != ARCHIVE_SCHEMA_VERSION as u64 {
        return Err(IoError::VersionMismatch {
            found: version.min(u32::MAX as u64) as u32,
            supported: ARCHIVE_SCHEMA_VERSION,
        });
    }
    let h: ArchiveHeader =
        serde_json::from_value(probe).map_err(|e| IoError::Header(e.to_string()))?;
    if h.points != h.grid.points() {
        return Err(IoError::ShapeMismatch(format!(
            "header says {} points, grid has {}",
            h.points,
            h.grid.points()
        )));
    }
    if h.traces.len() != h.trace_count {
        return Err(IoError::ShapeMismatch(format!(
            "{} metadata records for {} traces",
            h.traces.len(),
            h.trace_count
        )));
    }
    let expected = h
        .trace_count
        .checked_mul(h.points)
        .and_then(|n| n.checked_mul(16))
        .ok_or_else(|| IoError::ShapeMismatch("payload size overflows".into()))?;
    let mut payload = Vec::new();
    r.take(expected as u64 + 1).read_to_end(&mut payload)?;
    if payload.len() < expected {
        return Err(IoError::Truncated {
            expected,
            got: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(IoError::ShapeMismatch(format!(
            "payload longer than the {expected} bytes the header describes"
        )));
    }

    let f64_at = |o: usize| f64::from_le_bytes(payload[o..o + 8].try_into().expect("8 bytes"));
    let mut traces = Vec::with_capacity(h.trace_count);
    for (i, meta) in h.traces.into_iter().enumerate() {
        let base = i * h.points * 16;
        let samples = (0..h.points)
            .map(|k| Complex64::new(f64_at(base + 16 * k), f64_at(base + 16 * k + 8)))
            .collect();
        let mut t = ComplexTrace::new(h.grid, samples)?;
        t.meta = meta;
        traces.push(t);
    }
    let batch = TraceBatch::new(h.grid, traces, h.channel)?;
    Ok((
        batch,
        ArchiveInfo {
            device_fingerprint: h.device_fingerprint,
            campaign_seed: h.campaign_seed,
            extra: h.extra,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(n: usize) -> TraceBatch {
        let g = FrequencyGrid::new(1e9, 2e9, 7).unwrap();
        let traces = (0..n)
            .map(|i| {
                let s = (0..7)
                    .map(|k| Complex64::new(0.1 * i as f64 + 1e-17 * k as f64, -1.0 / (k + 3) as f64))
                    .collect();
                let t = ComplexTrace::new(g, s).unwrap();
                if i % 3 == 0 {
                    t
                } else {
                    t.with_meta(TraceMeta {
                        plaintext: vec![i as u8, 0xff],
                        key: Some(vec![0x93]),
                        averaging: 200,
                        noise_seed: i as u64,
                        ..Default::default()
                    })
                }
            })
            .collect();
        TraceBatch::new(g, traces, Channel::Both).unwrap()
    }

    fn bytes(b: &TraceBatch, info: &ArchiveInfo) -> Vec<u8> {
        let mut v = Vec::new();
        write_archive_to(&mut v, b, info).unwrap();
        v
    }

    #[test]
    fn round_trip_is_exact() {
        let b = batch(10);
        let info = ArchiveInfo {
            device_fingerprint: Some("abcd".into()),
            campaign_seed: Some(7),
            ..Default::default()
        };
        let v = bytes(&b, &info);
        let (back, i2) = read_archive_from(&mut v.as_slice()).unwrap();
        assert_eq!(back, b);
        assert_eq!(i2, info);
        assert_eq!(bytes(&back, &i2), v);
    }

    #[test]
    fn distinct_errors() {
        let b = batch(3);
        let v = bytes(&b, &ArchiveInfo::default());
        let cut = &v[..v.len() - 5];
        assert!(matches!(
            read_archive_from(&mut &cut[..]),
            Err(IoError::Truncated { .. })
        ));
        let mut long = v.clone();
        long.push(0);
        assert!(matches!(
            read_archive_from(&mut long.as_slice()),
            Err(IoError::ShapeMismatch(_))
        ));
        let text = String::from_utf8_lossy(&v).replace("\"schema_version\":1", "\"schema_version\":2");
        assert!(matches!(
            read_archive_from(&mut text.as_bytes()),
            Err(IoError::VersionMismatch { found: 2, supported: 1 })
        ));
        let shape = String::from_utf8_lossy(&v).replace("\"points\":7", "\"points\":6");
        assert!(matches!(
            read_archive_from(&mut shape.as_bytes()),
            Err(IoError::ShapeMismatch(_))
        ));
        assert!(matches!(
            read_archive_from(&mut &b"nope\n"[..]),
            Err(IoError::BadMagic { .. })
        ));
    }

    #[test]
    fn unknown_header_fields_survive() {
        let b = batch(2);
        let v = bytes(&b, &ArchiveInfo::default());
        let s = String::from_utf8_lossy(&v[..v.len() - 2 * 7 * 16]).into_owned();
        let s = s.replacen("{", "{\"operator\":\"lab-3\",\"future\":{\"x\":[1,2]},", 1);
        let mut edited = s.into_bytes();
        edited.extend_from_slice(&v[v.len() - 2 * 7 * 16..]);
        let (back, info) = read_archive_from(&mut edited.as_slice()).unwrap();
        assert_eq!(info.extra["operator"], "lab-3");
        let rewritten = bytes(&back, &info);
        let (_, again) = read_archive_from(&mut rewritten.as_slice()).unwrap();
        assert_eq!(again.extra, info.extra);
    }
}
