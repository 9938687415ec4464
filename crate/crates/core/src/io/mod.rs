//! File formats: the native trace archive, template files, Touchstone
//! `.s1p` and VNA CSV exports.

mod archive;
mod templates;
mod touchstone;
mod vna_csv;

pub use archive::{
    read_archive, read_archive_from, write_archive, write_archive_to, ArchiveHeader, ArchiveInfo,
    ARCHIVE_MAGIC, ARCHIVE_SCHEMA_VERSION,
};
pub use templates::{
    read_templates, read_templates_from, write_templates, write_templates_to, TEMPLATE_MAGIC,
    TEMPLATE_SCHEMA_VERSION,
};
pub use touchstone::{
    parse_touchstone, parse_touchstone_sweep, write_touchstone, FrequencyUnit, TouchstoneError,
    TouchstoneFormat, TouchstoneSweep,
};
pub use vna_csv::parse_vna_csv;

use std::io::BufRead;

use thiserror::Error;

use crate::trace::TraceError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a {expected} file (first line {found:?})")]
    BadMagic { expected: &'static str, found: String },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("schema version {found} is not supported (this build reads version {supported})")]
    VersionMismatch { found: u32, supported: u32 },
    #[error("header and payload disagree: {0}")]
    ShapeMismatch(String),
    #[error("payload truncated: expected {expected} bytes, found {got}")]
    Truncated { expected: usize, got: usize },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Touchstone(#[from] TouchstoneError),
    #[error("CSV import: {0}")]
    Csv(String),
}

/// Read one `\n`-terminated line, without the terminator.
pub(crate) fn read_line<R: BufRead>(r: &mut R, max: usize) -> Result<Option<String>, IoError> {
    let mut buf = Vec::new();
    let n = std::io::Read::take(&mut *r, max as u64).read_until(b'\n', &mut buf)?;
    if n == 0 {
        return Ok(None);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    String::from_utf8(buf)
        .map(Some)
        .map_err(|_| IoError::Header("header is not UTF-8".into()))
}

pub(crate) fn expect_magic<R: BufRead>(r: &mut R, magic: &'static str) -> Result<(), IoError> {
    match read_line(r, 64)? {
        Some(l) if l == magic => Ok(()),
        other => Err(IoError::BadMagic {
            expected: magic,
            found: other.unwrap_or_default(),
        }),
    }
}

/// Header JSON may be large (per-trace metadata), but not unbounded.
pub(crate) const MAX_HEADER_BYTES: usize = 1 << 30;
