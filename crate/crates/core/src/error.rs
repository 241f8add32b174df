use std::io;

use thiserror::Error;

/// Errors produced while building, querying or (de)serializing an index.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("unexpected end of input")]
    Truncated,

    #[error("bad magic number")]
    BadMagic,

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point {index} lies outside the {side}-wide cube: ({x}, {y}, {z})")]
    CoordinateOutOfCube {
        index: usize,
        x: u32,
        y: u32,
        z: u32,
        side: u64,
    },

    #[error("point {index}: {attribute} value {value} does not fit in {bits} bits")]
    AttributeOutOfRange {
        index: usize,
        attribute: &'static str,
        value: u64,
        bits: u32,
    },

    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("not a LAS file (bad signature)")]
    BadLasSignature,

    #[error("unsupported point data record format {0} (only format 0 is supported)")]
    UnsupportedPointFormat(u8),

    #[error("point record length {0} is shorter than the 20 bytes of format 0")]
    RecordTooShort(u16),

    #[error("point data truncated: expected {expected} records, found {found}")]
    TruncatedPoints { expected: u64, found: u64 },

    #[error("malformed LAS header: {0}")]
    BadLasHeader(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Maps `UnexpectedEof` to [`Error::Truncated`] so callers see a uniform error.
pub(crate) fn read_err(e: io::Error) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Truncated
    } else {
        Error::Io(e)
    }
}
