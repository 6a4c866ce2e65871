// SPDX-License-Identifier: Apache-2.0

//! The GVN header.
//!
//! ```text
//!  0                   1                   2                   3
//!  0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1 2 3 4 5 6 7 8 9 0 1
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |    Length     |  Next Header  |     Flags     |               |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+               +
//! |                       GVN Code (40 bits)                      |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! |                     PL data (variable length)                 |
//! +-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+-+
//! ```
//!
//! Length counts 4-octet words, including the fixed part.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Size of the fixed part of the header (length, next header, flags, code).
pub const FIXED_LEN: usize = 8;
/// Smallest valid value of the length field.
pub const MIN_LENGTH_UNITS: u8 = 2;
/// Largest valid value of the length field. 255 is reserved.
pub const MAX_LENGTH_UNITS: u8 = 254;
/// Reserved value of the length field.
pub const RESERVED_LENGTH_UNITS: u8 = 255;
/// Largest serialized header, in octets.
pub const MAX_HEADER_LEN: usize = 4 * MAX_LENGTH_UNITS as usize;
/// Largest PL-specific payload, in octets.
pub const MAX_PL_DATA_LEN: usize = MAX_HEADER_LEN - FIXED_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeaderError {
    #[error("truncated GVN header: need {needed} octets, have {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("GVN length value 255 is reserved")]
    ReservedLength,
    #[error("invalid GVN length value {0} (minimum is 2)")]
    InvalidLength(u8),
    #[error("invalid GVN header: {0}")]
    InvalidHeader(&'static str),
    #[error("GVN code {0:#x} does not fit in 40 bits")]
    CodeOutOfRange(u64),
}

/// 40-bit identifier selecting the processing logic for a header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "u64", into = "u64")]
pub struct GvnCode(u64);

impl GvnCode {
    pub const MAX: GvnCode = GvnCode((1 << 40) - 1);
    /// Unset sentinel; never valid for registration.
    pub const RESERVED: GvnCode = GvnCode(0);

    pub const fn new(value: u64) -> Result<Self, HeaderError> {
        if value > Self::MAX.0 {
            return Err(HeaderError::CodeOutOfRange(value));
        }
        Ok(GvnCode(value))
    }

    /// Panics if `value` exceeds 40 bits. Meant for constants.
    pub const fn from_const(value: u64) -> Self {
        match Self::new(value) {
            Ok(code) => code,
            Err(_) => panic!("GVN code out of range"),
        }
    }

    pub const fn value(self) -> u64 {
        self.0
    }

    pub const fn is_reserved(self) -> bool {
        self.0 == 0
    }

    pub fn to_bytes(self) -> [u8; 5] {
        let b = self.0.to_be_bytes();
        [b[3], b[4], b[5], b[6], b[7]]
    }

    pub fn from_bytes(bytes: [u8; 5]) -> Self {
        let mut b = [0u8; 8];
        b[3..].copy_from_slice(&bytes);
        GvnCode(u64::from_be_bytes(b))
    }
}

impl TryFrom<u64> for GvnCode {
    type Error = HeaderError;

    fn try_from(value: u64) -> Result<Self, Self::Error> {
        GvnCode::new(value)
    }
}

impl From<GvnCode> for u64 {
    fn from(code: GvnCode) -> u64 {
        code.0
    }
}

impl fmt::Display for GvnCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{:010X}", self.0)
    }
}

/// Header flags octet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GvnFlags(pub u8);

impl GvnFlags {
    /// A GVN-capable node that does not know the code drops the packet
    /// instead of falling back to IP forwarding.
    pub const DROP_ON_UNKNOWN: u8 = 0x80;

    pub const fn empty() -> Self {
        GvnFlags(0)
    }

    pub const fn drop_on_unknown(self) -> bool {
        self.0 & Self::DROP_ON_UNKNOWN != 0
    }

    pub const fn with_drop_on_unknown(self, set: bool) -> Self {
        if set {
            GvnFlags(self.0 | Self::DROP_ON_UNKNOWN)
        } else {
            GvnFlags(self.0 & !Self::DROP_ON_UNKNOWN)
        }
    }
}

/// A decoded GVN header. The length field is derived from `pl_data`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GvnHeader {
    pub next_header: u8,
    pub flags: GvnFlags,
    pub code: GvnCode,
    pub pl_data: Vec<u8>,
}

impl GvnHeader {
    pub fn new(next_header: u8, code: GvnCode) -> Self {
        GvnHeader { next_header, flags: GvnFlags::empty(), code, pl_data: Vec::new() }
    }

    pub fn with_flags(mut self, flags: GvnFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_pl_data(mut self, pl_data: Vec<u8>) -> Self {
        self.pl_data = pl_data;
        self
    }

    /// Serialized length in octets. Only meaningful for valid headers.
    pub fn wire_len(&self) -> usize {
        FIXED_LEN + self.pl_data.len()
    }

    /// Value of the length field, or an error if `pl_data` cannot be encoded.
    pub fn length_units(&self) -> Result<u8, HeaderError> {
        self.validate()?;
        Ok((self.wire_len() / 4) as u8)
    }

    pub fn validate(&self) -> Result<(), HeaderError> {
        if !self.pl_data.len().is_multiple_of(4) {
            return Err(HeaderError::InvalidHeader("pl_data length is not a multiple of 4"));
        }
        if self.pl_data.len() > MAX_PL_DATA_LEN {
            return Err(HeaderError::InvalidHeader("pl_data exceeds 1008 octets"));
        }
        Ok(())
    }

    pub fn serialize(&self) -> Result<Vec<u8>, HeaderError> {
        let units = self.length_units()?;
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(units);
        out.push(self.next_header);
        out.push(self.flags.0);
        out.extend_from_slice(&self.code.to_bytes());
        out.extend_from_slice(&self.pl_data);
        Ok(out)
    }

    /// Decodes the header at the start of `bytes`. Octets past the header
    /// are ignored; use [`GvnHeader::wire_len`] to find where it ends.
    pub fn parse(bytes: &[u8]) -> Result<Self, HeaderError> {
        let Some(&units) = bytes.first() else {
            return Err(HeaderError::TruncatedHeader { needed: FIXED_LEN, available: 0 });
        };
        if units == RESERVED_LENGTH_UNITS {
            return Err(HeaderError::ReservedLength);
        }
        if units < MIN_LENGTH_UNITS {
            return Err(HeaderError::InvalidLength(units));
        }
        let needed = 4 * units as usize;
        if bytes.len() < needed {
            return Err(HeaderError::TruncatedHeader { needed, available: bytes.len() });
        }
        let mut code = [0u8; 5];
        code.copy_from_slice(&bytes[3..8]);
        Ok(GvnHeader {
            next_header: bytes[1],
            flags: GvnFlags(bytes[2]),
            code: GvnCode::from_bytes(code),
            pl_data: bytes[FIXED_LEN..needed].to_vec(),
        })
    }
}

pub fn parse_gvn(bytes: &[u8]) -> Result<GvnHeader, HeaderError> {
    GvnHeader::parse(bytes)
}

pub fn serialize_gvn(header: &GvnHeader) -> Result<Vec<u8>, HeaderError> {
    header.serialize()
}
