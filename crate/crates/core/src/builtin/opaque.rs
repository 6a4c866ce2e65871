// SPDX-License-Identifier: Apache-2.0

//! Carriage of foreign service-layer headers as opaque PL data, so many
//! service architectures can share the one IP protocol number.

use thiserror::Error;

use super::codes;
use crate::codec::{pad_to_word, GvnHeader, MAX_PL_DATA_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OpaqueError {
    #[error("opaque payload of {0} octets exceeds 1008")]
    Oversize(usize),
}

/// Wraps `payload` under the demo code, zero padded to a word boundary.
pub fn opaque_mapping_demo(next_header: u8, payload: &[u8]) -> Result<GvnHeader, OpaqueError> {
    if payload.len() > MAX_PL_DATA_LEN {
        return Err(OpaqueError::Oversize(payload.len()));
    }
    Ok(GvnHeader::new(next_header, codes::OPAQUE_DEMO).with_pl_data(pad_to_word(payload.to_vec())))
}
