// SPDX-License-Identifier: Apache-2.0

//! Wire encoding of the GVN header and its carriage over IPv4/IPv6.

mod header;
mod ip;
mod mangle;

pub use header::{
    parse_gvn, serialize_gvn, GvnCode, GvnFlags, GvnHeader, HeaderError, FIXED_LEN, MAX_HEADER_LEN, MAX_LENGTH_UNITS,
    MAX_PL_DATA_LEN, MIN_LENGTH_UNITS, RESERVED_LENGTH_UNITS,
};
pub use ip::{
    ipv4_checksum_valid, ipv4_header_checksum, IpPacket, PacketError, IPV4_MIN_HEADER_LEN, IPV6_HEADER_LEN, MAX_IP_LEN,
};
pub use mangle::{classify, pop_gvn, push_gvn, replace_gvn, Classification};

/// IP protocol number carrying GVN (experimental range).
pub const GVN_PROTOCOL: u8 = 254;

/// Pads `data` with trailing zero octets to a 4-octet multiple.
pub fn pad_to_word(mut data: Vec<u8>) -> Vec<u8> {
    let rem = data.len() % 4;
    if rem != 0 {
        data.resize(data.len() + 4 - rem, 0);
    }
    data
}
