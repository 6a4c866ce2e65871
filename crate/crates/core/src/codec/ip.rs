// SPDX-License-Identifier: Apache-2.0

//! Minimal IPv4/IPv6 datagram model.
//!
//! The network-layer header is kept as raw bytes so that options, flow
//! labels and every other field we don't touch survive mangling unchanged.
//! Only the fields GVN needs are exposed through accessors; every setter
//! repairs the length fields and, for IPv4, the header checksum.

use std::fmt;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use thiserror::Error;

use super::header::HeaderError;

pub const IPV4_MIN_HEADER_LEN: usize = 20;
pub const IPV6_HEADER_LEN: usize = 40;
/// Upper bound for IPv4 Total Length and IPv6 Payload Length.
pub const MAX_IP_LEN: usize = 65535;

const IPV4_CHECKSUM_OFFSET: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("truncated IP packet: need {needed} octets, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("unsupported IP version {0}")]
    BadVersion(u8),
    #[error("invalid IPv4 header length {0}")]
    BadIhl(u8),
    #[error("IP length field {field} inconsistent with {available} available octets")]
    LengthMismatch { field: usize, available: usize },
    #[error("address family does not match IPv{0} packet")]
    AddressFamilyMismatch(u8),
    #[error("packet of {0} octets exceeds the IP length limit")]
    OversizePacket(usize),
    #[error("IPv4 header of {0} octets cannot be checksummed (need >= 20, multiple of 4)")]
    BadLength(usize),
    #[error("packet already carries a GVN header")]
    AlreadyTagged,
    #[error("GVN next header {header} does not match packet protocol {packet}")]
    NextHeaderMismatch { header: u8, packet: u8 },
    #[error("packet is not GVN tagged (protocol {0})")]
    NotTagged(u8),
    #[error("malformed GVN header: {0}")]
    MalformedHeader(#[from] HeaderError),
}

/// Internet checksum of an IPv4 header. The checksum field itself is
/// treated as zero.
pub fn ipv4_header_checksum(header: &[u8]) -> Result<u16, PacketError> {
    if header.len() < IPV4_MIN_HEADER_LEN || !header.len().is_multiple_of(4) {
        return Err(PacketError::BadLength(header.len()));
    }
    let sum: u32 = header
        .chunks_exact(2)
        .enumerate()
        .filter(|(i, _)| *i != IPV4_CHECKSUM_OFFSET / 2)
        .map(|(_, w)| u32::from(u16::from_be_bytes([w[0], w[1]])))
        .sum();
    Ok(!fold(sum))
}

/// True when the one's-complement sum over the whole header, checksum
/// included, is 0xFFFF.
pub fn ipv4_checksum_valid(header: &[u8]) -> bool {
    if header.len() < IPV4_MIN_HEADER_LEN || !header.len().is_multiple_of(4) {
        return false;
    }
    let sum: u32 = header.chunks_exact(2).map(|w| u32::from(u16::from_be_bytes([w[0], w[1]]))).sum();
    fold(sum) == 0xFFFF
}

fn fold(mut sum: u32) -> u16 {
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    sum as u16
}

/// An IP datagram: raw network-layer header plus payload (everything after
/// the header, which for a GVN packet starts with the GVN header).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IpPacket {
    header: Vec<u8>,
    payload: Vec<u8>,
}

impl IpPacket {
    pub fn new_v4(src: Ipv4Addr, dst: Ipv4Addr, protocol: u8, ttl: u8, payload: Vec<u8>) -> Result<Self, PacketError> {
        let mut header = vec![0u8; IPV4_MIN_HEADER_LEN];
        header[0] = 0x45;
        // DF set, no fragmentation.
        header[6] = 0x40;
        header[8] = ttl;
        header[9] = protocol;
        header[12..16].copy_from_slice(&src.octets());
        header[16..20].copy_from_slice(&dst.octets());
        let mut p = IpPacket { header, payload: Vec::new() };
        p.set_payload(payload)?;
        Ok(p)
    }

    pub fn new_v6(
        src: Ipv6Addr,
        dst: Ipv6Addr,
        next_header: u8,
        hop_limit: u8,
        payload: Vec<u8>,
    ) -> Result<Self, PacketError> {
        let mut header = vec![0u8; IPV6_HEADER_LEN];
        header[0] = 0x60;
        header[6] = next_header;
        header[7] = hop_limit;
        header[8..24].copy_from_slice(&src.octets());
        header[24..40].copy_from_slice(&dst.octets());
        let mut p = IpPacket { header, payload: Vec::new() };
        p.set_payload(payload)?;
        Ok(p)
    }

    pub fn new(src: IpAddr, dst: IpAddr, protocol: u8, ttl: u8, payload: Vec<u8>) -> Result<Self, PacketError> {
        match (src, dst) {
            (IpAddr::V4(s), IpAddr::V4(d)) => Self::new_v4(s, d, protocol, ttl, payload),
            (IpAddr::V6(s), IpAddr::V6(d)) => Self::new_v6(s, d, protocol, ttl, payload),
            (IpAddr::V4(_), IpAddr::V6(_)) => Err(PacketError::AddressFamilyMismatch(4)),
            (IpAddr::V6(_), IpAddr::V4(_)) => Err(PacketError::AddressFamilyMismatch(6)),
        }
    }

    /// Parses a datagram. Octets past the IP length field (link padding)
    /// are discarded. The IPv4 checksum is not verified here; see
    /// [`IpPacket::checksum_valid`].
    pub fn parse(bytes: &[u8]) -> Result<Self, PacketError> {
        let Some(&first) = bytes.first() else {
            return Err(PacketError::Truncated { needed: IPV4_MIN_HEADER_LEN, available: 0 });
        };
        match first >> 4 {
            4 => {
                if bytes.len() < IPV4_MIN_HEADER_LEN {
                    return Err(PacketError::Truncated { needed: IPV4_MIN_HEADER_LEN, available: bytes.len() });
                }
                let ihl = first & 0x0F;
                if ihl < 5 {
                    return Err(PacketError::BadIhl(ihl));
                }
                let header_len = 4 * ihl as usize;
                if bytes.len() < header_len {
                    return Err(PacketError::Truncated { needed: header_len, available: bytes.len() });
                }
                let total = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
                if total < header_len || total > bytes.len() {
                    return Err(PacketError::LengthMismatch { field: total, available: bytes.len() });
                }
                Ok(IpPacket { header: bytes[..header_len].to_vec(), payload: bytes[header_len..total].to_vec() })
            }
            6 => {
                if bytes.len() < IPV6_HEADER_LEN {
                    return Err(PacketError::Truncated { needed: IPV6_HEADER_LEN, available: bytes.len() });
                }
                let payload_len = u16::from_be_bytes([bytes[4], bytes[5]]) as usize;
                if IPV6_HEADER_LEN + payload_len > bytes.len() {
                    return Err(PacketError::LengthMismatch {
                        field: payload_len,
                        available: bytes.len() - IPV6_HEADER_LEN,
                    });
                }
                Ok(IpPacket {
                    header: bytes[..IPV6_HEADER_LEN].to_vec(),
                    payload: bytes[IPV6_HEADER_LEN..IPV6_HEADER_LEN + payload_len].to_vec(),
                })
            }
            v => Err(PacketError::BadVersion(v)),
        }
    }

    pub fn version(&self) -> u8 {
        self.header[0] >> 4
    }

    pub fn is_v4(&self) -> bool {
        self.version() == 4
    }

    pub fn src(&self) -> IpAddr {
        if self.is_v4() {
            IpAddr::V4(v4_at(&self.header, 12))
        } else {
            IpAddr::V6(v6_at(&self.header, 8))
        }
    }

    pub fn dst(&self) -> IpAddr {
        if self.is_v4() {
            IpAddr::V4(v4_at(&self.header, 16))
        } else {
            IpAddr::V6(v6_at(&self.header, 24))
        }
    }

    /// IPv4 Protocol, or the IPv6 Next Header of the fixed header.
    pub fn protocol(&self) -> u8 {
        self.header[self.protocol_offset()]
    }

    /// IPv4 TTL or IPv6 Hop Limit.
    pub fn ttl(&self) -> u8 {
        self.header[self.ttl_offset()]
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn header_bytes(&self) -> &[u8] {
        &self.header
    }

    pub fn total_len(&self) -> usize {
        self.header.len() + self.payload.len()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.total_len());
        out.extend_from_slice(&self.header);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Always true for IPv6, which has no header checksum.
    pub fn checksum_valid(&self) -> bool {
        !self.is_v4() || ipv4_checksum_valid(&self.header)
    }

    pub fn set_dst(&mut self, dst: IpAddr) -> Result<(), PacketError> {
        match (dst, self.is_v4()) {
            (IpAddr::V4(a), true) => self.header[16..20].copy_from_slice(&a.octets()),
            (IpAddr::V6(a), false) => self.header[24..40].copy_from_slice(&a.octets()),
            _ => return Err(PacketError::AddressFamilyMismatch(self.version())),
        }
        self.refresh_checksum();
        Ok(())
    }

    pub fn set_protocol(&mut self, protocol: u8) {
        let off = self.protocol_offset();
        self.header[off] = protocol;
        self.refresh_checksum();
    }

    pub fn set_ttl(&mut self, ttl: u8) {
        let off = self.ttl_offset();
        self.header[off] = ttl;
        self.refresh_checksum();
    }

    /// Replaces the payload and repairs the length field.
    pub fn set_payload(&mut self, payload: Vec<u8>) -> Result<(), PacketError> {
        let len_field = if self.is_v4() { self.header.len() + payload.len() } else { payload.len() };
        if len_field > MAX_IP_LEN {
            return Err(PacketError::OversizePacket(len_field));
        }
        let len = (len_field as u16).to_be_bytes();
        if self.is_v4() {
            self.header[2..4].copy_from_slice(&len);
        } else {
            self.header[4..6].copy_from_slice(&len);
        }
        self.payload = payload;
        self.refresh_checksum();
        Ok(())
    }

    fn protocol_offset(&self) -> usize {
        if self.is_v4() {
            9
        } else {
            6
        }
    }

    fn ttl_offset(&self) -> usize {
        if self.is_v4() {
            8
        } else {
            7
        }
    }

    fn refresh_checksum(&mut self) {
        if !self.is_v4() {
            return;
        }
        // Header length is validated on construction, so this cannot fail.
        let sum = ipv4_header_checksum(&self.header).unwrap_or(0);
        self.header[IPV4_CHECKSUM_OFFSET..IPV4_CHECKSUM_OFFSET + 2].copy_from_slice(&sum.to_be_bytes());
    }
}

impl fmt::Debug for IpPacket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IpPacket")
            .field("version", &self.version())
            .field("src", &self.src())
            .field("dst", &self.dst())
            .field("protocol", &self.protocol())
            .field("ttl", &self.ttl())
            .field("payload_len", &self.payload.len())
            .finish()
    }
}

fn v4_at(b: &[u8], off: usize) -> Ipv4Addr {
    Ipv4Addr::new(b[off], b[off + 1], b[off + 2], b[off + 3])
}

fn v6_at(b: &[u8], off: usize) -> Ipv6Addr {
    let mut o = [0u8; 16];
    o.copy_from_slice(&b[off..off + 16]);
    Ipv6Addr::from(o)
}
