// SPDX-License-Identifier: Apache-2.0

//! Tagging and un-tagging of IP packets with a GVN header.

use super::header::{GvnHeader, HeaderError};
use super::ip::{IpPacket, PacketError};
use super::GVN_PROTOCOL;

/// How a receiving node sees a packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// Plain IP. `malformed` is set when the protocol said GVN but the
    /// header could not be decoded.
    Legacy {
        protocol: u8,
        malformed: Option<HeaderError>,
    },
    Gvn(GvnHeader),
}

impl Classification {
    pub fn header(&self) -> Option<&GvnHeader> {
        match self {
            Classification::Gvn(h) => Some(h),
            Classification::Legacy { .. } => None,
        }
    }
}

pub fn classify(packet: &IpPacket) -> Classification {
    let protocol = packet.protocol();
    if protocol != GVN_PROTOCOL {
        return Classification::Legacy { protocol, malformed: None };
    }
    match GvnHeader::parse(packet.payload()) {
        Ok(h) => Classification::Gvn(h),
        Err(e) => Classification::Legacy { protocol, malformed: Some(e) },
    }
}

/// Inserts `header` between the IP header and the transport payload.
pub fn push_gvn(packet: &IpPacket, header: &GvnHeader) -> Result<IpPacket, PacketError> {
    let protocol = packet.protocol();
    if protocol == GVN_PROTOCOL {
        return Err(PacketError::AlreadyTagged);
    }
    if header.next_header != protocol {
        return Err(PacketError::NextHeaderMismatch { header: header.next_header, packet: protocol });
    }
    let encoded = header.serialize()?;
    let mut payload = Vec::with_capacity(encoded.len() + packet.payload().len());
    payload.extend_from_slice(&encoded);
    payload.extend_from_slice(packet.payload());

    let mut out = packet.clone();
    out.set_payload(payload)?;
    out.set_protocol(GVN_PROTOCOL);
    Ok(out)
}

/// Removes the GVN header, restoring the encapsulated protocol.
pub fn pop_gvn(packet: &IpPacket) -> Result<(IpPacket, GvnHeader), PacketError> {
    let protocol = packet.protocol();
    if protocol != GVN_PROTOCOL {
        return Err(PacketError::NotTagged(protocol));
    }
    let header = GvnHeader::parse(packet.payload())?;
    let rest = packet.payload()[header.wire_len()..].to_vec();
    let mut out = packet.clone();
    out.set_payload(rest)?;
    out.set_protocol(header.next_header);
    Ok((out, header))
}

/// Re-encodes the GVN header of a tagged packet in place, leaving the
/// transport bytes untouched.
pub fn replace_gvn(packet: &IpPacket, header: &GvnHeader) -> Result<IpPacket, PacketError> {
    let (inner, _) = pop_gvn(packet)?;
    push_gvn(&inner, header)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::GvnCode;

    fn udp() -> IpPacket {
        IpPacket::new_v4([10, 0, 0, 1].into(), [10, 0, 2, 1].into(), 17, 64, vec![0xAB; 12]).unwrap()
    }

    #[test]
    fn push_udp_v4() {
        let p = udp();
        let h = GvnHeader::new(17, GvnCode::from_const(9));
        let t = push_gvn(&p, &h).unwrap();
        assert_eq!(t.protocol(), GVN_PROTOCOL);
        assert_eq!(t.payload().len(), p.payload().len() + 8);
        assert_eq!(&t.payload()[8..], p.payload());
        assert!(t.checksum_valid());
        let bytes = t.to_bytes();
        assert_eq!(u16::from_be_bytes([bytes[2], bytes[3]]) as usize, 20 + 12 + 8);
        assert_eq!(classify(&t), Classification::Gvn(h.clone()));
        assert_eq!(pop_gvn(&t).unwrap(), (p, h));
    }

    #[test]
    fn push_errors() {
        let p = udp();
        let t = push_gvn(&p, &GvnHeader::new(17, GvnCode::from_const(1))).unwrap();
        assert_eq!(push_gvn(&t, &GvnHeader::new(254, GvnCode::from_const(1))), Err(PacketError::AlreadyTagged));
        assert_eq!(
            push_gvn(&p, &GvnHeader::new(6, GvnCode::from_const(1))),
            Err(PacketError::NextHeaderMismatch { header: 6, packet: 17 })
        );
        let big = IpPacket::new_v4([1, 1, 1, 1].into(), [2, 2, 2, 2].into(), 17, 1, vec![0; 65535 - 20 - 4]).unwrap();
        assert!(matches!(
            push_gvn(&big, &GvnHeader::new(17, GvnCode::from_const(1))),
            Err(PacketError::OversizePacket(_))
        ));
    }

    #[test]
    fn pop_errors() {
        let tcp = IpPacket::new_v4([1, 1, 1, 1].into(), [2, 2, 2, 2].into(), 6, 9, vec![1, 2]).unwrap();
        assert_eq!(pop_gvn(&tcp), Err(PacketError::NotTagged(6)));
        let bogus = IpPacket::new_v4([1, 1, 1, 1].into(), [2, 2, 2, 2].into(), GVN_PROTOCOL, 9, vec![0xFF; 8]).unwrap();
        assert_eq!(pop_gvn(&bogus), Err(PacketError::MalformedHeader(HeaderError::ReservedLength)));
    }

    #[test]
    fn classify_cases() {
        let tcp = IpPacket::new_v4([1, 1, 1, 1].into(), [2, 2, 2, 2].into(), 6, 9, vec![]).unwrap();
        assert_eq!(classify(&tcp), Classification::Legacy { protocol: 6, malformed: None });
        let short =
            IpPacket::new_v4([1, 1, 1, 1].into(), [2, 2, 2, 2].into(), GVN_PROTOCOL, 9, vec![2, 17, 0, 0]).unwrap();
        assert_eq!(
            classify(&short),
            Classification::Legacy {
                protocol: GVN_PROTOCOL,
                malformed: Some(HeaderError::TruncatedHeader { needed: 8, available: 4 })
            }
        );
    }

    #[test]
    fn push_pop_v6() {
        let p = IpPacket::new_v6("fd00::1".parse().unwrap(), "fd00::2".parse().unwrap(), 17, 32, vec![5; 30]).unwrap();
        let h = GvnHeader::new(17, GvnCode::MAX).with_pl_data(vec![1, 2, 3, 4]);
        let t = push_gvn(&p, &h).unwrap();
        let bytes = t.to_bytes();
        assert_eq!(bytes[6], GVN_PROTOCOL);
        assert_eq!(u16::from_be_bytes([bytes[4], bytes[5]]), 30 + 12);
        assert_eq!(pop_gvn(&t).unwrap(), (p, h));
    }

    #[test]
    fn replace_keeps_transport() {
        let p = udp();
        let t = push_gvn(&p, &GvnHeader::new(17, GvnCode::from_const(1)).with_pl_data(vec![0; 4])).unwrap();
        let h2 = GvnHeader::new(17, GvnCode::from_const(1)).with_pl_data(vec![1; 8]);
        let r = replace_gvn(&t, &h2).unwrap();
        assert_eq!(&r.payload()[16..], p.payload());
        assert_eq!(classify(&r).header(), Some(&h2));
    }
}
