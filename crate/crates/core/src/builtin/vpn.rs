// SPDX-License-Identifier: Apache-2.0

//! Virtual network separation keyed by a 32-bit network id.
//!
//! PL data layout: `[vnid:4][zero:4]`.

use std::collections::BTreeSet;

use super::{codes, deliver_inner};
use crate::codec::{classify, push_gvn, GvnHeader, IpPacket, PacketError};
use crate::pl::{DropReason, NodeContext, PlAction, ProcessingLogic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VpnData {
    pub vnid: u32,
}

impl VpnData {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = self.vnid.to_be_bytes().to_vec();
        out.extend_from_slice(&[0; 4]);
        out
    }

    pub fn decode(data: &[u8]) -> Option<Self> {
        if data.len() != 8 {
            return None;
        }
        Some(VpnData { vnid: u32::from_be_bytes([data[0], data[1], data[2], data[3]]) })
    }
}

pub fn vpn_header(next_header: u8, vnid: u32) -> GvnHeader {
    GvnHeader::new(next_header, codes::VPN).with_pl_data(VpnData { vnid }.encode())
}

pub fn vpn_tag(packet: &IpPacket, vnid: u32) -> Result<IpPacket, PacketError> {
    push_gvn(packet, &vpn_header(packet.protocol(), vnid))
}

pub fn vpn_check(packet: &IpPacket, _ctx: &NodeContext<'_>, allowed: &BTreeSet<u32>) -> PlAction {
    let vnid = classify(packet).header().and_then(|h| VpnData::decode(&h.pl_data));
    match vnid {
        Some(d) if allowed.contains(&d.vnid) => PlAction::ForwardByIp,
        _ => PlAction::Drop(DropReason::VpnViolation),
    }
}

#[derive(Debug, Clone, Default)]
pub struct VpnPl {
    pub allowed: BTreeSet<u32>,
}

impl VpnPl {
    pub fn new(allowed: BTreeSet<u32>) -> Self {
        VpnPl { allowed }
    }
}

impl ProcessingLogic for VpnPl {
    fn process(&self, header: &GvnHeader, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
        match vpn_check(packet, ctx, &self.allowed) {
            PlAction::ForwardByIp if ctx.is_local(packet.dst()) => deliver_inner(header, ctx),
            action => action,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        assert_eq!(VpnData { vnid: 0x01020304 }.encode(), vec![1, 2, 3, 4, 0, 0, 0, 0]);
        assert_eq!(VpnData::decode(&[0, 0, 0, 10, 0, 0, 0, 0]), Some(VpnData { vnid: 10 }));
        assert_eq!(VpnData::decode(&[0, 0, 0, 10]), None);
    }
}
