// SPDX-License-Identifier: Apache-2.0

//! Content tagging: a fixed-length tag naming a content object, used by
//! GVN nodes to route on content identity instead of the IP destination.
//!
//! PL data layout: `[tag:8]`.

use std::collections::BTreeMap;
use std::fmt;
use std::net::IpAddr;

use sha2::{Digest, Sha256};

use super::{codes, deliver_inner};
use crate::codec::{classify, push_gvn, GvnHeader, IpPacket, PacketError};
use crate::pl::{DropReason, NodeContext, PlAction, ProcessingLogic};

pub const TAG_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentTag(pub [u8; TAG_LEN]);

impl ContentTag {
    /// First 8 octets of SHA-256 over the UTF-8 name.
    pub fn from_name(name: &str) -> Self {
        let digest = Sha256::digest(name.as_bytes());
        let mut tag = [0u8; TAG_LEN];
        tag.copy_from_slice(&digest[..TAG_LEN]);
        ContentTag(tag)
    }

    pub fn from_pl_data(data: &[u8]) -> Option<Self> {
        let bytes: [u8; TAG_LEN] = data.get(..TAG_LEN)?.try_into().ok()?;
        Some(ContentTag(bytes))
    }
}

impl fmt::Display for ContentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

pub type TagTable = BTreeMap<ContentTag, IpAddr>;

pub fn icn_header(next_header: u8, tag: ContentTag) -> GvnHeader {
    GvnHeader::new(next_header, codes::ICN).with_pl_data(tag.0.to_vec())
}

pub fn icn_tag(packet: &IpPacket, content_name: &str) -> Result<IpPacket, PacketError> {
    push_gvn(packet, &icn_header(packet.protocol(), ContentTag::from_name(content_name)))
}

/// Forwards toward the hop mapped for the packet's tag, or by IP when the
/// tag is unknown here.
pub fn icn_route(packet: &IpPacket, _ctx: &NodeContext<'_>, tags: &TagTable) -> PlAction {
    let tag = classify(packet).header().and_then(|h| ContentTag::from_pl_data(&h.pl_data));
    match tag.and_then(|t| tags.get(&t)) {
        Some(&hop) => PlAction::ForwardTo(hop),
        None => PlAction::ForwardByIp,
    }
}

#[derive(Debug, Clone, Default)]
pub struct IcnPl {
    pub tags: TagTable,
}

impl IcnPl {
    pub fn new(tags: TagTable) -> Self {
        IcnPl { tags }
    }
}

impl ProcessingLogic for IcnPl {
    fn process(&self, header: &GvnHeader, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
        if ContentTag::from_pl_data(&header.pl_data).is_none() {
            return PlAction::Drop(DropReason::PlError);
        }
        if ctx.is_local(packet.dst()) {
            return deliver_inner(header, ctx);
        }
        match icn_route(packet, ctx, &self.tags) {
            // The content is held here.
            PlAction::ForwardTo(hop) if ctx.is_local(hop) => deliver_inner(header, ctx),
            action => action,
        }
    }
}
