// SPDX-License-Identifier: Apache-2.0

//! Match/action rules over the GVN header, as an SDN controller would
//! install them on GVN-capable switches.

use std::net::IpAddr;

use crate::codec::{classify, GvnCode, IpPacket};
use crate::routing::Prefix;

use super::edge::HeaderTemplate;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowMatch {
    pub code: Option<GvnCode>,
    /// `(offset, bytes)` compared against `pl_data`.
    pub pl_prefix: Option<(usize, Vec<u8>)>,
    pub dst_prefix: Option<Prefix>,
}

impl FlowMatch {
    /// Every present field must match. GVN fields never match untagged
    /// packets.
    pub fn matches(&self, packet: &IpPacket) -> bool {
        if let Some(prefix) = &self.dst_prefix {
            if !prefix.contains(packet.dst()) {
                return false;
            }
        }
        if self.code.is_none() && self.pl_prefix.is_none() {
            return true;
        }
        let classification = classify(packet);
        let Some(header) = classification.header() else {
            return false;
        };
        if let Some(code) = self.code {
            if header.code != code {
                return false;
            }
        }
        if let Some((offset, bytes)) = &self.pl_prefix {
            match header.pl_data.get(*offset..offset + bytes.len()) {
                Some(window) if window == bytes.as_slice() => {}
                _ => return false,
            }
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowAction {
    ForwardByIp,
    ForwardTo(IpAddr),
    Deliver,
    Drop,
    Push(HeaderTemplate),
    Pop,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowRule {
    pub priority: u32,
    pub matcher: FlowMatch,
    pub action: FlowAction,
}

/// Highest priority matching rule; the earliest installed wins a tie.
pub fn flow_match<'a>(rules: &'a [FlowRule], packet: &IpPacket) -> Option<&'a FlowRule> {
    rules.iter().filter(|r| r.matcher.matches(packet)).fold(None, |best: Option<&FlowRule>, r| match best {
        Some(b) if b.priority >= r.priority => Some(b),
        _ => Some(r),
    })
}
