// SPDX-License-Identifier: Apache-2.0

//! Push/pop of GVN headers at the border of a GVN domain.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::builtin::{codes, icn, nfv_encap, vpn, ChainTable, ContentTag, NfvError};
use crate::codec::{pad_to_word, push_gvn, GvnCode, GvnFlags, GvnHeader, IpPacket, PacketError, GVN_PROTOCOL};
use crate::routing::{NodeId, Prefix};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error(transparent)]
    Packet(#[from] PacketError),
    #[error(transparent)]
    Nfv(#[from] NfvError),
    #[error("no service chain with spi {0}")]
    UnknownChain(u32),
}

/// How the PL data of a pushed header is built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlTemplate {
    /// Raw bytes under an explicit code, zero padded to a word.
    Raw {
        code: GvnCode,
        data: Vec<u8>,
    },
    Icn(String),
    Vpn(u32),
    /// Encapsulate into the service chain with this spi.
    Nfv(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderTemplate {
    pub flags: GvnFlags,
    pub pl: PlTemplate,
}

impl HeaderTemplate {
    pub fn code(&self) -> GvnCode {
        match &self.pl {
            PlTemplate::Raw { code, .. } => *code,
            PlTemplate::Icn(_) => codes::ICN,
            PlTemplate::Vpn(_) => codes::VPN,
            PlTemplate::Nfv(_) => codes::NFV,
        }
    }

    /// Tags `packet`. NFV templates also rewrite the destination.
    pub fn apply(&self, packet: &IpPacket, chains: &ChainTable) -> Result<IpPacket, TemplateError> {
        let next = packet.protocol();
        let header = match &self.pl {
            PlTemplate::Raw { code, data } => GvnHeader::new(next, *code).with_pl_data(pad_to_word(data.clone())),
            PlTemplate::Icn(name) => icn::icn_header(next, ContentTag::from_name(name)),
            PlTemplate::Vpn(vnid) => vpn::vpn_header(next, *vnid),
            PlTemplate::Nfv(spi) => {
                let chain = chains.get(spi).ok_or(TemplateError::UnknownChain(*spi))?;
                let tagged = nfv_encap(packet, chain)?;
                return Ok(with_flags(tagged, self.flags)?);
            }
        };
        Ok(push_gvn(packet, &header.with_flags(self.flags))?)
    }
}

fn with_flags(packet: IpPacket, flags: GvnFlags) -> Result<IpPacket, PacketError> {
    if flags == GvnFlags::empty() {
        return Ok(packet);
    }
    let mut payload = packet.payload().to_vec();
    payload[2] = flags.0;
    let mut out = packet;
    out.set_payload(payload)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeMatch {
    pub protocol: Option<u8>,
    pub src_prefix: Option<Prefix>,
    pub dst_prefix: Option<Prefix>,
}

impl EdgeMatch {
    pub fn matches(&self, packet: &IpPacket) -> bool {
        self.protocol.is_none_or(|p| packet.protocol() == p)
            && self.src_prefix.is_none_or(|p| p.contains(packet.src()))
            && self.dst_prefix.is_none_or(|p| p.contains(packet.dst()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeRule {
    pub matcher: EdgeMatch,
    pub template: HeaderTemplate,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgePolicy {
    /// First matching rule wins.
    pub ingress: Vec<EdgeRule>,
    /// Neighbors toward which tagged packets leave the domain untagged.
    pub pop_on_egress: BTreeSet<NodeId>,
}

/// Pushes the template of the first matching ingress rule. Tagged packets
/// and packets matching no rule are returned as `None` (unchanged).
pub fn edge_ingress(
    policy: &EdgePolicy,
    packet: &IpPacket,
    chains: &ChainTable,
) -> Result<Option<IpPacket>, TemplateError> {
    if packet.protocol() == GVN_PROTOCOL {
        return Ok(None);
    }
    match policy.ingress.iter().find(|r| r.matcher.matches(packet)) {
        Some(rule) => rule.template.apply(packet, chains).map(Some),
        None => Ok(None),
    }
}
