// SPDX-License-Identifier: Apache-2.0

//! Service function chaining by destination rewrite.
//!
//! On entry the packet destination is saved in the GVN header and replaced
//! by the address of the first function. Each function decrements the
//! service index and points the packet at the next function; the last one
//! restores the saved destination and pops the header, so the packet leaves
//! the chain exactly as it entered.
//!
//! PL data layout (big-endian):
//!
//! ```text
//! [version:1][spi:3][si:1][family:1][reserved:2][original_dst:4|16]
//! ```

use std::collections::BTreeMap;
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};
use std::sync::Arc;

use thiserror::Error;

use super::codes;
use crate::codec::{classify, pop_gvn, push_gvn, replace_gvn, GvnHeader, IpPacket, PacketError, GVN_PROTOCOL};
use crate::pl::{DropReason, NodeContext, PlAction, ProcessingLogic};
use crate::routing::NodeId;

pub const PL_VERSION: u8 = 1;
pub const MAX_SPI: u32 = (1 << 24) - 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NfvError {
    #[error("service chain has no functions")]
    EmptyChain,
    #[error("packet already carries a GVN header")]
    AlreadyTagged,
    #[error("service path id {0} does not fit in 24 bits")]
    SpiOutOfRange(u32),
    #[error("service chain of {0} functions exceeds the 8-bit service index")]
    ChainTooLong(usize),
    #[error("function address family does not match the packet")]
    AddressFamily,
    #[error("malformed NFV chain data: {0}")]
    BadPlData(&'static str),
    #[error(transparent)]
    Packet(#[from] PacketError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NfvChainData {
    pub spi: u32,
    /// Functions still to traverse.
    pub si: u8,
    pub original_dst: IpAddr,
}

impl NfvChainData {
    pub fn encode(&self) -> Vec<u8> {
        let spi = self.spi.to_be_bytes();
        let mut out = vec![PL_VERSION, spi[1], spi[2], spi[3], self.si];
        match self.original_dst {
            IpAddr::V4(a) => {
                out.extend_from_slice(&[4, 0, 0]);
                out.extend_from_slice(&a.octets());
            }
            IpAddr::V6(a) => {
                out.extend_from_slice(&[6, 0, 0]);
                out.extend_from_slice(&a.octets());
            }
        }
        out
    }

    pub fn decode(data: &[u8]) -> Result<Self, NfvError> {
        if data.len() < 8 {
            return Err(NfvError::BadPlData("shorter than 8 octets"));
        }
        if data[0] != PL_VERSION {
            return Err(NfvError::BadPlData("unsupported version"));
        }
        let spi = u32::from_be_bytes([0, data[1], data[2], data[3]]);
        let si = data[4];
        let original_dst = match (data[5], data.len()) {
            (4, n) if n >= 12 => IpAddr::V4(Ipv4Addr::new(data[8], data[9], data[10], data[11])),
            (6, n) if n >= 24 => {
                let mut o = [0u8; 16];
                o.copy_from_slice(&data[8..24]);
                IpAddr::V6(Ipv6Addr::from(o))
            }
            (4 | 6, _) => return Err(NfvError::BadPlData("truncated original destination")),
            _ => return Err(NfvError::BadPlData("unknown address family")),
        };
        Ok(NfvChainData { spi, si, original_dst })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainHop {
    pub address: IpAddr,
    pub node: NodeId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceChain {
    pub spi: u32,
    pub functions: Vec<ChainHop>,
}

impl ServiceChain {
    pub fn new(spi: u32, functions: Vec<ChainHop>) -> Self {
        ServiceChain { spi, functions }
    }
}

pub type ChainTable = BTreeMap<u32, ServiceChain>;

/// Tags `packet` for `chain` and steers it to the first function.
pub fn nfv_encap(packet: &IpPacket, chain: &ServiceChain) -> Result<IpPacket, NfvError> {
    if packet.protocol() == GVN_PROTOCOL {
        return Err(NfvError::AlreadyTagged);
    }
    let first = chain.functions.first().ok_or(NfvError::EmptyChain)?;
    if chain.spi > MAX_SPI {
        return Err(NfvError::SpiOutOfRange(chain.spi));
    }
    let si = u8::try_from(chain.functions.len()).map_err(|_| NfvError::ChainTooLong(chain.functions.len()))?;
    let data = NfvChainData { spi: chain.spi, si, original_dst: packet.dst() };
    let header = GvnHeader::new(packet.protocol(), codes::NFV).with_pl_data(data.encode());

    let mut rewritten = packet.clone();
    rewritten.set_dst(first.address).map_err(|_| NfvError::AddressFamily)?;
    Ok(push_gvn(&rewritten, &header)?)
}

/// One function traversal. Function processing itself is the identity.
pub fn nfv_step(packet: &IpPacket, ctx: &NodeContext<'_>, chains: &ChainTable) -> PlAction {
    let Some(header) = classify(packet).header().cloned() else {
        return PlAction::Drop(DropReason::PlError);
    };
    let Ok(data) = NfvChainData::decode(&header.pl_data) else {
        return PlAction::Drop(DropReason::PlError);
    };
    let Some(chain) = chains.get(&data.spi) else {
        return PlAction::Drop(DropReason::UnknownSpi);
    };
    let n = chain.functions.len();
    let si = data.si as usize;
    if si == 0 || si > n {
        return PlAction::Drop(DropReason::SiMismatch);
    }
    let here = &chain.functions[n - si];
    if here.address != packet.dst() || !ctx.is_local(packet.dst()) {
        return PlAction::Drop(DropReason::SiMismatch);
    }

    let result = if si > 1 {
        let next = chain.functions[n - si + 1].address;
        let mut h = header.clone();
        h.pl_data = NfvChainData { si: data.si - 1, ..data }.encode();
        replace_gvn(packet, &h).and_then(|mut p| p.set_dst(next).map(|_| p))
    } else {
        pop_gvn(packet).and_then(|(mut p, _)| p.set_dst(data.original_dst).map(|_| p))
    };
    match result {
        Ok(packet) => PlAction::RewriteAndForward { packet, via: None },
        Err(_) => PlAction::Drop(DropReason::PlError),
    }
}

/// NFV processing logic bound to a chain table. Packets not addressed to
/// this node are routed by IP.
#[derive(Debug, Clone, Default)]
pub struct NfvPl {
    pub chains: Arc<ChainTable>,
}

impl NfvPl {
    pub fn new(chains: Arc<ChainTable>) -> Self {
        NfvPl { chains }
    }
}

impl ProcessingLogic for NfvPl {
    fn process(&self, _header: &GvnHeader, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
        if !ctx.is_local(packet.dst()) {
            return PlAction::ForwardByIp;
        }
        nfv_step(packet, ctx, &self.chains)
    }
}
