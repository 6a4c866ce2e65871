// SPDX-License-Identifier: Apache-2.0

//! Bundled processing logics.

pub mod codes;
pub mod icn;
pub mod nfv;
pub mod opaque;
pub mod vpn;

pub use icn::{icn_route, icn_tag, ContentTag, IcnPl, TagTable};
pub use nfv::{nfv_encap, nfv_step, ChainHop, ChainTable, NfvChainData, NfvError, NfvPl, ServiceChain};
pub use opaque::{opaque_mapping_demo, OpaqueError};
pub use vpn::{vpn_check, vpn_tag, VpnData, VpnPl};

use crate::codec::GvnHeader;
use crate::pl::{DropReason, NodeContext, PlAction};

/// Local delivery of a tagged packet once its header has been consumed:
/// accepted if the node speaks the encapsulated transport.
pub fn deliver_inner(header: &GvnHeader, ctx: &NodeContext<'_>) -> PlAction {
    if ctx.known_transports.contains(&header.next_header) {
        PlAction::DeliverLocal
    } else {
        PlAction::Drop(DropReason::UnknownTransport)
    }
}

/// Short human-readable interpretation of the PL data for bundled codes.
pub fn describe(header: &GvnHeader) -> Option<String> {
    let code = header.code;
    if code == codes::NFV {
        Some(match NfvChainData::decode(&header.pl_data) {
            Ok(d) => format!("nfv spi={} si={} orig={}", d.spi, d.si, d.original_dst),
            Err(e) => format!("nfv {e}"),
        })
    } else if code == codes::ICN {
        Some(match ContentTag::from_pl_data(&header.pl_data) {
            Some(t) => format!("icn tag={t}"),
            None => "icn malformed tag".to_owned(),
        })
    } else if code == codes::VPN {
        Some(match VpnData::decode(&header.pl_data) {
            Some(d) => format!("vpn vnid={}", d.vnid),
            None => "vpn malformed data".to_owned(),
        })
    } else if code == codes::OPAQUE_DEMO {
        Some(format!("opaque {}", hex::encode(&header.pl_data)))
    } else {
        None
    }
}
