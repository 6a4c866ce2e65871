// SPDX-License-Identifier: Apache-2.0

//! Processing Logic (PL) registry and dispatch.
//!
//! A GVN-capable node holds a [`Registry`] mapping GVN codes to handlers.
//! Dispatch follows the receive rules for tagged packets:
//!
//! * untagged, or tagged with a code the node does not know: handled at IP
//!   level exactly like a legacy node would (forward by destination, deliver
//!   locally if the transport is known, otherwise drop);
//! * unknown code with `DROP_ON_UNKNOWN` set: dropped;
//! * known code: the handler decides.
//!
//! # Authoring a PL
//!
//! A handler receives the parsed header, the full packet and the node
//! context, and returns one [`PlAction`]. The meaning of `pl_data` is owned
//! entirely by the PL. Handlers must be deterministic; randomness has to come
//! from [`PlState::rng`], which is seeded per node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::IpAddr;
use std::sync::Arc;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{classify, Classification, GvnCode, GvnHeader, IpPacket};
use crate::routing::{NodeId, RoutingTable};

/// Transports a host stack understands unless configured otherwise:
/// ICMP, TCP, UDP, ICMPv6.
pub const DEFAULT_TRANSPORTS: [u8; 4] = [1, 6, 17, 58];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    UnknownTransport,
    UnknownCode,
    TtlExpired,
    NoRoute,
    NotARouter,
    UnknownSpi,
    SiMismatch,
    VpnViolation,
    PlError,
    FlowRule,
}

impl DropReason {
    pub const ALL: [DropReason; 10] = [
        DropReason::UnknownTransport,
        DropReason::UnknownCode,
        DropReason::TtlExpired,
        DropReason::NoRoute,
        DropReason::NotARouter,
        DropReason::UnknownSpi,
        DropReason::SiMismatch,
        DropReason::VpnViolation,
        DropReason::PlError,
        DropReason::FlowRule,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::UnknownTransport => "unknown_transport",
            DropReason::UnknownCode => "unknown_code",
            DropReason::TtlExpired => "ttl_expired",
            DropReason::NoRoute => "no_route",
            DropReason::NotARouter => "not_a_router",
            DropReason::UnknownSpi => "unknown_spi",
            DropReason::SiMismatch => "si_mismatch",
            DropReason::VpnViolation => "vpn_violation",
            DropReason::PlError => "pl_error",
            DropReason::FlowRule => "flow_rule",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a node does with a packet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlAction {
    /// Handle at IP level: deliver if addressed here, otherwise route by
    /// destination address.
    ForwardByIp,
    /// Route the unchanged packet toward this address instead of its
    /// destination.
    ForwardTo(IpAddr),
    DeliverLocal,
    Drop(DropReason),
    /// Replace the packet, then route it toward `via` (or by its own
    /// destination when `None`).
    RewriteAndForward {
        packet: IpPacket,
        via: Option<IpAddr>,
    },
}

/// Per-node storage for processing logics.
#[derive(Debug, Clone)]
pub struct PlState {
    slots: BTreeMap<GvnCode, Vec<u8>>,
    rng: ChaCha8Rng,
}

impl PlState {
    pub fn new(seed: u64) -> Self {
        PlState { slots: BTreeMap::new(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn slot(&mut self, code: GvnCode) -> &mut Vec<u8> {
        self.slots.entry(code).or_default()
    }

    pub fn get(&self, code: GvnCode) -> Option<&[u8]> {
        self.slots.get(&code).map(Vec::as_slice)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

impl Default for PlState {
    fn default() -> Self {
        PlState::new(0)
    }
}

/// The view of a node handed to processing logics.
pub struct NodeContext<'a> {
    pub node_id: &'a NodeId,
    pub local_addresses: &'a BTreeSet<IpAddr>,
    pub known_transports: &'a BTreeSet<u8>,
    pub routing: &'a RoutingTable,
    pub pl_state: &'a mut PlState,
}

impl NodeContext<'_> {
    pub fn is_local(&self, addr: IpAddr) -> bool {
        self.local_addresses.contains(&addr)
    }
}

/// Handler contract for a processing logic.
pub trait ProcessingLogic: Send + Sync {
    fn process(&self, header: &GvnHeader, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction;
}

impl<F> ProcessingLogic for F
where
    F: Fn(&GvnHeader, &IpPacket, &mut NodeContext<'_>) -> PlAction + Send + Sync,
{
    fn process(&self, header: &GvnHeader, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
        self(header, packet, ctx)
    }
}

#[derive(Clone)]
pub struct ProcessingLogicBinding {
    pub code: GvnCode,
    pub name: String,
    pub handler: Arc<dyn ProcessingLogic>,
}

impl ProcessingLogicBinding {
    pub fn new(code: GvnCode, name: impl Into<String>, handler: impl ProcessingLogic + 'static) -> Self {
        ProcessingLogicBinding { code, name: name.into(), handler: Arc::new(handler) }
    }
}

impl fmt::Debug for ProcessingLogicBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProcessingLogicBinding")
            .field("code", &self.code)
            .field("name", &self.name)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("GVN code {0} is already registered")]
    DuplicateCode(GvnCode),
    #[error("GVN code 0 is reserved")]
    ReservedCode,
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    bindings: BTreeMap<GvnCode, ProcessingLogicBinding>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, binding: ProcessingLogicBinding) -> Result<(), RegistryError> {
        if binding.code.is_reserved() {
            return Err(RegistryError::ReservedCode);
        }
        if self.bindings.contains_key(&binding.code) {
            return Err(RegistryError::DuplicateCode(binding.code));
        }
        self.bindings.insert(binding.code, binding);
        Ok(())
    }

    pub fn lookup(&self, code: GvnCode) -> Option<&ProcessingLogicBinding> {
        self.bindings.get(&code)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn codes(&self) -> impl Iterator<Item = GvnCode> + '_ {
        self.bindings.keys().copied()
    }

    pub fn dispatch(&self, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
        match classify(packet) {
            Classification::Legacy { .. } => ip_level(packet, ctx),
            Classification::Gvn(header) => match self.lookup(header.code) {
                Some(binding) => binding.handler.process(&header, packet, ctx),
                None if header.flags.drop_on_unknown() => PlAction::Drop(DropReason::UnknownCode),
                None => ip_level(packet, ctx),
            },
        }
    }
}

pub fn register_pl(registry: &mut Registry, binding: ProcessingLogicBinding) -> Result<(), RegistryError> {
    registry.register(binding)
}

pub fn lookup_pl(registry: &Registry, code: GvnCode) -> Option<&ProcessingLogicBinding> {
    registry.lookup(code)
}

pub fn dispatch(registry: &Registry, packet: &IpPacket, ctx: &mut NodeContext<'_>) -> PlAction {
    registry.dispatch(packet, ctx)
}

/// What a node with no GVN knowledge does: route foreign traffic, deliver
/// local traffic whose transport it knows, drop the rest.
pub fn ip_level(packet: &IpPacket, ctx: &NodeContext<'_>) -> PlAction {
    if !ctx.is_local(packet.dst()) {
        PlAction::ForwardByIp
    } else if ctx.known_transports.contains(&packet.protocol()) {
        PlAction::DeliverLocal
    } else {
        PlAction::Drop(DropReason::UnknownTransport)
    }
}
