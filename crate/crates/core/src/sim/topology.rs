// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::net::IpAddr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::builtin::ChainTable;
use crate::pl::Registry;
use crate::routing::{NodeId, RoutingTable};

use super::edge::EdgePolicy;
use super::flow::FlowRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    LegacyHost,
    LegacyRouter,
    GvnEndHost,
    GvnEdgeNode,
    GvnRouter,
    NfvFunctionNode,
}

impl NodeKind {
    pub fn is_gvn(self) -> bool {
        !matches!(self, NodeKind::LegacyHost | NodeKind::LegacyRouter)
    }

    /// Routers forward transit traffic and decrement its TTL; hosts only
    /// send what they originate or rewrite.
    pub fn is_router(self) -> bool {
        matches!(self, NodeKind::LegacyRouter | NodeKind::GvnRouter | NodeKind::GvnEdgeNode)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::LegacyHost => "legacy_host",
            NodeKind::LegacyRouter => "legacy_router",
            NodeKind::GvnEndHost => "gvn_end_host",
            NodeKind::GvnEdgeNode => "gvn_edge_node",
            NodeKind::GvnRouter => "gvn_router",
            NodeKind::NfvFunctionNode => "nfv_function_node",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub addresses: BTreeSet<IpAddr>,
    pub known_transports: BTreeSet<u8>,
    pub routing: RoutingTable,
    /// Empty for legacy kinds.
    pub registry: Registry,
    /// Empty for legacy kinds.
    pub flow_rules: Vec<FlowRule>,
    /// Only for edge nodes.
    pub edge: Option<EdgePolicy>,
}

pub type LinkId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Link {
    pub a: usize,
    pub b: usize,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub(crate) nodes: Vec<Node>,
    pub(crate) index: BTreeMap<NodeId, usize>,
    pub(crate) links: Vec<Link>,
    pub(crate) adjacency: BTreeMap<(usize, usize), LinkId>,
    pub(crate) chains: Arc<ChainTable>,
    pub(crate) seed: u64,
}

impl Topology {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_mut(&mut self, id: &NodeId) -> Option<&mut Node> {
        self.index.get(id).map(|&i| &mut self.nodes[i])
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link_between(&self, a: usize, b: usize) -> Option<LinkId> {
        self.adjacency.get(&(a, b)).copied()
    }

    pub fn chains(&self) -> &ChainTable {
        &self.chains
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}
