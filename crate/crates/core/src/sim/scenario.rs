// SPDX-License-Identifier: Apache-2.0

//! JSON scenario documents and topology construction.
//!
//! ```json
//! {
//!   "seed": 0,
//!   "max_steps": 1000,
//!   "nodes": [{"id": "h1", "kind": "legacy_host", "addresses": ["10.0.1.1"]}],
//!   "links": [{"a": "h1", "b": "r1"}],
//!   "routes": [{"node": "h1", "prefix": "0.0.0.0/0", "next_hop": "r1"}],
//!   "registries": [{"node": "r1", "logic": "vpn", "allowed": [10]}],
//!   "chains": [{"spi": 7, "functions": ["f1", "f2"]}],
//!   "edge_policies": [{"node": "e1", "ingress": [{"match": {"protocol": 17}, "template": {"vpn": 10}}],
//!                      "pop_on_egress": ["h2"]}],
//!   "flow_rules": [{"node": "r1", "priority": 10, "match": {"code": 2}, "action": {"forward_to": "10.0.0.2"}}],
//!   "injections": [{"node": "h1", "time": 0,
//!                   "packet": {"src": "10.0.1.1", "dst": "10.0.2.1", "protocol": 17, "payload_hex": "00"}}]
//! }
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::net::IpAddr;
use std::sync::Arc;

use serde::Deserialize;
use thiserror::Error;

use crate::builtin::{codes, ChainHop, ChainTable, ContentTag, IcnPl, NfvPl, ServiceChain, TagTable, VpnPl};
use crate::codec::{GvnCode, GvnFlags, IpPacket};
use crate::pl::{ProcessingLogicBinding, Registry, DEFAULT_TRANSPORTS};
use crate::routing::{NodeId, Prefix, RoutingTable};

use super::edge::{EdgeMatch, EdgePolicy, EdgeRule, HeaderTemplate, PlTemplate};
use super::engine::Injection;
use super::flow::{FlowAction, FlowMatch, FlowRule};
use super::topology::{Link, Node, NodeKind, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("{context} refers to unknown node `{id}`")]
    DanglingReference { context: &'static str, id: NodeId },
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(NodeId),
    #[error("route at `{node}` uses `{next_hop}`, which is not an attached neighbor")]
    RouteNotAttached { node: NodeId, next_hop: NodeId },
}

fn schema(msg: impl Into<String>) -> TopologyError {
    TopologyError::SchemaError(msg.into())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub max_steps: Option<u64>,
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub routes: Vec<RouteSpec>,
    #[serde(default)]
    pub registries: Vec<RegistrySpec>,
    #[serde(default)]
    pub chains: Vec<ChainSpec>,
    #[serde(default)]
    pub edge_policies: Vec<EdgePolicySpec>,
    #[serde(default)]
    pub flow_rules: Vec<FlowRuleSpec>,
    #[serde(default)]
    pub injections: Vec<InjectionSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    pub kind: NodeKind,
    #[serde(default)]
    pub addresses: Vec<IpAddr>,
    #[serde(default)]
    pub known_transports: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub node: NodeId,
    pub prefix: Prefix,
    pub next_hop: NodeId,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "logic", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegistrySpec {
    Nfv {
        node: NodeId,
    },
    Icn {
        node: NodeId,
        #[serde(default)]
        tags: Vec<TagRouteSpec>,
    },
    Vpn {
        node: NodeId,
        #[serde(default)]
        allowed: Vec<u32>,
    },
}

impl RegistrySpec {
    pub fn node(&self) -> &NodeId {
        match self {
            RegistrySpec::Nfv { node } | RegistrySpec::Icn { node, .. } | RegistrySpec::Vpn { node, .. } => node,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TagRouteSpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub tag_hex: Option<String>,
    pub next_hop: IpAddr,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub spi: u32,
    pub functions: Vec<NodeId>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgePolicySpec {
    pub node: NodeId,
    #[serde(default)]
    pub ingress: Vec<EdgeRuleSpec>,
    #[serde(default)]
    pub pop_on_egress: Vec<NodeId>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRuleSpec {
    #[serde(rename = "match", default)]
    pub matcher: EdgeMatchSpec,
    pub template: TemplateSpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeMatchSpec {
    pub protocol: Option<u8>,
    pub src_prefix: Option<Prefix>,
    pub dst_prefix: Option<Prefix>,
}

/// Exactly one of `pl_hex` (with `code`), `icn`, `vpn`, `nfv`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub code: Option<u64>,
    #[serde(default)]
    pub flags: u8,
    pub pl_hex: Option<String>,
    pub icn: Option<String>,
    pub vpn: Option<u32>,
    pub nfv: Option<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRuleSpec {
    pub node: NodeId,
    pub priority: u32,
    #[serde(rename = "match", default)]
    pub matcher: FlowMatchSpec,
    pub action: FlowActionSpec,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowMatchSpec {
    pub code: Option<u64>,
    pub pl_prefix: Option<PlPrefixSpec>,
    pub dst_prefix: Option<Prefix>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlPrefixSpec {
    #[serde(default)]
    pub offset: usize,
    pub hex: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowActionSpec {
    ForwardByIp,
    ForwardTo(IpAddr),
    Deliver,
    Drop,
    Push(TemplateSpec),
    Pop,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSpec {
    pub node: NodeId,
    #[serde(default)]
    pub time: u64,
    pub packet: PacketSpec,
}

/// Either a full datagram in `hex`, or fields to build one. `gvn` tags the
/// built packet before injection.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub hex: Option<String>,
    pub src: Option<IpAddr>,
    pub dst: Option<IpAddr>,
    pub protocol: Option<u8>,
    pub ttl: Option<u8>,
    #[serde(default)]
    pub payload_hex: String,
    pub gvn: Option<TemplateSpec>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, TopologyError> {
        serde_json::from_str(text).map_err(|e| schema(e.to_string()))
    }
}

fn decode_hex(what: &str, s: &str) -> Result<Vec<u8>, TopologyError> {
    hex::decode(s).map_err(|e| schema(format!("{what}: {e}")))
}

impl TemplateSpec {
    pub fn to_template(&self) -> Result<HeaderTemplate, TopologyError> {
        let chosen = [self.pl_hex.is_some(), self.icn.is_some(), self.vpn.is_some(), self.nfv.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if chosen != 1 {
            return Err(schema("template needs exactly one of pl_hex, icn, vpn, nfv"));
        }
        let pl = if let Some(h) = &self.pl_hex {
            let code = self.code.ok_or_else(|| schema("pl_hex template needs a code"))?;
            let code = GvnCode::new(code).map_err(|e| schema(e.to_string()))?;
            PlTemplate::Raw { code, data: decode_hex("pl_hex", h)? }
        } else {
            if self.code.is_some() {
                return Err(schema("code is only allowed with pl_hex"));
            }
            match (&self.icn, self.vpn, self.nfv) {
                (Some(name), _, _) => PlTemplate::Icn(name.clone()),
                (_, Some(vnid), _) => PlTemplate::Vpn(vnid),
                (_, _, Some(spi)) => PlTemplate::Nfv(spi),
                _ => unreachable!("exactly one template kind"),
            }
        };
        Ok(HeaderTemplate { flags: GvnFlags(self.flags), pl })
    }
}

impl PacketSpec {
    pub fn to_packet(&self, chains: &ChainTable) -> Result<IpPacket, TopologyError> {
        let packet = if let Some(h) = &self.hex {
            if self.src.is_some() || self.dst.is_some() || self.protocol.is_some() {
                return Err(schema("packet hex excludes src/dst/protocol"));
            }
            IpPacket::parse(&decode_hex("packet hex", h)?).map_err(|e| schema(e.to_string()))?
        } else {
            let src = self.src.ok_or_else(|| schema("packet needs src"))?;
            let dst = self.dst.ok_or_else(|| schema("packet needs dst"))?;
            let protocol = self.protocol.ok_or_else(|| schema("packet needs protocol"))?;
            let payload = decode_hex("payload_hex", &self.payload_hex)?;
            IpPacket::new(src, dst, protocol, self.ttl.unwrap_or(64), payload).map_err(|e| schema(e.to_string()))?
        };
        match &self.gvn {
            Some(t) => t.to_template()?.apply(&packet, chains).map_err(|e| schema(e.to_string())),
            None => Ok(packet),
        }
    }
}

impl FlowActionSpec {
    fn to_action(&self) -> Result<FlowAction, TopologyError> {
        Ok(match self {
            FlowActionSpec::ForwardByIp => FlowAction::ForwardByIp,
            FlowActionSpec::ForwardTo(a) => FlowAction::ForwardTo(*a),
            FlowActionSpec::Deliver => FlowAction::Deliver,
            FlowActionSpec::Drop => FlowAction::Drop,
            FlowActionSpec::Push(t) => FlowAction::Push(t.to_template()?),
            FlowActionSpec::Pop => FlowAction::Pop,
        })
    }
}

/// Builds the topology and decodes the injections of a scenario.
pub fn build_topology(scenario: &Scenario) -> Result<(Topology, Vec<Injection>), TopologyError> {
    let mut nodes = Vec::with_capacity(scenario.nodes.len());
    let mut index = BTreeMap::new();
    for spec in &scenario.nodes {
        if index.insert(spec.id.clone(), nodes.len()).is_some() {
            return Err(TopologyError::DuplicateNodeId(spec.id.clone()));
        }
        let is_host = !spec.kind.is_router();
        if is_host && spec.addresses.is_empty() {
            return Err(schema(format!("host `{}` needs at least one address", spec.id)));
        }
        nodes.push(Node {
            id: spec.id.clone(),
            kind: spec.kind,
            addresses: spec.addresses.iter().copied().collect(),
            known_transports: match &spec.known_transports {
                Some(t) => t.iter().copied().collect(),
                None => DEFAULT_TRANSPORTS.into_iter().collect(),
            },
            routing: RoutingTable::new(),
            registry: Registry::new(),
            flow_rules: Vec::new(),
            edge: None,
        });
    }
    let lookup = |context: &'static str, id: &NodeId| {
        index.get(id).copied().ok_or_else(|| TopologyError::DanglingReference { context, id: id.clone() })
    };

    let mut links = Vec::new();
    let mut adjacency = BTreeMap::new();
    for l in &scenario.links {
        let a = lookup("link", &l.a)?;
        let b = lookup("link", &l.b)?;
        if a == b {
            return Err(schema(format!("link from `{}` to itself", l.a)));
        }
        if adjacency.contains_key(&(a, b)) {
            return Err(schema(format!("duplicate link `{}`-`{}`", l.a, l.b)));
        }
        let id = links.len();
        links.push(Link { a, b });
        adjacency.insert((a, b), id);
        adjacency.insert((b, a), id);
    }

    for r in &scenario.routes {
        let at = lookup("route", &r.node)?;
        let hop = lookup("route next hop", &r.next_hop)?;
        if !adjacency.contains_key(&(at, hop)) {
            return Err(TopologyError::RouteNotAttached { node: r.node.clone(), next_hop: r.next_hop.clone() });
        }
        nodes[at].routing.add(r.prefix, r.next_hop.clone());
    }

    let mut chains = ChainTable::new();
    for c in &scenario.chains {
        if c.functions.is_empty() {
            return Err(schema(format!("chain {} has no functions", c.spi)));
        }
        let mut hops = Vec::with_capacity(c.functions.len());
        for f in &c.functions {
            let node = &nodes[lookup("chain", f)?];
            if node.kind != NodeKind::NfvFunctionNode {
                return Err(schema(format!("chain {} member `{f}` is not an nfv_function_node", c.spi)));
            }
            let address = *node.addresses.iter().next().expect("hosts have addresses");
            hops.push(ChainHop { address, node: f.clone() });
        }
        if chains.insert(c.spi, ServiceChain::new(c.spi, hops)).is_some() {
            return Err(schema(format!("duplicate chain spi {}", c.spi)));
        }
    }
    let chains = Arc::new(chains);

    for node in nodes.iter_mut().filter(|n| n.kind == NodeKind::NfvFunctionNode) {
        node.registry
            .register(ProcessingLogicBinding::new(codes::NFV, "nfv-chain", NfvPl::new(chains.clone())))
            .map_err(|e| schema(e.to_string()))?;
    }

    for r in &scenario.registries {
        let node = &mut nodes[lookup("registry", r.node())?];
        if !node.kind.is_gvn() {
            return Err(schema(format!("legacy node `{}` cannot hold processing logics", node.id)));
        }
        let binding = match r {
            RegistrySpec::Nfv { .. } => {
                ProcessingLogicBinding::new(codes::NFV, "nfv-chain", NfvPl::new(chains.clone()))
            }
            RegistrySpec::Icn { tags, .. } => {
                let mut table = TagTable::new();
                for t in tags {
                    let tag = match (&t.name, &t.tag_hex) {
                        (Some(name), None) => ContentTag::from_name(name),
                        (None, Some(h)) => ContentTag::from_pl_data(&decode_hex("tag_hex", h)?)
                            .filter(|_| h.len() == 16)
                            .ok_or_else(|| schema("tag_hex must be 8 octets"))?,
                        _ => return Err(schema("icn tag needs exactly one of name, tag_hex")),
                    };
                    table.insert(tag, t.next_hop);
                }
                ProcessingLogicBinding::new(codes::ICN, "icn-tag", IcnPl::new(table))
            }
            RegistrySpec::Vpn { allowed, .. } => {
                let allowed: BTreeSet<u32> = allowed.iter().copied().collect();
                ProcessingLogicBinding::new(codes::VPN, "vpn", VpnPl::new(allowed))
            }
        };
        node.registry.register(binding).map_err(|e| schema(format!("node `{}`: {e}", node.id)))?;
    }

    for e in &scenario.edge_policies {
        let at = lookup("edge policy", &e.node)?;
        if nodes[at].kind != NodeKind::GvnEdgeNode {
            return Err(schema(format!("edge policy on `{}`, which is not a gvn_edge_node", e.node)));
        }
        let mut policy = EdgePolicy::default();
        for rule in &e.ingress {
            policy.ingress.push(EdgeRule {
                matcher: EdgeMatch {
                    protocol: rule.matcher.protocol,
                    src_prefix: rule.matcher.src_prefix,
                    dst_prefix: rule.matcher.dst_prefix,
                },
                template: rule.template.to_template()?,
            });
        }
        for n in &e.pop_on_egress {
            lookup("pop_on_egress", n)?;
            policy.pop_on_egress.insert(n.clone());
        }
        if nodes[at].edge.replace(policy).is_some() {
            return Err(schema(format!("duplicate edge policy for `{}`", e.node)));
        }
    }

    for f in &scenario.flow_rules {
        let node = &mut nodes[lookup("flow rule", &f.node)?];
        if !node.kind.is_gvn() {
            return Err(schema(format!("legacy node `{}` cannot hold flow rules", node.id)));
        }
        let pl_prefix = match &f.matcher.pl_prefix {
            Some(p) => Some((p.offset, decode_hex("pl_prefix", &p.hex)?)),
            None => None,
        };
        let code = match f.matcher.code {
            Some(c) => Some(GvnCode::new(c).map_err(|e| schema(e.to_string()))?),
            None => None,
        };
        node.flow_rules.push(FlowRule {
            priority: f.priority,
            matcher: FlowMatch { code, pl_prefix, dst_prefix: f.matcher.dst_prefix },
            action: f.action.to_action()?,
        });
    }

    let mut injections = Vec::with_capacity(scenario.injections.len());
    for i in &scenario.injections {
        lookup("injection", &i.node)?;
        injections.push(Injection { node: i.node.clone(), time: i.time, packet: i.packet.to_packet(&chains)? });
    }

    let topo = Topology { nodes, index, links, adjacency, chains, seed: scenario.seed };
    Ok((topo, injections))
}

#[cfg(test)]
mod tests {
    use super::*;

    const THREE_NODES: &str = r#"{
        "nodes": [
            {"id": "h1", "kind": "legacy_host", "addresses": ["10.0.1.1"]},
            {"id": "r1", "kind": "legacy_router", "addresses": ["10.0.0.1"]},
            {"id": "h2", "kind": "legacy_host", "addresses": ["10.0.2.1"]}
        ],
        "links": [{"a": "h1", "b": "r1"}, {"a": "r1", "b": "h2"}],
        "routes": [
            {"node": "h1", "prefix": "0.0.0.0/0", "next_hop": "r1"},
            {"node": "r1", "prefix": "10.0.1.0/24", "next_hop": "h1"},
            {"node": "r1", "prefix": "10.0.2.0/24", "next_hop": "h2"},
            {"node": "h2", "prefix": "0.0.0.0/0", "next_hop": "r1"}
        ]
    }"#;

    #[test]
    fn three_node_topology() {
        let s = Scenario::from_json(THREE_NODES).unwrap();
        let (t, inj) = build_topology(&s).unwrap();
        assert_eq!(t.nodes().len(), 3);
        assert_eq!(t.links().len(), 2);
        assert!(inj.is_empty());
        assert_eq!(
            t.node(&"r1".into()).unwrap().routing.lookup("10.0.2.9".parse().unwrap()),
            Some(&NodeId::from("h2"))
        );
    }

    #[test]
    fn dangling_route() {
        let text = THREE_NODES.replace(r#""next_hop": "h2"}"#, r#""next_hop": "h9"}"#);
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(
            build_topology(&s).unwrap_err(),
            TopologyError::DanglingReference { context: "route next hop", id: "h9".into() }
        );
    }

    #[test]
    fn route_must_use_attached_link() {
        let text = THREE_NODES.replace(
            r#"{"node": "h2", "prefix": "0.0.0.0/0", "next_hop": "r1"}"#,
            r#"{"node": "h2", "prefix": "0.0.0.0/0", "next_hop": "h1"}"#,
        );
        let s = Scenario::from_json(&text).unwrap();
        assert!(matches!(build_topology(&s), Err(TopologyError::RouteNotAttached { .. })));
    }

    #[test]
    fn duplicate_id() {
        let text = THREE_NODES.replace(r#""id": "h2""#, r#""id": "h1""#);
        let s = Scenario::from_json(&text).unwrap();
        assert_eq!(build_topology(&s).unwrap_err(), TopologyError::DuplicateNodeId("h1".into()));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(Scenario::from_json("{"), Err(TopologyError::SchemaError(_))));
        assert!(matches!(Scenario::from_json(r#"{"nodes": [], "bogus": 1}"#), Err(TopologyError::SchemaError(_))));
        let text = THREE_NODES.replace(r#""kind": "legacy_router""#, r#""kind": "bridge""#);
        assert!(matches!(Scenario::from_json(&text), Err(TopologyError::SchemaError(_))));
    }

    #[test]
    fn legacy_nodes_reject_gvn_config() {
        let mut s = Scenario::from_json(THREE_NODES).unwrap();
        s.registries.push(RegistrySpec::Vpn { node: "r1".into(), allowed: vec![1] });
        assert!(matches!(build_topology(&s), Err(TopologyError::SchemaError(_))));
    }

    #[test]
    fn templates() {
        let t: TemplateSpec = serde_json::from_str(r#"{"vpn": 3}"#).unwrap();
        assert_eq!(t.to_template().unwrap().pl, PlTemplate::Vpn(3));
        let t: TemplateSpec = serde_json::from_str(r#"{"vpn": 3, "icn": "x"}"#).unwrap();
        assert!(t.to_template().is_err());
        let t: TemplateSpec = serde_json::from_str(r#"{"pl_hex": "ab"}"#).unwrap();
        assert!(t.to_template().is_err());
        let t: TemplateSpec = serde_json::from_str(r#"{"code": 9, "pl_hex": "ab", "flags": 128}"#).unwrap();
        let tpl = t.to_template().unwrap();
        assert_eq!(tpl.code(), GvnCode::from_const(9));
        assert!(tpl.flags.drop_on_unknown());
    }

    #[test]
    fn flow_actions_parse() {
        let a: FlowActionSpec = serde_json::from_str(r#""drop""#).unwrap();
        assert!(matches!(a, FlowActionSpec::Drop));
        let a: FlowActionSpec = serde_json::from_str(r#"{"forward_to": "10.0.0.9"}"#).unwrap();
        assert!(matches!(a, FlowActionSpec::ForwardTo(_)));
        let a: FlowActionSpec = serde_json::from_str(r#"{"push": {"icn": "v"}}"#).unwrap();
        assert!(matches!(a.to_action().unwrap(), FlowAction::Push(_)));
    }
}
