// SPDX-License-Identifier: Apache-2.0

//! Per-node packet processing and the discrete-event loop.
//!
//! Links have unit delay and are FIFO. Events are ordered by
//! `(time, link, enqueue seq)`; local injections sort before link arrivals
//! of the same time step.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::codec::{classify, pop_gvn, Classification, IpPacket, GVN_PROTOCOL};
use crate::pl::{ip_level, DropReason, NodeContext, PlAction, PlState};
use crate::routing::NodeId;

use super::edge::edge_ingress;
use super::flow::{flow_match, FlowAction};
use super::topology::{LinkId, Topology};
use super::trace::{PacketSummary, TraceEvent, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Injection {
    pub node: NodeId,
    pub time: u64,
    pub packet: IpPacket,
}

/// Where a packet presented to a node came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Local,
    Link(LinkId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeResult {
    Emit { link: LinkId, to: usize, packet: IpPacket },
    Delivered(IpPacket),
    Dropped(DropReason),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub event: TraceEvent,
    pub summary: PacketSummary,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeOutput {
    pub records: Vec<StepRecord>,
    pub result: NodeResult,
}

struct Step<'t> {
    topo: &'t Topology,
    node: usize,
    from_link: bool,
    rewritten: bool,
    records: Vec<StepRecord>,
}

impl Step<'_> {
    fn record(&mut self, event: TraceEvent, packet: &IpPacket, detail: Option<String>) {
        self.records.push(StepRecord { event, summary: PacketSummary::of(packet), detail });
    }

    fn drop(&mut self, reason: DropReason, packet: &IpPacket, detail: Option<String>) -> NodeResult {
        self.record(TraceEvent::Drop(reason), packet, detail);
        NodeResult::Dropped(reason)
    }

    fn deliver(&mut self, packet: IpPacket) -> NodeResult {
        self.record(TraceEvent::Deliver, &packet, None);
        NodeResult::Delivered(packet)
    }

    fn resolve(&mut self, action: PlAction, packet: IpPacket) -> NodeResult {
        match action {
            PlAction::DeliverLocal => self.deliver(packet),
            PlAction::Drop(reason) => self.drop(reason, &packet, None),
            PlAction::ForwardByIp => self.ip_or_forward(packet),
            PlAction::ForwardTo(hop) => self.forward(packet, hop),
            PlAction::RewriteAndForward { packet: rewritten, via } => {
                self.rewritten = true;
                self.record(TraceEvent::Rewrite, &rewritten, None);
                match via {
                    Some(hop) => self.forward(rewritten, hop),
                    None => self.ip_or_forward(rewritten),
                }
            }
        }
    }

    fn ip_or_forward(&mut self, packet: IpPacket) -> NodeResult {
        let topo = self.topo;
        let node = &topo.nodes[self.node];
        if !node.addresses.contains(&packet.dst()) {
            let dst = packet.dst();
            return self.forward(packet, dst);
        }
        if node.known_transports.contains(&packet.protocol()) {
            self.deliver(packet)
        } else {
            self.drop(DropReason::UnknownTransport, &packet, None)
        }
    }

    fn forward(&mut self, mut packet: IpPacket, key: std::net::IpAddr) -> NodeResult {
        let topo = self.topo;
        let node = &topo.nodes[self.node];
        if self.from_link {
            if node.kind.is_router() {
                let ttl = packet.ttl();
                if ttl <= 1 {
                    return self.drop(DropReason::TtlExpired, &packet, None);
                }
                packet.set_ttl(ttl - 1);
            } else if !self.rewritten {
                return self.drop(DropReason::NotARouter, &packet, None);
            }
        }
        let Some(hop) = node.routing.lookup(key) else {
            return self.drop(DropReason::NoRoute, &packet, Some(format!("key={key}")));
        };
        let Some((to, link)) = topo.node_index(hop).and_then(|to| topo.link_between(self.node, to).map(|l| (to, l)))
        else {
            return self.drop(DropReason::NoRoute, &packet, Some(format!("next_hop={hop}")));
        };
        if let Some(policy) = &node.edge {
            if policy.pop_on_egress.contains(hop) && packet.protocol() == GVN_PROTOCOL {
                if let Ok((inner, _)) = pop_gvn(&packet) {
                    packet = inner;
                    self.record(TraceEvent::Pop, &packet, None);
                }
            }
        }
        self.record(TraceEvent::Forward, &packet, Some(format!("next_hop={hop}")));
        NodeResult::Emit { link, to, packet }
    }
}

/// Runs one packet through one node. `state` is that node's PL storage.
pub fn process_at_node(
    topo: &Topology,
    node_index: usize,
    state: &mut PlState,
    packet: IpPacket,
    origin: Origin,
) -> NodeOutput {
    let node = &topo.nodes[node_index];
    let mut step = Step {
        topo,
        node: node_index,
        from_link: matches!(origin, Origin::Link(_)),
        rewritten: false,
        records: Vec::new(),
    };

    let diagnostic = match classify(&packet) {
        Classification::Legacy { malformed: Some(e), .. } if node.kind.is_gvn() => Some(format!("malformed: {e}")),
        _ => None,
    };
    step.record(TraceEvent::Ingress, &packet, diagnostic);

    let mut packet = packet;
    if let Some(policy) = &node.edge {
        match edge_ingress(policy, &packet, &topo.chains) {
            Ok(Some(tagged)) => {
                packet = tagged;
                step.record(TraceEvent::Push, &packet, None);
            }
            Ok(None) => {}
            Err(e) => {
                let result = step.drop(DropReason::PlError, &packet, Some(e.to_string()));
                return NodeOutput { records: step.records, result };
            }
        }
    }

    let mut ctx = NodeContext {
        node_id: &node.id,
        local_addresses: &node.addresses,
        known_transports: &node.known_transports,
        routing: &node.routing,
        pl_state: state,
    };

    // Originated here: only routed.
    let action = if origin == Origin::Local {
        PlAction::ForwardByIp
    } else if !node.kind.is_gvn() {
        ip_level(&packet, &ctx)
    } else if let Some(rule) = flow_match(&node.flow_rules, &packet) {
        match &rule.action {
            FlowAction::ForwardByIp => PlAction::ForwardByIp,
            FlowAction::ForwardTo(hop) => PlAction::ForwardTo(*hop),
            FlowAction::Deliver => PlAction::DeliverLocal,
            FlowAction::Drop => PlAction::Drop(DropReason::FlowRule),
            FlowAction::Push(template) => {
                if packet.protocol() != GVN_PROTOCOL {
                    match template.apply(&packet, &topo.chains) {
                        Ok(tagged) => {
                            packet = tagged;
                            step.rewritten = true;
                            step.record(TraceEvent::Push, &packet, None);
                        }
                        Err(e) => {
                            let result = step.drop(DropReason::PlError, &packet, Some(e.to_string()));
                            return NodeOutput { records: step.records, result };
                        }
                    }
                }
                PlAction::ForwardByIp
            }
            FlowAction::Pop => {
                if let Ok((inner, _)) = pop_gvn(&packet) {
                    packet = inner;
                    step.rewritten = true;
                    step.record(TraceEvent::Pop, &packet, None);
                }
                PlAction::ForwardByIp
            }
        }
    } else {
        node.registry.dispatch(&packet, &mut ctx)
    };

    let result = step.resolve(action, packet);
    NodeOutput { records: step.records, result }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("max steps must be positive")]
    ZeroSteps,
    #[error("injection at unknown node `{0}`")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Quiescent,
    StepLimitExceeded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivery {
    pub packet_id: u64,
    pub node: NodeId,
    pub time: u64,
    pub packet: IpPacket,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DropEvent {
    pub packet_id: u64,
    pub node: NodeId,
    pub time: u64,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub trace: Vec<TraceRecord>,
    pub deliveries: Vec<Delivery>,
    pub drops: Vec<DropEvent>,
    pub status: RunStatus,
    /// Events processed.
    pub steps: u64,
    pub injected: usize,
    /// Packets still queued on links when the run stopped.
    pub in_flight: usize,
}

struct Queued {
    time: u64,
    link: Option<LinkId>,
    seq: u64,
    node: usize,
    packet_id: u64,
    packet: IpPacket,
}

impl Queued {
    fn key(&self) -> (u64, Option<LinkId>, u64) {
        (self.time, self.link, self.seq)
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Processes events until the network is quiet or `max_steps` events have
/// been handled. The topology is not modified; PL state is fresh per run,
/// seeded from the topology seed.
pub fn run(topo: &Topology, injections: &[Injection], max_steps: u64) -> Result<RunOutcome, SimError> {
    if max_steps == 0 {
        return Err(SimError::ZeroSteps);
    }
    let mut states: Vec<PlState> =
        (0..topo.nodes.len()).map(|i| PlState::new(topo.seed.wrapping_add(i as u64))).collect();

    let mut queue = BinaryHeap::new();
    let mut enqueued = 0u64;
    for (pid, inj) in injections.iter().enumerate() {
        let node = topo.node_index(&inj.node).ok_or_else(|| SimError::UnknownNode(inj.node.clone()))?;
        queue.push(Reverse(Queued {
            time: inj.time,
            link: None,
            seq: enqueued,
            node,
            packet_id: pid as u64,
            packet: inj.packet.clone(),
        }));
        enqueued += 1;
    }

    let mut outcome = RunOutcome {
        trace: Vec::new(),
        deliveries: Vec::new(),
        drops: Vec::new(),
        status: RunStatus::Quiescent,
        steps: 0,
        injected: injections.len(),
        in_flight: 0,
    };

    while let Some(Reverse(ev)) = queue.pop() {
        if outcome.steps == max_steps {
            queue.push(Reverse(ev));
            outcome.status = RunStatus::StepLimitExceeded;
            break;
        }
        outcome.steps += 1;

        let origin = ev.link.map_or(Origin::Local, Origin::Link);
        let out = process_at_node(topo, ev.node, &mut states[ev.node], ev.packet, origin);
        let node = &topo.nodes[ev.node];
        for r in out.records {
            outcome.trace.push(TraceRecord {
                seq: outcome.trace.len() as u64,
                time: ev.time,
                node: node.id.clone(),
                kind: node.kind,
                packet_id: ev.packet_id,
                event: r.event,
                summary: r.summary,
                detail: r.detail,
            });
        }
        match out.result {
            NodeResult::Emit { link, to, packet } => {
                queue.push(Reverse(Queued {
                    time: ev.time + 1,
                    link: Some(link),
                    seq: enqueued,
                    node: to,
                    packet_id: ev.packet_id,
                    packet,
                }));
                enqueued += 1;
            }
            NodeResult::Delivered(packet) => outcome.deliveries.push(Delivery {
                packet_id: ev.packet_id,
                node: node.id.clone(),
                time: ev.time,
                packet,
            }),
            NodeResult::Dropped(reason) => {
                outcome.drops.push(DropEvent { packet_id: ev.packet_id, node: node.id.clone(), time: ev.time, reason })
            }
        }
    }
    outcome.in_flight = queue.len();
    Ok(outcome)
}
