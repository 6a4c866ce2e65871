// SPDX-License-Identifier: Apache-2.0

//! Deterministic discrete-event network simulator.

pub mod edge;
pub mod engine;
pub mod flow;
pub mod scenario;
pub mod topology;
pub mod trace;

pub use edge::{edge_ingress, EdgeMatch, EdgePolicy, EdgeRule, HeaderTemplate, PlTemplate, TemplateError};
pub use engine::{
    process_at_node, run, Delivery, DropEvent, Injection, NodeOutput, NodeResult, Origin, RunOutcome, RunStatus,
    SimError, StepRecord,
};
pub use flow::{flow_match, FlowAction, FlowMatch, FlowRule};
pub use scenario::{build_topology, Scenario, TopologyError};
pub use topology::{Link, LinkId, Node, NodeKind, Topology};
pub use trace::{to_json, to_text, PacketSummary, TraceEvent, TraceRecord};
