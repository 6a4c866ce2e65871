// SPDX-License-Identifier: Apache-2.0

//! Trace records and their canonical text/JSON renderings.
//!
//! Text format: one record per line, tab separated, in this column order:
//!
//! ```text
//! seq time node kind pkt event src dst proto code ttl pl detail
//! ```
//!
//! Absent values are written as `-`. Drops render as `drop:<reason>`.

use std::fmt;
use std::net::IpAddr;

use serde::Serialize;

use crate::builtin;
use crate::codec::{classify, GvnCode, IpPacket};
use crate::pl::DropReason;
use crate::routing::NodeId;

use super::topology::NodeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Ingress,
    Forward,
    Deliver,
    Drop(DropReason),
    Push,
    Pop,
    Rewrite,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Ingress => f.write_str("ingress"),
            TraceEvent::Forward => f.write_str("forward"),
            TraceEvent::Deliver => f.write_str("deliver"),
            TraceEvent::Drop(r) => write!(f, "drop:{r}"),
            TraceEvent::Push => f.write_str("push"),
            TraceEvent::Pop => f.write_str("pop"),
            TraceEvent::Rewrite => f.write_str("rewrite"),
        }
    }
}

/// Observer's view of a packet, independent of the node's capabilities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketSummary {
    pub src: IpAddr,
    pub dst: IpAddr,
    pub protocol: u8,
    pub code: Option<GvnCode>,
    pub ttl: u8,
    pub pl: Option<String>,
}

impl PacketSummary {
    pub fn of(packet: &IpPacket) -> Self {
        let classification = classify(packet);
        let header = classification.header();
        PacketSummary {
            src: packet.src(),
            dst: packet.dst(),
            protocol: packet.protocol(),
            code: header.map(|h| h.code),
            ttl: packet.ttl(),
            pl: header.and_then(builtin::describe),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub time: u64,
    pub node: NodeId,
    pub kind: NodeKind,
    /// Injection index of the packet this record is about.
    pub packet_id: u64,
    pub event: TraceEvent,
    pub summary: PacketSummary,
    pub detail: Option<String>,
}

impl TraceRecord {
    pub fn to_line(&self) -> String {
        let s = &self.summary;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.seq,
            self.time,
            self.node,
            self.kind,
            self.packet_id,
            self.event,
            s.src,
            s.dst,
            s.protocol,
            s.code.map_or_else(|| "-".to_owned(), |c| c.to_string()),
            s.ttl,
            s.pl.as_deref().unwrap_or("-"),
            self.detail.as_deref().unwrap_or("-"),
        )
    }
}

/// Canonical text trace, newline terminated.
pub fn to_text(records: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_line());
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRecord<'a> {
    seq: u64,
    time: u64,
    node: &'a str,
    kind: &'static str,
    packet_id: u64,
    event: String,
    src: String,
    dst: String,
    protocol: u8,
    code: Option<u64>,
    ttl: u8,
    pl: Option<&'a str>,
    detail: Option<&'a str>,
}

pub fn to_json(records: &[TraceRecord]) -> String {
    let rows: Vec<JsonRecord<'_>> = records
        .iter()
        .map(|r| JsonRecord {
            seq: r.seq,
            time: r.time,
            node: r.node.as_str(),
            kind: r.kind.as_str(),
            packet_id: r.packet_id,
            event: r.event.to_string(),
            src: r.summary.src.to_string(),
            dst: r.summary.dst.to_string(),
            protocol: r.summary.protocol,
            code: r.summary.code.map(GvnCode::value),
            ttl: r.summary.ttl,
            pl: r.summary.pl.as_deref(),
            detail: r.detail.as_deref(),
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("trace rows serialize");
    s.push('\n');
    s
}
