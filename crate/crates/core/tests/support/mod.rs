// SPDX-License-Identifier: Apache-2.0

//! Shared test helpers. The oracles here deliberately avoid the crate's
//! codec so they can check it.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::net::{IpAddr, Ipv4Addr, Ipv6Addr};

use gvn::codec::IpPacket;
use gvn::sim::{build_topology, Injection, Scenario, Topology};
use rand::Rng;
use serde_json::{json, Value};

/// One's-complement sum over 16-bit words, written as a plain loop.
/// Octets 10 and 11 (the checksum field) count as zero.
pub fn oracle_checksum(header: &[u8]) -> u16 {
    let mut sum: u64 = 0;
    let mut i = 0;
    while i + 1 < header.len() {
        if i != 10 {
            sum += ((header[i] as u64) << 8) | header[i + 1] as u64;
        }
        i += 2;
    }
    while sum > 0xFFFF {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    !(sum as u16)
}

/// GVN header bytes laid out one octet at a time.
pub fn oracle_gvn_bytes(next: u8, flags: u8, code: u64, pl: &[u8]) -> Vec<u8> {
    let total = 8 + pl.len();
    let mut out = vec![(total / 4) as u8, next, flags];
    let mut shift = 32;
    loop {
        out.push(((code >> shift) & 0xFF) as u8);
        if shift == 0 {
            break;
        }
        shift -= 8;
    }
    out.extend_from_slice(pl);
    out
}

#[derive(Debug, PartialEq, Eq)]
pub struct OracleHeader {
    pub total_len: usize,
    pub next: u8,
    pub flags: u8,
    pub code: u64,
    pub pl: Vec<u8>,
}

/// `None` for any header the format rejects.
pub fn oracle_parse(bytes: &[u8]) -> Option<OracleHeader> {
    let units = *bytes.first()? as usize;
    if units < 2 || units == 255 {
        return None;
    }
    let total = units * 4;
    if bytes.len() < total {
        return None;
    }
    let mut code = 0u64;
    for b in &bytes[3..8] {
        code = code * 256 + *b as u64;
    }
    Some(OracleHeader { total_len: total, next: bytes[1], flags: bytes[2], code, pl: bytes[8..total].to_vec() })
}

pub fn random_packet<R: Rng>(rng: &mut R, v6: bool, payload_len: usize) -> IpPacket {
    let payload: Vec<u8> = (0..payload_len).map(|_| rng.gen()).collect();
    let protocol = *[1u8, 6, 17, 58, 200].get(rng.gen_range(0..5)).unwrap();
    let ttl = rng.gen_range(1..=255);
    if v6 {
        IpPacket::new_v6(Ipv6Addr::from(rng.gen::<u128>()), Ipv6Addr::from(rng.gen::<u128>()), protocol, ttl, payload)
            .unwrap()
    } else {
        IpPacket::new_v4(Ipv4Addr::from(rng.gen::<u32>()), Ipv4Addr::from(rng.gen::<u32>()), protocol, ttl, payload)
            .unwrap()
    }
}

/// Packet bytes with the TTL replaced and the checksum recomputed.
pub fn with_ttl(packet: &IpPacket, ttl: u8) -> Vec<u8> {
    let mut p = packet.clone();
    p.set_ttl(ttl);
    p.to_bytes()
}

/// Scenario builder; routes are /32 host routes along BFS shortest paths,
/// ties toward the lexically lowest neighbor.
#[derive(Default, Clone)]
pub struct Net {
    pub seed: u64,
    pub nodes: Vec<(String, String, Vec<String>)>,
    pub links: Vec<(String, String)>,
    pub registries: Vec<Value>,
    pub chains: Vec<Value>,
    pub edge_policies: Vec<Value>,
    pub flow_rules: Vec<Value>,
    pub injections: Vec<Value>,
}

impl Net {
    pub fn node(&mut self, id: &str, kind: &str, addresses: &[&str]) -> &mut Self {
        self.nodes.push((id.into(), kind.into(), addresses.iter().map(|a| a.to_string()).collect()));
        self
    }

    pub fn link(&mut self, a: &str, b: &str) -> &mut Self {
        self.links.push((a.into(), b.into()));
        self
    }

    pub fn registry(&mut self, v: Value) -> &mut Self {
        self.registries.push(v);
        self
    }

    pub fn inject(&mut self, node: &str, time: u64, packet: &IpPacket) -> &mut Self {
        self.injections.push(json!({"node": node, "time": time, "packet": {"hex": hex::encode(packet.to_bytes())}}));
        self
    }

    pub fn routes(&self) -> Vec<Value> {
        let mut adj: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
        for (a, b) in &self.links {
            adj.entry(a).or_default().insert(b);
            adj.entry(b).or_default().insert(a);
        }
        let mut out = Vec::new();
        for (n, _, _) in &self.nodes {
            for (d, _, addrs) in &self.nodes {
                if d == n {
                    continue;
                }
                let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
                dist.insert(d, 0);
                let mut q = VecDeque::from([d.as_str()]);
                while let Some(x) = q.pop_front() {
                    for &y in adj.get(x).into_iter().flatten() {
                        if !dist.contains_key(y) {
                            dist.insert(y, dist[x] + 1);
                            q.push_back(y);
                        }
                    }
                }
                let Some(&dn) = dist.get(n.as_str()) else { continue };
                let hop = adj[n.as_str()].iter().find(|y| dist.get(**y) == Some(&(dn - 1))).unwrap();
                for a in addrs {
                    out.push(json!({"node": n, "prefix": format!("{a}/32"), "next_hop": hop}));
                }
            }
        }
        out
    }

    pub fn to_value(&self) -> Value {
        json!({
            "seed": self.seed,
            "nodes": self.nodes.iter().map(|(id, kind, a)| json!({"id": id, "kind": kind, "addresses": a})).collect::<Vec<_>>(),
            "links": self.links.iter().map(|(a, b)| json!({"a": a, "b": b})).collect::<Vec<_>>(),
            "routes": self.routes(),
            "registries": self.registries,
            "chains": self.chains,
            "edge_policies": self.edge_policies,
            "flow_rules": self.flow_rules,
            "injections": self.injections,
        })
    }

    pub fn build(&self) -> (Topology, Vec<Injection>) {
        let scenario = Scenario::from_json(&self.to_value().to_string()).expect("scenario parses");
        build_topology(&scenario).expect("topology builds")
    }
}

pub fn v4(s: &str) -> IpAddr {
    s.parse().unwrap()
}

/// Trace text with the node-kind column blanked.
pub fn without_kind(text: &str) -> String {
    text.lines()
        .map(|l| {
            let mut cols: Vec<&str> = l.split('\t').collect();
            cols[3] = "*";
            cols.join("\t")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn bundled_scenarios() -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

pub fn load(path: &std::path::Path) -> (Topology, Vec<Injection>, u64) {
    let scenario = Scenario::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    let limit = scenario.max_steps.unwrap_or(gvn::cli::DEFAULT_MAX_STEPS);
    let (t, i) = build_topology(&scenario).unwrap();
    (t, i, limit)
}
