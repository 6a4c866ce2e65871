// SPDX-License-Identifier: Apache-2.0

//! Command implementations behind the `gvn` binary.

use std::fmt::{self, Write as _};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::builtin;
use crate::codec::{classify, ipv4_header_checksum, parse_gvn, Classification, GvnHeader, IpPacket};
use crate::pl::DropReason;
use crate::sim::{build_topology, run, to_json, to_text, RunStatus, Scenario, SimError, TopologyError};

pub const DEFAULT_MAX_STEPS: u64 = 10_000;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("bad hex: {0}")]
    BadHex(#[from] hex::FromHexError),
    #[error("{0}")]
    Decode(String),
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io { path: path.to_owned(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum TraceFormat {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunReport {
    pub scenario: PathBuf,
    pub trace: PathBuf,
    pub status: RunStatus,
    pub steps: u64,
    pub injected: usize,
    pub delivered: usize,
    /// Nonzero counts only, in reason order.
    pub dropped: Vec<(DropReason, usize)>,
    pub in_flight: usize,
}

impl RunReport {
    pub fn dropped_total(&self) -> usize {
        self.dropped.iter().map(|(_, n)| n).sum()
    }

    pub fn balanced(&self) -> bool {
        self.injected == self.delivered + self.dropped_total() + self.in_flight
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.scenario.display())?;
        writeln!(f, "trace: {}", self.trace.display())?;
        let status = match self.status {
            RunStatus::Quiescent => "quiescent",
            RunStatus::StepLimitExceeded => "step limit exceeded",
        };
        writeln!(f, "status: {status}")?;
        writeln!(f, "steps: {}", self.steps)?;
        writeln!(f, "injected: {}", self.injected)?;
        writeln!(f, "delivered: {}", self.delivered)?;
        writeln!(f, "dropped: {}", self.dropped_total())?;
        for (reason, n) in &self.dropped {
            writeln!(f, "  {reason}: {n}")?;
        }
        write!(f, "in_flight: {}", self.in_flight)
    }
}

/// Runs a scenario file and writes the trace, even when the step limit is hit.
pub fn cmd_run(
    scenario_path: &Path,
    trace_path: &Path,
    format: TraceFormat,
    max_steps: Option<u64>,
) -> Result<RunReport, CliError> {
    let text = read(scenario_path)?;
    let text = String::from_utf8(text).map_err(|e| TopologyError::SchemaError(e.to_string()))?;
    let scenario = Scenario::from_json(&text)?;
    let (topo, injections) = build_topology(&scenario)?;
    let limit = max_steps.or(scenario.max_steps).unwrap_or(DEFAULT_MAX_STEPS);
    let outcome = run(&topo, &injections, limit)?;

    let rendered = match format {
        TraceFormat::Text => to_text(&outcome.trace),
        TraceFormat::Json => to_json(&outcome.trace),
    };
    fs::write(trace_path, rendered).map_err(|source| CliError::Io { path: trace_path.to_owned(), source })?;

    let dropped = DropReason::ALL
        .iter()
        .map(|&r| (r, outcome.drops.iter().filter(|d| d.reason == r).count()))
        .filter(|(_, n)| *n > 0)
        .collect();
    Ok(RunReport {
        scenario: scenario_path.to_owned(),
        trace: trace_path.to_owned(),
        status: outcome.status,
        steps: outcome.steps,
        injected: outcome.injected,
        delivered: outcome.deliveries.len(),
        dropped,
        in_flight: outcome.in_flight,
    })
}

fn decode_hex(input: &str) -> Result<Vec<u8>, CliError> {
    let compact: String = input.chars().filter(|c| !c.is_ascii_whitespace() && *c != ':').collect();
    let compact = compact.strip_prefix("0x").unwrap_or(&compact);
    Ok(hex::decode(compact)?)
}

fn header_line(h: &GvnHeader) -> String {
    let len = h.wire_len();
    format!("length={len} next={} flags=0x{:02X} code={}", h.next_header, h.flags.0, h.code)
}

fn describe_header(out: &mut String, h: &GvnHeader) {
    out.push_str(&header_line(h));
    if h.flags.drop_on_unknown() {
        out.push_str(" drop_on_unknown");
    }
    out.push('\n');
    if !h.pl_data.is_empty() {
        let _ = writeln!(out, "pl_data={}", hex::encode(&h.pl_data));
    }
    if let Some(pl) = builtin::describe(h) {
        let _ = writeln!(out, "pl: {pl}");
    }
}

/// Field dump of an IP packet or, if the bytes do not start an IP packet or
/// `bare_header` is set, of a GVN header alone.
pub fn cmd_decode(input: &str, bare_header: bool) -> Result<String, CliError> {
    let bytes = decode_hex(input)?;
    let mut out = String::new();
    let packet = match bytes.first().map(|b| b >> 4) {
        Some(4 | 6) if !bare_header => IpPacket::parse(&bytes).ok(),
        _ => None,
    };
    let Some(packet) = packet else {
        let header = parse_gvn(&bytes).map_err(|e| CliError::Decode(e.to_string()))?;
        describe_header(&mut out, &header);
        return Ok(out);
    };

    let _ = write!(
        out,
        "ipv{} src={} dst={} protocol={} ttl={} length={}",
        packet.version(),
        packet.src(),
        packet.dst(),
        packet.protocol(),
        packet.ttl(),
        packet.total_len()
    );
    if packet.is_v4() {
        let stored = u16::from_be_bytes([packet.header_bytes()[10], packet.header_bytes()[11]]);
        let verdict = if packet.checksum_valid() { "valid" } else { "invalid" };
        let _ = write!(out, " checksum=0x{stored:04X} ({verdict})");
    }
    out.push('\n');
    match classify(&packet) {
        Classification::Gvn(h) => describe_header(&mut out, &h),
        Classification::Legacy { malformed: Some(e), .. } => {
            let _ = writeln!(out, "gvn diagnostic: {e}");
        }
        Classification::Legacy { malformed: None, .. } => {}
    }
    Ok(out)
}

/// Checksum of an IPv4 header given in hex; the checksum field is ignored.
pub fn cmd_checksum(input: &str) -> Result<String, CliError> {
    let bytes = decode_hex(input)?;
    let sum = ipv4_header_checksum(&bytes).map_err(|e| CliError::Decode(e.to_string()))?;
    let stored = u16::from_be_bytes([bytes[10], bytes[11]]);
    let note = if stored == sum { "matches" } else { "differs from" };
    Ok(format!("0x{sum:04X} ({note} stored 0x{stored:04X})\n"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceDiff {
    Identical,
    /// 1-based line number, then the line from each side (absent past EOF).
    Diverge {
        line: usize,
        a: Option<String>,
        b: Option<String>,
    },
}

impl fmt::Display for TraceDiff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceDiff::Identical => f.write_str("identical"),
            TraceDiff::Diverge { line, a, b } => {
                writeln!(f, "traces differ at line {line}")?;
                writeln!(f, "< {}", a.as_deref().unwrap_or("<end of file>"))?;
                write!(f, "> {}", b.as_deref().unwrap_or("<end of file>"))
            }
        }
    }
}

pub fn diff_bytes(a: &[u8], b: &[u8]) -> TraceDiff {
    if a == b {
        return TraceDiff::Identical;
    }
    let lines = |s: &[u8]| -> Vec<String> {
        s.split_inclusive(|&c| c == b'\n').map(|l| String::from_utf8_lossy(l).into_owned()).collect()
    };
    let (la, lb) = (lines(a), lines(b));
    let mut i = 0;
    while i < la.len() && i < lb.len() && la[i] == lb[i] {
        i += 1;
    }
    let show = |l: Option<&String>| l.map(|s| s.trim_end_matches('\n').to_owned());
    TraceDiff::Diverge { line: i + 1, a: show(la.get(i)), b: show(lb.get(i)) }
}

pub fn cmd_diff_trace(a: &Path, b: &Path) -> Result<TraceDiff, CliError> {
    Ok(diff_bytes(&read(a)?, &read(b)?))
}

#[derive(Debug, Parser)]
#[command(name = "gvn", version, about = "GVN header tools and network simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its trace.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: TraceFormat,
        #[arg(long)]
        max_steps: Option<u64>,
    },
    /// Decode an IP packet or a bare GVN header given in hex.
    Decode {
        hex: String,
        /// Treat the input as a bare GVN header.
        #[arg(long)]
        header: bool,
    },
    /// Compute the IPv4 header checksum of a header given in hex.
    Checksum { hex: String },
    /// Compare two trace files byte for byte.
    DiffTrace { a: PathBuf, b: PathBuf },
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Executes a parsed command, printing to stdout/stderr, and returns the
/// process exit status.
pub fn execute(cli: Cli) -> ExitCode {
    let result = match cli.command {
        Command::Run { scenario, trace, format, max_steps } => cmd_run(&scenario, &trace, format, max_steps).map(|r| {
            println!("{r}");
            match r.status {
                RunStatus::Quiescent => EXIT_OK,
                RunStatus::StepLimitExceeded => {
                    eprintln!("error: step limit exceeded after {} steps", r.steps);
                    EXIT_RUNTIME
                }
            }
        }),
        Command::Decode { hex, header } => cmd_decode(&hex, header).map(|s| {
            print!("{s}");
            EXIT_OK
        }),
        Command::Checksum { hex } => cmd_checksum(&hex).map(|s| {
            print!("{s}");
            EXIT_OK
        }),
        Command::DiffTrace { a, b } => cmd_diff_trace(&a, &b).map(|d| {
            println!("{d}");
            if d == TraceDiff::Identical {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            }
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
