// SPDX-License-Identifier: Apache-2.0

//! Generalized Virtual Networking: a layer-3.5 header carried as IP
//! protocol 254, pluggable processing logics keyed by a 40-bit code, and a
//! deterministic simulator for mixed legacy/GVN networks.

pub mod builtin;
pub mod cli;
pub mod codec;
pub mod pl;
pub mod routing;
pub mod sim;
