// SPDX-License-Identifier: Apache-2.0

//! GVN code assignments for the bundled processing logics.

use crate::codec::GvnCode;

pub const NFV: GvnCode = GvnCode::from_const(0x01);
pub const ICN: GvnCode = GvnCode::from_const(0x02);
pub const VPN: GvnCode = GvnCode::from_const(0x03);
/// Carrier for foreign service-layer headers kept as opaque bytes.
pub const OPAQUE_DEMO: GvnCode = GvnCode::MAX;
