// SPDX-License-Identifier: Apache-2.0

use std::process::ExitCode;

use clap::Parser;
use gvn::cli::{execute, Cli};

fn main() -> ExitCode {
    execute(Cli::parse())
}
