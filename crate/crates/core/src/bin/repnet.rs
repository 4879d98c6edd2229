// Copyright 2026 The repnet Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(repnet::cli::run(std::env::args_os()));
}
