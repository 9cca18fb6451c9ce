// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>

namespace oan::cli {

/// Entry point shared by the oan_cli binary and the tests. Subcommands:
/// gen-data, train, eval, ablate, sweep, gradcheck. Returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace oan::cli
