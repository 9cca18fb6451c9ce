// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace oan {

/// Routes spdlog to stderr and sets the level from OAN_LOG
/// (error | info | debug; default info). Unknown values fall back to info.
void init_logging();

} // namespace oan
