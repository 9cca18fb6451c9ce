// Copyright (c) 2026, the oan authors
// SPDX-License-Identifier: Apache-2.0

#include "oan/logging.hpp"

#include <cstdlib>
#include <string_view>

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace oan {

void init_logging() {
    static bool done = false;
    if (!done) {
        spdlog::set_default_logger(spdlog::stderr_logger_st("oan"));
        spdlog::set_pattern("[%l] %v");
        done = true;
    }
    const char* env = std::getenv("OAN_LOG");
    const std::string_view level = env ? env : "info";
    if (level == "error") {
        spdlog::set_level(spdlog::level::err);
    } else if (level == "debug") {
        spdlog::set_level(spdlog::level::debug);
    } else {
        spdlog::set_level(spdlog::level::info);
    }
}

} // namespace oan
