// Copyright 2026 The Ascribe Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdlib>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

namespace ascribe::log {

/// Routes the default logger to stderr and sets its level from ASCRIBE_LOG
/// (trace, debug, info, warn, error, critical, off). Unset or unrecognized
/// values fall back to `fallback`.
inline spdlog::level::level_enum configure_from_env(spdlog::level::level_enum fallback = spdlog::level::info) {
  auto level = fallback;
  if (const char* env = std::getenv("ASCRIBE_LOG")) {
    const auto parsed = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept that for "off" itself.
    if (parsed != spdlog::level::off || std::string(env) == "off") level = parsed;
  }
  if (!spdlog::get("ascribe")) spdlog::set_default_logger(spdlog::stderr_color_mt("ascribe"));
  spdlog::set_level(level);
  return level;
}

}  // namespace ascribe::log
