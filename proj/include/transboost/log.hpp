/*
 * Copyright 2026 The TransBoost Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace transboost::log {

enum class Level { Debug = 0, Info = 1, Warn = 2 };

// TRANSBOOST_LOG=debug|info selects verbosity; anything else means info.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("TRANSBOOST_LOG");
    if (env != nullptr && std::string_view(env) == "debug") return Level::Debug;
    return Level::Info;
  }();
  return level;
}

inline void write(Level level, std::string_view message) {
  if (level < threshold()) return;
  static std::mutex mu;
  static constexpr std::string_view names[] = {"debug", "info", "warn"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[transboost " << names[static_cast<int>(level)] << "] " << message << '\n';
}

inline void debug(std::string_view message) { write(Level::Debug, message); }
inline void info(std::string_view message) { write(Level::Info, message); }
inline void warn(std::string_view message) { write(Level::Warn, message); }

}  // namespace transboost::log
