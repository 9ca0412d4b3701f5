//
// Copyright 2026 The VEIL Authors
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

#include "veil/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace veil::log {

namespace {

Level initial_level() {
  const char* env = std::getenv("VEIL_LOG");
  if (!env) return Level::info;
  const std::string v(env);
  if (v == "error") return Level::error;
  if (v == "debug") return Level::debug;
  return Level::info;
}

std::atomic<Level> g_level{initial_level()};
std::mutex g_mutex;

void emit(const char* tag, const std::string& msg) {
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << tag << msg << '\n';
}

}  // namespace

Level level() { return g_level.load(); }
void set_level(Level lvl) { g_level.store(lvl); }

void error(const std::string& msg) { emit("[error] ", msg); }

void warn(const std::string& msg) {
  if (level() >= Level::info) emit("[warn] ", msg);
}

void info(const std::string& msg) {
  if (level() >= Level::info) emit("[info] ", msg);
}

void debug(const std::string& msg) {
  if (level() >= Level::debug) emit("[debug] ", msg);
}

}  // namespace veil::log
