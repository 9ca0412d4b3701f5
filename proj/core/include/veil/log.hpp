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

#ifndef VEIL_LOG_HPP_
#define VEIL_LOG_HPP_

#include <string>

namespace veil::log {

enum class Level { error = 0, info = 1, debug = 2 };

/// Initial level comes from VEIL_LOG={error,info,debug}; default info.
Level level();
void set_level(Level lvl);

void error(const std::string& msg);
void warn(const std::string& msg);  // printed at info level
void info(const std::string& msg);
void debug(const std::string& msg);

}  // namespace veil::log

#endif  // VEIL_LOG_HPP_
