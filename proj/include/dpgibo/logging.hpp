// Copyright 2026 The dpgibo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <iostream>
#include <string>

namespace dpgibo {

inline std::atomic<bool>& log_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void log_warning(const std::string& msg) {
  if (log_enabled().load()) std::cerr << "[dpgibo] warning: " << msg << "\n";
}

inline void log_info(const std::string& msg) {
  if (log_enabled().load()) std::cerr << "[dpgibo] " << msg << "\n";
}

}  // namespace dpgibo
