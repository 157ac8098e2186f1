// Copyright 2026 The docpack Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "docpack/failpoint.hpp"

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <map>
#include <mutex>

namespace docpack::failpoint {

namespace {

struct Armed {
  uint64_t remaining;
  bool exit_mode;
};

std::mutex g_mu;
std::map<std::string, Armed> g_armed;

}  // namespace

void hit(const char* site) {
  bool fire_exit = false;
  bool fire_throw = false;
  {
    std::lock_guard<std::mutex> lock(g_mu);
    auto it = g_armed.find(site);
    if (it == g_armed.end()) return;
    if (--it->second.remaining > 0) return;
    fire_exit = it->second.exit_mode;
    fire_throw = !fire_exit;
    g_armed.erase(it);
  }
  if (fire_exit) {
    // Simulated crash: no destructors, no flushing.
    std::fflush(nullptr);
    _exit(kCrashExitCode);
  }
  if (fire_throw) throw InjectedCrash{site};
}

void arm_exit(const std::string& site, uint64_t nth) {
  std::lock_guard<std::mutex> lock(g_mu);
  g_armed[site] = {nth, true};
}

void arm_throw(const std::string& site, uint64_t nth) {
  std::lock_guard<std::mutex> lock(g_mu);
  g_armed[site] = {nth, false};
}

void arm_from_env() {
  const char* spec = std::getenv("DOCPACK_FAILPOINT");
  if (!spec) return;
  std::string s(spec);
  size_t colon = s.rfind(':');
  if (colon == std::string::npos) return;
  uint64_t nth = std::strtoull(s.c_str() + colon + 1, nullptr, 10);
  if (nth == 0) nth = 1;
  arm_exit(s.substr(0, colon), nth);
}

void reset() {
  std::lock_guard<std::mutex> lock(g_mu);
  g_armed.clear();
}

}  // namespace docpack::failpoint
