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

#pragma once

#include <string>

namespace docpack::failpoint {

// Crash-injection sites for recovery testing. Sites are inert until armed,
// either programmatically or via DOCPACK_FAILPOINT="<site>:<nth>" in the
// environment (used by the crash-test child process). Named sites:
//   flush:before_validity   flush:after_validity
//   merge:before_validity   merge:after_validity
//   op:after
struct InjectedCrash {
  std::string site;
};

constexpr int kCrashExitCode = 47;

/// Called at each site. Counts down; on the nth hit either _exit(47)
/// (exit mode) or throws InjectedCrash (throw mode, for in-process tests).
void hit(const char* site);

void arm_exit(const std::string& site, uint64_t nth);
void arm_throw(const std::string& site, uint64_t nth);
void arm_from_env();
void reset();

}  // namespace docpack::failpoint
