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

#include <vector>

#include "docpack/component.hpp"
#include "docpack/io.hpp"

namespace docpack {

// Write-ahead log, one segment file per memtable generation
// (wal_<gen>.log). Record framing:
//
//   u32 body length | body | u32 crc32c(body)
//   body: u64 lsn | u8 op | u32 key length | key bytes |
//         u32 payload length | payload (JSON text; empty for deletes)
//
// Replay stops at the first bad checksum or truncated tail.

enum class WalOp : uint8_t { Insert = 0, Delete = 1, Upsert = 2 };

struct WalRecord {
  uint64_t lsn = 0;
  WalOp op = WalOp::Insert;
  Key key;
  std::string payload;
};

class WalWriter {
 public:
  WalWriter(const std::filesystem::path& path, bool sync_each);

  void append(const WalRecord& rec);
  const std::filesystem::path& path() const { return file_.path(); }
  void sync() { file_.sync(); }

 private:
  File file_;
  bool sync_each_;
};

/// Reads every intact record; a torn or corrupt tail ends the replay
/// silently (that is the crash contract, not an error).
std::vector<WalRecord> wal_replay(const std::filesystem::path& path);

std::filesystem::path wal_path(const std::filesystem::path& dir, uint64_t gen);
std::optional<uint64_t> parse_wal_filename(const std::string& name);

}  // namespace docpack
