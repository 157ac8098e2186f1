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

#include "docpack/wal.hpp"

#include <cinttypes>
#include <cstdio>

namespace docpack {

WalWriter::WalWriter(const std::filesystem::path& path, bool sync_each)
    : file_(File::open_append(path)), sync_each_(sync_each) {}

void WalWriter::append(const WalRecord& rec) {
  Bytes body;
  ByteWriter b(body);
  b.u64(rec.lsn);
  b.u8(static_cast<uint8_t>(rec.op));
  Bytes kb = rec.key.serialize();
  b.u32(static_cast<uint32_t>(kb.size()));
  b.raw(ByteSpan(kb));
  b.u32(static_cast<uint32_t>(rec.payload.size()));
  b.raw(rec.payload);

  Bytes frame;
  ByteWriter f(frame);
  f.u32(static_cast<uint32_t>(body.size()));
  f.raw(ByteSpan(body));
  f.u32(crc32c(ByteSpan(body)));
  file_.append(ByteSpan(frame));
  if (sync_each_) file_.sync();
}

std::vector<WalRecord> wal_replay(const std::filesystem::path& path) {
  std::vector<WalRecord> out;
  File f = File::open_ro(path);
  uint64_t size = f.size();
  uint64_t pos = 0;
  while (pos + 8 <= size) {
    Bytes lenb = f.pread(pos, 4);
    uint32_t body_len = ByteReader{ByteSpan(lenb)}.u32();
    if (pos + 4 + body_len + 4 > size) break;  // torn tail
    Bytes body = f.pread(pos + 4, body_len);
    Bytes crcb = f.pread(pos + 4 + body_len, 4);
    uint32_t want = ByteReader{ByteSpan(crcb)}.u32();
    if (crc32c(ByteSpan(body)) != want) break;  // corrupt tail ends replay
    try {
      ByteReader r{ByteSpan(body)};
      WalRecord rec;
      rec.lsn = r.u64();
      uint8_t op = r.u8();
      if (op > 2) break;
      rec.op = static_cast<WalOp>(op);
      uint32_t klen = r.u32();
      rec.key = Key::deserialize(r.raw(klen));
      uint32_t plen = r.u32();
      rec.payload = r.str(plen);
      out.push_back(std::move(rec));
    } catch (const FormatError&) {
      break;
    }
    pos += 4 + body_len + 4;
  }
  return out;
}

std::filesystem::path wal_path(const std::filesystem::path& dir, uint64_t gen) {
  return dir / ("wal_" + std::to_string(gen) + ".log");
}

std::optional<uint64_t> parse_wal_filename(const std::string& name) {
  uint64_t gen;
  char trailing;
  if (std::sscanf(name.c_str(), "wal_%" SCNu64 ".lo%c", &gen, &trailing) == 2 &&
      trailing == 'g' && name == "wal_" + std::to_string(gen) + ".log")
    return gen;
  return std::nullopt;
}

}  // namespace docpack
