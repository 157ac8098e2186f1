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

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "docpack/codec.hpp"
#include "docpack/io.hpp"

namespace docpack {

// ---------------------------------------------------------------------------
// Fixed-size logical pages over variable-size physical extents. Compressed
// files carry a Look-Aside File (LAF) sidecar named <data>.laf:
//
//   "CLAF" | u8 codec id | u32 logical page size | u64 entry count |
//   packed 12-byte entries (u64 offset, u32 length)
//
// The top bit of an entry's length flags a page stored raw because
// compression expanded it. Lengths are < 2^31, so the 12-byte entry size is
// preserved. The data file is raw concatenated extents with no framing; the
// LAF is authoritative.
// ---------------------------------------------------------------------------

constexpr uint32_t kDefaultLogicalPageSize = 128 * 1024;
constexpr uint32_t kLafPageSize = 128 * 1024;
constexpr size_t kLafEntrySize = 12;
constexpr size_t kLafHeaderSize = 17;
constexpr uint32_t kRawExtentFlag = 0x80000000u;

/// Entries that fit in one LAF page: floor(page / 12); 10,922 at 128 KiB.
constexpr uint64_t laf_page_capacity(uint64_t laf_page_size) {
  return laf_page_size / kLafEntrySize;
}

struct LafEntry {
  uint64_t offset = 0;
  uint32_t length = 0;  // compressed length, or logical size when raw
  bool raw = false;
};

class PageWriter {
 public:
  virtual ~PageWriter() = default;
  virtual uint32_t page_size() const = 0;
  virtual uint64_t page_count() const = 0;
  /// Appends the page with the given index; indexes must arrive in order.
  /// force_raw bypasses the codec so the page stays byte-addressable.
  virtual void write_page(uint64_t page_index, ByteSpan page,
                          bool force_raw = false) = 0;
  /// Flushes everything (data + LAF) durably.
  virtual void finalize() = 0;
  /// In-place overwrite inside a raw-stored page, synced. Only valid after
  /// finalize; the validity-bit protocol uses it.
  virtual void patch_raw_page(uint64_t page_index, uint32_t offset_in_page,
                              ByteSpan bytes) = 0;
};

struct PageReadStats {
  uint64_t laf_page_reads = 0;
  uint64_t data_extent_reads = 0;
};

class PageReader {
 public:
  virtual ~PageReader() = default;
  virtual uint32_t page_size() const = 0;
  virtual uint64_t page_count() const = 0;
  virtual Bytes read_page(uint64_t index) const = 0;
  virtual PageReadStats read_stats() const = 0;
  virtual uint64_t physical_bytes() const = 0;  // data (+ LAF) on disk
};

std::unique_ptr<PageWriter> make_plain_page_writer(
    const std::filesystem::path& path, uint32_t page_size);
std::unique_ptr<PageWriter> make_compressed_page_writer(
    const std::filesystem::path& path, uint32_t page_size,
    const PageCodec& codec);

std::unique_ptr<PageReader> make_plain_page_reader(
    const std::filesystem::path& path, uint32_t page_size);
std::unique_ptr<PageReader> make_compressed_page_reader(
    const std::filesystem::path& path);

/// Buffers an append-only byte stream into full logical pages.
class PageStreamWriter {
 public:
  explicit PageStreamWriter(PageWriter& out) : out_(out) {}

  void append(ByteSpan data);
  uint64_t bytes_appended() const { return bytes_; }

  /// Zero-fills and flushes the partial page, if any.
  void pad_to_boundary();

 private:
  PageWriter& out_;
  Bytes buf_;
  uint64_t bytes_ = 0;
  uint64_t next_page_ = 0;
};

/// Random-access byte reads over a PageReader, spanning page boundaries.
/// Caches the last page touched; scans are sequential so one page of cache
/// is enough.
class PageStreamReader {
 public:
  explicit PageStreamReader(const PageReader& in) : in_(in) {}

  Bytes read(uint64_t offset, size_t len) const;

 private:
  const PageReader& in_;
  mutable std::optional<uint64_t> cached_index_;
  mutable Bytes cached_page_;
};

}  // namespace docpack
