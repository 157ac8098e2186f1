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

#include <compare>
#include <memory>
#include <optional>
#include <variant>

#include "docpack/paged_file.hpp"
#include "docpack/schema.hpp"

namespace docpack {

// ---------------------------------------------------------------------------
// On-disk LSM component: sorted length-prefixed entries followed by a
// metadata page (the file's last logical page):
//
//   entry:       u32 key length | key bytes | u8 kind (0 record, 1 tombstone)
//                | record bytes (self-framing, for records)
//   key bytes:   u8 type (0 int64, 1 string) | 8-byte LE int or raw string
//   metadata:    "CMET" | u8 validity (0x00 invalid / 0xFF valid) | u64 lo |
//                u64 hi | u64 entry count | u64 record count | u64 tombstone
//                count | u64 data bytes | u32+min key | u32+max key |
//                u32+schema blob | zero padding
//
// The validity byte is flipped in place after everything else is synced; a
// component with an unset bit is garbage from a crashed flush/merge and is
// removed at recovery. With compression enabled the metadata page is stored
// raw (codec bypassed) so the flip stays a plain pwrite.
// ---------------------------------------------------------------------------

struct ComponentId {
  uint64_t lo = 0;
  uint64_t hi = 0;

  bool operator==(const ComponentId&) const = default;
  auto operator<=>(const ComponentId&) const = default;
  bool subsumes(const ComponentId& other) const {
    return (lo <= other.lo && other.hi <= hi) && !(*this == other);
  }
  std::string to_string() const {
    return "c_" + std::to_string(lo) + "_" + std::to_string(hi);
  }
};

/// Sentinel id for in-memory (not yet flushed) records in scan results.
constexpr ComponentId kMemComponentId{UINT64_MAX, UINT64_MAX};

/// Primary key: int64 or string, ordered by kind then value.
class Key {
 public:
  Key() : v_(int64_t{0}) {}
  explicit Key(int64_t v) : v_(v) {}
  explicit Key(std::string v) : v_(std::move(v)) {}

  bool is_int() const { return std::holds_alternative<int64_t>(v_); }
  int64_t as_int() const { return std::get<int64_t>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }

  bool operator==(const Key&) const = default;
  auto operator<=>(const Key&) const = default;

  Bytes serialize() const;
  static Key deserialize(ByteSpan bytes);
  uint64_t hash() const;  // fnv1a over the serialized form

  /// Key as a JSON scalar (for output) and back.
  JsonDoc to_doc() const;
  static Key from_doc_value(const JsonDoc& v);  // int64/string scalars only

  std::string to_string() const;

 private:
  std::variant<int64_t, std::string> v_;
};

enum class EntryKind : uint8_t { Record = 0, Tombstone = 1 };

struct ComponentMeta {
  ComponentId id;
  uint64_t entry_count = 0;
  uint64_t record_count = 0;
  uint64_t tombstone_count = 0;
  uint64_t data_bytes = 0;
  std::optional<Key> min_key;
  std::optional<Key> max_key;
  Bytes schema_blob;
};

std::filesystem::path component_path(const std::filesystem::path& dir,
                                     ComponentId id);
std::optional<ComponentId> parse_component_filename(const std::string& name);
void remove_component_files(const std::filesystem::path& data_path);

class ComponentWriter {
 public:
  /// codec == nullptr writes plain pages.
  ComponentWriter(const std::filesystem::path& dir, ComponentId id,
                  uint32_t page_size, const PageCodec* codec);

  void add_record(const Key& key, ByteSpan record_bytes);
  void add_tombstone(const Key& key);

  /// Writes the metadata page with the validity byte unset and syncs.
  void finish(ByteSpan schema_blob);
  /// Flips the validity byte in place and syncs: the commit point.
  void set_valid();

  const std::filesystem::path& path() const { return path_; }
  uint64_t entry_count() const { return meta_.entry_count; }

 private:
  void add_entry(const Key& key, EntryKind kind, ByteSpan record_bytes);

  std::filesystem::path path_;
  std::unique_ptr<PageWriter> pages_;
  PageStreamWriter stream_;
  ComponentMeta meta_;
  uint64_t meta_page_index_ = 0;
  bool finished_ = false;
};

class ComponentReader {
 public:
  enum class OpenStatus {
    Valid,
    Invalid,   // unset validity bit, missing LAF, torn metadata
    Corrupt,   // validity set but metadata unusable: fatal upstream
  };

  struct OpenResult {
    OpenStatus status;
    std::shared_ptr<ComponentReader> reader;  // set when Valid
    std::string detail;
  };

  static OpenResult open(const std::filesystem::path& data_path,
                         uint32_t page_size);

  const ComponentMeta& meta() const { return meta_; }
  ComponentId id() const { return meta_.id; }
  const std::shared_ptr<const SchemaStore>& schema() const { return schema_; }
  uint64_t physical_bytes() const { return pages_->physical_bytes(); }
  const std::filesystem::path& path() const { return path_; }
  const PageReader& pages() const { return *pages_; }

  struct Entry {
    Key key;
    EntryKind kind;
    Bytes record;  // empty for tombstones
  };

  /// Point lookup by binary search over the in-memory key index.
  std::optional<Entry> find(const Key& key) const;

  uint64_t entry_count() const { return index_.size(); }
  Entry entry_at(size_t i) const;
  const Key& key_at(size_t i) const { return index_[i].key; }
  EntryKind kind_at(size_t i) const { return index_[i].kind; }

 private:
  struct IndexEntry {
    Key key;
    uint64_t offset;  // of the record body; 0 for tombstones
    uint32_t length;
    EntryKind kind;
  };

  ComponentReader(std::filesystem::path path, std::unique_ptr<PageReader> pages,
                  ComponentMeta meta);
  void build_index();

  std::filesystem::path path_;
  std::unique_ptr<PageReader> pages_;
  ComponentMeta meta_;
  std::shared_ptr<const SchemaStore> schema_;
  std::vector<IndexEntry> index_;
};

}  // namespace docpack
