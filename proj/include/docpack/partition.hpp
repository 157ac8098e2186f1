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

#include <map>
#include <mutex>
#include <set>

#include "docpack/component.hpp"
#include "docpack/wal.hpp"

namespace docpack {

struct PartitionConfig {
  std::filesystem::path dir;
  std::string pk_field = "id";
  bool compactor_enabled = true;
  uint64_t memtable_budget = 8ull << 20;
  uint64_t merge_max_bytes = 64ull << 20;
  uint32_t merge_tolerable_count = 5;
  uint32_t page_size = kDefaultLogicalPageSize;
  const PageCodec* codec = nullptr;  // nullptr: no page compression
  bool wal_sync = true;
  bool strict_insert = true;
};

struct PartitionCounters {
  uint64_t primary_lookups = 0;  // point lookups done to fetch old images
  uint64_t pk_probes = 0;
  uint64_t flushes = 0;
  uint64_t merges = 0;
  uint64_t wal_appends = 0;
};

/// One LSM partition: memtable + WAL + disk components + live schema +
/// primary-key set. Opening a partition IS recovery; there is no other
/// startup path. All public operations are internally serialized.
class Partition {
 public:
  static std::unique_ptr<Partition> open(PartitionConfig cfg);

  void insert(const Key& key, const JsonDoc& doc);
  void erase(const Key& key);
  void upsert(const Key& key, const JsonDoc& doc);
  std::optional<JsonDoc> lookup(const Key& key);

  /// Seals and writes the memtable; no-op when empty.
  void flush();
  /// Runs the merge policy once; true if a merge happened.
  bool merge_tick();

  struct ScanItem {
    Key key;
    Bytes record;        // VBRecord bytes
    ComponentId source;  // kMemComponentId for memtable records
  };
  /// Live records in key order, honoring recency and tombstones.
  std::vector<ScanItem> scan() const;

  struct ComponentSnapshot {
    ComponentId id;
    std::shared_ptr<const SchemaStore> schema;
    uint64_t physical_bytes;
    uint64_t record_count;
    uint64_t tombstone_count;
  };
  std::vector<ComponentSnapshot> components() const;
  std::shared_ptr<ComponentReader> component_reader(ComponentId id) const;

  const SchemaStore& live_schema() const { return schema_; }
  const vb::DeclaredFields& declared() const { return declared_; }
  const PartitionConfig& config() const { return cfg_; }
  PartitionCounters counters() const;
  size_t live_keys() const;
  size_t memtable_entries() const;

  /// Builds a single component [0,0] from pre-sorted unique-keyed documents;
  /// the partition must be empty.
  void bulk_load(const std::vector<std::pair<Key, JsonDoc>>& sorted_docs);

 private:
  explicit Partition(PartitionConfig cfg);
  void recover();

  struct MemEntry {
    std::optional<vb::VBRecord> record;
    std::optional<AntiSchema> anti;  // pending decrement for the disk image
  };

  // All the private helpers assume mu_ is held.
  void apply_op(WalOp op, const Key& key, const JsonDoc* doc, bool logging);
  void log_op(WalOp op, const Key& key, const JsonDoc* doc);
  void do_flush();
  void do_merge(size_t first, size_t count);
  std::optional<ComponentReader::Entry> newest_disk_entry(const Key& key) const;
  std::optional<AntiSchema> anti_for_disk_image(const Key& key);
  uint64_t memtable_bytes() const { return mem_bytes_; }
  void put_entry(const Key& key, MemEntry entry);
  void open_wal();

  PartitionConfig cfg_;
  vb::DeclaredFields declared_;
  mutable std::mutex mu_;

  std::map<Key, MemEntry> memtable_;
  uint64_t mem_bytes_ = 0;
  std::vector<std::shared_ptr<ComponentReader>> components_;  // oldest first
  SchemaStore schema_;
  std::set<Key> pk_;  // live keys (memtable + disk)
  std::unique_ptr<WalWriter> wal_;
  uint64_t wal_gen_ = 0;
  uint64_t next_seq_ = 0;
  uint64_t next_lsn_ = 1;
  bool recovering_ = false;
  PartitionCounters counters_;
};

}  // namespace docpack
