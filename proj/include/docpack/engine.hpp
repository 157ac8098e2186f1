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

#include "docpack/partition.hpp"

namespace docpack {

struct DatasetConfig {
  std::string name = "dataset";
  std::string primary_key = "id";
  uint32_t partitions = 4;
  bool tuple_compactor = true;
  std::string compression = "off";  // "off", "identity", "deflate"
  uint64_t memtable_bytes = 8ull << 20;
  uint64_t merge_max_bytes = 64ull << 20;
  uint32_t merge_tolerable_count = 5;
  uint32_t page_size = kDefaultLogicalPageSize;
  bool wal_sync = true;

  std::string to_json() const;
  static DatasetConfig from_json(const std::string& text);
};

/// An embeddable multi-partition dataset. Records are hash-partitioned on
/// the primary key across P in-process partitions; every partition runs its
/// own LSM lifecycle and schema. Opening is always the recovery path.
class Engine {
 public:
  static void create(const std::filesystem::path& dir, const DatasetConfig& cfg);
  static std::unique_ptr<Engine> open(const std::filesystem::path& dir);

  const DatasetConfig& config() const { return cfg_; }
  size_t partition_count() const { return partitions_.size(); }
  Partition& partition(size_t i) { return *partitions_[i]; }
  const Partition& partition(size_t i) const { return *partitions_[i]; }

  Key key_of(const JsonDoc& doc) const;
  size_t route(const Key& key) const { return key.hash() % partitions_.size(); }

  void insert(const JsonDoc& doc);
  void erase(const Key& key);
  void upsert(const JsonDoc& doc);
  std::optional<JsonDoc> lookup(const Key& key);

  void flush_all();
  /// Runs merge policy ticks until quiescent.
  void merge_ticks();

  struct ScanItem {
    uint32_t partition;
    Key key;
    Bytes record;
    ComponentId source;
  };
  /// All live records across partitions, in global key order.
  std::vector<ScanItem> scan() const;

  /// Single-component build per partition from an unsorted document batch.
  /// Partitions must be empty; duplicate keys are an error.
  void bulk_load(std::vector<JsonDoc> docs);

  uint64_t live_record_count() const;

 private:
  Engine(DatasetConfig cfg, std::filesystem::path dir);

  DatasetConfig cfg_;
  std::filesystem::path dir_;
  std::vector<std::unique_ptr<Partition>> partitions_;
};

}  // namespace docpack
