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

#include "docpack/engine.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

namespace docpack {

std::string DatasetConfig::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["primary_key"] = primary_key;
  j["partitions"] = partitions;
  j["tuple_compactor"] = tuple_compactor;
  j["compression"] = compression;
  j["memtable_bytes"] = memtable_bytes;
  j["merge_max_bytes"] = merge_max_bytes;
  j["merge_tolerable_count"] = merge_tolerable_count;
  j["page_size"] = page_size;
  j["wal_sync"] = wal_sync;
  return j.dump(2);
}

DatasetConfig DatasetConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  DatasetConfig cfg;
  cfg.name = j.at("name").get<std::string>();
  cfg.primary_key = j.at("primary_key").get<std::string>();
  cfg.partitions = j.at("partitions").get<uint32_t>();
  cfg.tuple_compactor = j.at("tuple_compactor").get<bool>();
  cfg.compression = j.at("compression").get<std::string>();
  cfg.memtable_bytes = j.at("memtable_bytes").get<uint64_t>();
  cfg.merge_max_bytes = j.at("merge_max_bytes").get<uint64_t>();
  cfg.merge_tolerable_count = j.at("merge_tolerable_count").get<uint32_t>();
  cfg.page_size = j.at("page_size").get<uint32_t>();
  cfg.wal_sync = j.at("wal_sync").get<bool>();
  if (cfg.partitions < 1) throw ConfigError("partitions must be >= 1");
  if (cfg.primary_key.empty()) throw ConfigError("primary key field empty");
  if (cfg.compression != "off") codec_by_name(cfg.compression);
  return cfg;
}

Engine::Engine(DatasetConfig cfg, std::filesystem::path dir)
    : cfg_(std::move(cfg)), dir_(std::move(dir)) {
  const PageCodec* codec =
      cfg_.compression == "off" ? nullptr : &codec_by_name(cfg_.compression);
  for (uint32_t i = 0; i < cfg_.partitions; ++i) {
    PartitionConfig pc;
    pc.dir = dir_ / ("p" + std::to_string(i));
    pc.pk_field = cfg_.primary_key;
    pc.compactor_enabled = cfg_.tuple_compactor;
    pc.memtable_budget = cfg_.memtable_bytes;
    pc.merge_max_bytes = cfg_.merge_max_bytes;
    pc.merge_tolerable_count = cfg_.merge_tolerable_count;
    pc.page_size = cfg_.page_size;
    pc.codec = codec;
    pc.wal_sync = cfg_.wal_sync;
    partitions_.push_back(Partition::open(std::move(pc)));
  }
}

void Engine::create(const std::filesystem::path& dir, const DatasetConfig& cfg) {
  if (std::filesystem::exists(dir / "dataset.json"))
    throw ConfigError("dataset already exists at " + dir.string());
  if (cfg.partitions < 1) throw ConfigError("partitions must be >= 1");
  if (cfg.primary_key.empty()) throw ConfigError("primary key field empty");
  if (cfg.compression != "off") codec_by_name(cfg.compression);
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "dataset.json");
  out << cfg.to_json() << "\n";
  out.close();
  sync_dir(dir);
}

std::unique_ptr<Engine> Engine::open(const std::filesystem::path& dir) {
  std::ifstream in(dir / "dataset.json");
  if (!in) throw ConfigError("no dataset at " + dir.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  DatasetConfig cfg = DatasetConfig::from_json(text);
  return std::unique_ptr<Engine>(new Engine(std::move(cfg), dir));
}

Key Engine::key_of(const JsonDoc& doc) const {
  if (!doc.is_object())
    throw EngineError("document root must be an object");
  const JsonDoc* v = doc.find(cfg_.primary_key);
  if (!v)
    throw EngineError("key extraction failure: missing field '" +
                      cfg_.primary_key + "'");
  return Key::from_doc_value(*v);
}

void Engine::insert(const JsonDoc& doc) {
  Key key = key_of(doc);
  Partition& p = *partitions_[route(key)];
  p.insert(key, doc);
  p.merge_tick();
}

void Engine::erase(const Key& key) {
  Partition& p = *partitions_[route(key)];
  p.erase(key);
  p.merge_tick();
}

void Engine::upsert(const JsonDoc& doc) {
  Key key = key_of(doc);
  Partition& p = *partitions_[route(key)];
  p.upsert(key, doc);
  p.merge_tick();
}

std::optional<JsonDoc> Engine::lookup(const Key& key) {
  return partitions_[route(key)]->lookup(key);
}

void Engine::flush_all() {
  for (auto& p : partitions_) p->flush();
}

void Engine::merge_ticks() {
  for (auto& p : partitions_)
    while (p->merge_tick()) {
    }
}

std::vector<Engine::ScanItem> Engine::scan() const {
  std::vector<ScanItem> out;
  for (uint32_t i = 0; i < partitions_.size(); ++i) {
    for (auto& item : partitions_[i]->scan())
      out.push_back({i, std::move(item.key), std::move(item.record),
                     item.source});
  }
  std::sort(out.begin(), out.end(),
            [](const ScanItem& a, const ScanItem& b) { return a.key < b.key; });
  return out;
}

void Engine::bulk_load(std::vector<JsonDoc> docs) {
  std::vector<std::vector<std::pair<Key, JsonDoc>>> per_partition(
      partitions_.size());
  for (JsonDoc& d : docs) {
    Key key = key_of(d);
    size_t p = route(key);
    per_partition[p].emplace_back(std::move(key), std::move(d));
  }
  for (size_t i = 0; i < partitions_.size(); ++i) {
    auto& batch = per_partition[i];
    std::sort(batch.begin(), batch.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (size_t k = 1; k < batch.size(); ++k)
      if (batch[k].first == batch[k - 1].first)
        throw EngineError("bulk load: duplicate key " +
                          batch[k].first.to_string());
    if (!batch.empty()) partitions_[i]->bulk_load(batch);
  }
}

uint64_t Engine::live_record_count() const {
  uint64_t n = 0;
  for (const auto& p : partitions_) n += p->live_keys();
  return n;
}

}  // namespace docpack
