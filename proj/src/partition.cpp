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

#include "docpack/partition.hpp"

#include <algorithm>

#include "docpack/failpoint.hpp"
#include "docpack/vb_record.hpp"

namespace docpack {

Partition::Partition(PartitionConfig cfg)
    : cfg_(std::move(cfg)), declared_({cfg_.pk_field}) {}

std::unique_ptr<Partition> Partition::open(PartitionConfig cfg) {
  auto p = std::unique_ptr<Partition>(new Partition(std::move(cfg)));
  p->recover();
  return p;
}

// ---------------------------------------------------------------------------
// Recovery: invalid components removed, newest valid schema loaded, WAL
// segments replayed (without logging) and the restored memtable re-flushed.
// ---------------------------------------------------------------------------

void Partition::recover() {
  std::lock_guard<std::mutex> lock(mu_);
  std::filesystem::create_directories(cfg_.dir);

  // Discover components; drop invalid ones.
  std::vector<std::shared_ptr<ComponentReader>> found;
  std::vector<std::filesystem::path> wal_files;
  for (const auto& dirent : std::filesystem::directory_iterator(cfg_.dir)) {
    std::string name = dirent.path().filename().string();
    if (parse_component_filename(name)) {
      auto result = ComponentReader::open(dirent.path(), cfg_.page_size);
      switch (result.status) {
        case ComponentReader::OpenStatus::Valid:
          found.push_back(result.reader);
          break;
        case ComponentReader::OpenStatus::Invalid:
          remove_component_files(dirent.path());
          break;
        case ComponentReader::OpenStatus::Corrupt:
          throw EngineError("corrupt metadata page on valid component " +
                            name + ": " + result.detail);
      }
    } else if (parse_wal_filename(name)) {
      wal_files.push_back(dirent.path());
    }
  }

  // A merge output supersedes inputs that survived a crash between the
  // output's validity flip and the input deletion.
  std::vector<std::shared_ptr<ComponentReader>> live;
  for (const auto& c : found) {
    bool subsumed = false;
    for (const auto& other : found)
      if (other->id().subsumes(c->id())) subsumed = true;
    if (subsumed)
      remove_component_files(c->path());
    else
      live.push_back(c);
  }
  std::sort(live.begin(), live.end(),
            [](const auto& a, const auto& b) { return a->id().lo < b->id().lo; });
  for (size_t i = 1; i < live.size(); ++i)
    if (live[i]->id().lo <= live[i - 1]->id().hi)
      throw EngineError("overlapping live component ranges " +
                        live[i - 1]->id().to_string() + " and " +
                        live[i]->id().to_string());
  components_ = std::move(live);

  next_seq_ = components_.empty() ? 0 : components_.back()->id().hi + 1;
  if (!components_.empty())
    schema_ = SchemaStore::deserialize(
        ByteSpan(components_.back()->meta().schema_blob));

  // Live key set from disk, newest component wins.
  pk_.clear();
  std::set<Key> seen;
  for (auto it = components_.rbegin(); it != components_.rend(); ++it) {
    const auto& c = **it;
    for (size_t i = 0; i < c.entry_count(); ++i) {
      const Key& k = c.key_at(i);
      if (seen.count(k)) continue;
      seen.insert(k);
      if (c.kind_at(i) == EntryKind::Record) pk_.insert(k);
    }
  }

  // Replay WAL segments not already covered by a valid component.
  std::sort(wal_files.begin(), wal_files.end(),
            [](const auto& a, const auto& b) {
              return *parse_wal_filename(a.filename().string()) <
                     *parse_wal_filename(b.filename().string());
            });
  uint64_t max_hi = components_.empty() ? 0 : components_.back()->id().hi;
  bool have_components = !components_.empty();
  recovering_ = true;
  for (const auto& wf : wal_files) {
    uint64_t gen = *parse_wal_filename(wf.filename().string());
    if (have_components && gen <= max_hi) continue;  // flushed before crash
    for (const WalRecord& rec : wal_replay(wf)) {
      next_lsn_ = std::max(next_lsn_, rec.lsn + 1);
      std::optional<JsonDoc> doc;
      if (rec.op != WalOp::Delete) doc = JsonDoc::parse(rec.payload);
      apply_op(rec.op, rec.key, doc ? &*doc : nullptr, /*logging=*/false);
    }
  }
  recovering_ = false;

  // Re-flush the restored memtable, then retire every replayed segment.
  if (!memtable_.empty()) do_flush();
  for (const auto& wf : wal_files) std::filesystem::remove(wf);
  sync_dir(cfg_.dir);
  open_wal();
}

void Partition::open_wal() {
  wal_gen_ = next_seq_;
  wal_ = std::make_unique<WalWriter>(wal_path(cfg_.dir, wal_gen_),
                                     cfg_.wal_sync);
}

// ---------------------------------------------------------------------------
// Write path
// ---------------------------------------------------------------------------

void Partition::log_op(WalOp op, const Key& key, const JsonDoc* doc) {
  WalRecord rec;
  rec.lsn = next_lsn_++;
  rec.op = op;
  rec.key = key;
  if (doc) rec.payload = doc->to_json();
  wal_->append(rec);
  ++counters_.wal_appends;
}

std::optional<ComponentReader::Entry> Partition::newest_disk_entry(
    const Key& key) const {
  for (auto it = components_.rbegin(); it != components_.rend(); ++it) {
    auto entry = (*it)->find(key);
    if (entry) return entry;
  }
  return std::nullopt;
}

/// Point lookup of the newest on-disk image and anti-schema extraction.
/// Memtable images were never inferred into the schema, so only disk images
/// produce decrements.
std::optional<AntiSchema> Partition::anti_for_disk_image(const Key& key) {
  if (!cfg_.compactor_enabled) return std::nullopt;
  ++counters_.primary_lookups;
  auto entry = newest_disk_entry(key);
  if (!entry || entry->kind != EntryKind::Record) return std::nullopt;
  vb::VBRecord rec = vb::VBRecord::adopt(std::move(entry->record));
  return schema_.extract_anti(rec, declared_);
}

void Partition::put_entry(const Key& key, MemEntry entry) {
  uint64_t add = 48 + (entry.record ? entry.record->total_length() : 0) +
                 (key.is_int() ? 8 : key.as_string().size());
  auto it = memtable_.find(key);
  if (it != memtable_.end()) {
    uint64_t old = 48 + (it->second.record ? it->second.record->total_length() : 0) +
                   (key.is_int() ? 8 : key.as_string().size());
    mem_bytes_ -= old;
    it->second = std::move(entry);
  } else {
    memtable_.emplace(key, std::move(entry));
  }
  mem_bytes_ += add;
}

void Partition::apply_op(WalOp op, const Key& key, const JsonDoc* doc,
                         bool logging) {
  // Budget check up front: a full memtable flushes, then the op proceeds.
  if (!recovering_ && mem_bytes_ >= cfg_.memtable_budget && !memtable_.empty())
    do_flush();

  auto existing = memtable_.find(key);
  bool mem_has = existing != memtable_.end();

  switch (op) {
    case WalOp::Insert: {
      if (cfg_.strict_insert) {
        ++counters_.pk_probes;
        if (pk_.count(key))
          throw EngineError("duplicate key on strict insert: " +
                            key.to_string());
      }
      if (logging) log_op(op, key, doc);
      MemEntry e;
      e.record = vb::encode(*doc, declared_);
      if (mem_has) {
        e.anti = std::move(existing->second.anti);
      } else if (!cfg_.strict_insert && pk_.count(key)) {
        // Blind insert over a live disk image behaves like an upsert for
        // schema maintenance.
        e.anti = anti_for_disk_image(key);
      }
      put_entry(key, std::move(e));
      pk_.insert(key);
      break;
    }
    case WalOp::Delete: {
      if (logging) log_op(op, key, nullptr);
      MemEntry e;
      if (mem_has) {
        e.anti = std::move(existing->second.anti);
      } else {
        ++counters_.pk_probes;
        if (pk_.count(key)) e.anti = anti_for_disk_image(key);
      }
      put_entry(key, std::move(e));
      pk_.erase(key);
      break;
    }
    case WalOp::Upsert: {
      if (logging) log_op(op, key, doc);
      MemEntry e;
      e.record = vb::encode(*doc, declared_);
      if (mem_has) {
        e.anti = std::move(existing->second.anti);
      } else {
        ++counters_.pk_probes;
        // Key-existence check via the primary-key set: absent keys skip the
        // point lookup entirely.
        if (pk_.count(key)) e.anti = anti_for_disk_image(key);
      }
      put_entry(key, std::move(e));
      pk_.insert(key);
      break;
    }
  }
}

void Partition::insert(const Key& key, const JsonDoc& doc) {
  std::lock_guard<std::mutex> lock(mu_);
  apply_op(WalOp::Insert, key, &doc, true);
}

void Partition::erase(const Key& key) {
  std::lock_guard<std::mutex> lock(mu_);
  apply_op(WalOp::Delete, key, nullptr, true);
}

void Partition::upsert(const Key& key, const JsonDoc& doc) {
  std::lock_guard<std::mutex> lock(mu_);
  apply_op(WalOp::Upsert, key, &doc, true);
}

std::optional<JsonDoc> Partition::lookup(const Key& key) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = memtable_.find(key);
  if (it != memtable_.end()) {
    if (!it->second.record) return std::nullopt;  // tombstone
    return vb::decode(*it->second.record, &schema_, declared_);
  }
  for (auto cit = components_.rbegin(); cit != components_.rend(); ++cit) {
    auto entry = (*cit)->find(key);
    if (!entry) continue;
    if (entry->kind == EntryKind::Tombstone) return std::nullopt;
    vb::VBRecord rec = vb::VBRecord::adopt(std::move(entry->record));
    return vb::decode(rec, (*cit)->schema().get(), declared_);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Flush
// ---------------------------------------------------------------------------

void Partition::do_flush() {
  if (memtable_.empty()) return;
  std::map<Key, MemEntry> sealed;
  sealed.swap(memtable_);
  mem_bytes_ = 0;

  uint64_t seq = next_seq_++;
  ComponentId id{seq, seq};
  ComponentWriter writer(cfg_.dir, id, cfg_.page_size, cfg_.codec);
  for (auto& [key, entry] : sealed) {
    if (entry.anti && cfg_.compactor_enabled) schema_.apply_anti(*entry.anti);
    if (entry.record) {
      if (cfg_.compactor_enabled) {
        schema_.infer_record(*entry.record, declared_);
        vb::VBRecord packed = vb::compact(*entry.record, schema_);
        writer.add_record(key, packed.bytes());
      } else {
        writer.add_record(key, entry.record->bytes());
      }
    } else {
      // The anti-schema is consumed here; only the key reaches disk.
      writer.add_tombstone(key);
    }
  }
  writer.finish(ByteSpan(schema_.serialize()));
  failpoint::hit("flush:before_validity");
  writer.set_valid();
  failpoint::hit("flush:after_validity");

  auto opened = ComponentReader::open(writer.path(), cfg_.page_size);
  if (opened.status != ComponentReader::OpenStatus::Valid)
    throw EngineError("freshly flushed component failed to open: " +
                      opened.detail);
  components_.push_back(opened.reader);
  ++counters_.flushes;

  // The flushed generation's log is dead; new writes go to a fresh segment.
  if (wal_) {
    std::filesystem::remove(wal_path(cfg_.dir, wal_gen_));
    sync_dir(cfg_.dir);
    open_wal();
  }
}

void Partition::flush() {
  std::lock_guard<std::mutex> lock(mu_);
  do_flush();
}

// ---------------------------------------------------------------------------
// Merge
// ---------------------------------------------------------------------------

bool Partition::merge_tick() {
  std::lock_guard<std::mutex> lock(mu_);
  if (components_.size() < 2) return false;

  // Prefix-style policy: when the tolerable count of small components is
  // reached, merge the oldest contiguous run of them.
  size_t small = 0;
  for (const auto& c : components_)
    if (c->physical_bytes() <= cfg_.merge_max_bytes) ++small;
  if (small < cfg_.merge_tolerable_count) return false;

  size_t first = 0;
  while (first < components_.size() &&
         components_[first]->physical_bytes() > cfg_.merge_max_bytes)
    ++first;
  size_t count = 0;
  while (first + count < components_.size() &&
         components_[first + count]->physical_bytes() <= cfg_.merge_max_bytes)
    ++count;
  if (count < 2) return false;

  do_merge(first, count);
  return true;
}

void Partition::do_merge(size_t first, size_t count) {
  std::vector<std::shared_ptr<ComponentReader>> inputs(
      components_.begin() + first, components_.begin() + first + count);
  ComponentId out_id{inputs.front()->id().lo, inputs.back()->id().hi};
  bool older_outside = first > 0;

  ComponentWriter writer(cfg_.dir, out_id, cfg_.page_size, cfg_.codec);

  // K-way merge over the sorted per-component indexes; the newest input wins
  // each key, and record/tombstone pairs annihilate.
  std::vector<size_t> cursor(inputs.size(), 0);
  for (;;) {
    const Key* min_key = nullptr;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (cursor[i] >= inputs[i]->entry_count()) continue;
      const Key& k = inputs[i]->key_at(cursor[i]);
      if (!min_key || k < *min_key) min_key = &k;
    }
    if (!min_key) break;
    Key key = *min_key;

    int winner = -1;
    for (size_t i = 0; i < inputs.size(); ++i) {
      if (cursor[i] < inputs[i]->entry_count() &&
          inputs[i]->key_at(cursor[i]) == key) {
        winner = static_cast<int>(i);  // later inputs are newer
      }
    }
    for (size_t i = 0; i < inputs.size(); ++i)
      if (cursor[i] < inputs[i]->entry_count() &&
          inputs[i]->key_at(cursor[i]) == key)
        ++cursor[i];

    auto entry = inputs[static_cast<size_t>(winner)]->entry_at(
        cursor[static_cast<size_t>(winner)] - 1);
    if (entry.kind == EntryKind::Record) {
      writer.add_record(key, ByteSpan(entry.record));
    } else if (older_outside) {
      // Older components outside this merge may still hold the key.
      writer.add_tombstone(key);
    }
  }

  // Only the newest input schema is persisted: it is a superset of all
  // schemas the surviving records were written under.
  writer.finish(ByteSpan(inputs.back()->meta().schema_blob));
  failpoint::hit("merge:before_validity");
  writer.set_valid();
  failpoint::hit("merge:after_validity");

  auto opened = ComponentReader::open(writer.path(), cfg_.page_size);
  if (opened.status != ComponentReader::OpenStatus::Valid)
    throw EngineError("merged component failed to open: " + opened.detail);

  components_.erase(components_.begin() + first,
                    components_.begin() + first + count);
  components_.insert(components_.begin() + first, opened.reader);
  ++counters_.merges;

  for (const auto& in : inputs) remove_component_files(in->path());
  sync_dir(cfg_.dir);
}

// ---------------------------------------------------------------------------
// Scan & snapshots
// ---------------------------------------------------------------------------

std::vector<Partition::ScanItem> Partition::scan() const {
  std::lock_guard<std::mutex> lock(mu_);
  struct Winner {
    ComponentId source;
    const ComponentReader* comp;
    size_t idx;
    const vb::VBRecord* mem;
    bool tombstone;
  };
  std::map<Key, Winner> merged;
  for (const auto& c : components_) {  // oldest to newest: later overwrite
    for (size_t i = 0; i < c->entry_count(); ++i) {
      Winner w{c->id(), c.get(), i, nullptr,
               c->kind_at(i) == EntryKind::Tombstone};
      merged.insert_or_assign(c->key_at(i), w);
    }
  }
  for (const auto& [key, entry] : memtable_) {
    Winner w{kMemComponentId, nullptr, 0, nullptr, !entry.record.has_value()};
    if (entry.record) w.mem = &*entry.record;
    merged.insert_or_assign(key, w);
  }

  std::vector<ScanItem> out;
  for (const auto& [key, w] : merged) {
    if (w.tombstone) continue;
    ScanItem item;
    item.key = key;
    item.source = w.source;
    if (w.mem) {
      item.record.assign(w.mem->bytes().begin(), w.mem->bytes().end());
    } else {
      item.record = w.comp->entry_at(w.idx).record;
    }
    out.push_back(std::move(item));
  }
  return out;
}

std::vector<Partition::ComponentSnapshot> Partition::components() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<ComponentSnapshot> out;
  for (const auto& c : components_)
    out.push_back({c->id(), c->schema(), c->physical_bytes(),
                   c->meta().record_count, c->meta().tombstone_count});
  return out;
}

std::shared_ptr<ComponentReader> Partition::component_reader(
    ComponentId id) const {
  std::lock_guard<std::mutex> lock(mu_);
  for (const auto& c : components_)
    if (c->id() == id) return c;
  return nullptr;
}

PartitionCounters Partition::counters() const {
  std::lock_guard<std::mutex> lock(mu_);
  return counters_;
}

size_t Partition::live_keys() const {
  std::lock_guard<std::mutex> lock(mu_);
  return pk_.size();
}

size_t Partition::memtable_entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return memtable_.size();
}

// ---------------------------------------------------------------------------
// Bulk load
// ---------------------------------------------------------------------------

void Partition::bulk_load(const std::vector<std::pair<Key, JsonDoc>>& docs) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!components_.empty() || !memtable_.empty())
    throw EngineError("bulk load requires an empty partition");

  uint64_t seq = next_seq_++;
  ComponentWriter writer(cfg_.dir, {seq, seq}, cfg_.page_size, cfg_.codec);
  const Key* prev = nullptr;
  for (const auto& [key, doc] : docs) {
    if (prev && !(*prev < key))
      throw EngineError("bulk load input not sorted on unique keys");
    prev = &key;
    vb::VBRecord rec = vb::encode(doc, declared_);
    if (cfg_.compactor_enabled) {
      schema_.infer_record(rec, declared_);
      writer.add_record(key, vb::compact(rec, schema_).bytes());
    } else {
      writer.add_record(key, rec.bytes());
    }
    pk_.insert(key);
  }
  writer.finish(ByteSpan(schema_.serialize()));
  failpoint::hit("flush:before_validity");
  writer.set_valid();
  failpoint::hit("flush:after_validity");

  auto opened = ComponentReader::open(writer.path(), cfg_.page_size);
  if (opened.status != ComponentReader::OpenStatus::Valid)
    throw EngineError("bulk-loaded component failed to open: " + opened.detail);
  components_.push_back(opened.reader);
  ++counters_.flushes;
}

}  // namespace docpack
