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

#include "docpack/component.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>

namespace docpack {

namespace {

constexpr char kMetaMagic[4] = {'C', 'M', 'E', 'T'};
constexpr uint32_t kValidityOffset = 4;  // byte offset within the meta page
constexpr uint8_t kValid = 0xFF;
constexpr uint8_t kInvalid = 0x00;

void write_opt_key(ByteWriter& w, const std::optional<Key>& k) {
  if (!k) {
    w.u32(0);
    return;
  }
  Bytes b = k->serialize();
  w.u32(static_cast<uint32_t>(b.size()));
  w.raw(ByteSpan(b));
}

std::optional<Key> read_opt_key(ByteReader& r) {
  uint32_t len = r.u32();
  if (len == 0) return std::nullopt;
  return Key::deserialize(r.raw(len));
}

}  // namespace

// ---------------------------------------------------------------------------
// Key
// ---------------------------------------------------------------------------

Bytes Key::serialize() const {
  Bytes out;
  ByteWriter w(out);
  if (is_int()) {
    w.u8(0);
    w.i64(as_int());
  } else {
    w.u8(1);
    w.raw(as_string());
  }
  return out;
}

Key Key::deserialize(ByteSpan bytes) {
  ByteReader r(bytes);
  uint8_t kind = r.u8();
  if (kind == 0) return Key(r.i64());
  if (kind == 1) return Key(r.str(r.remaining()));
  throw FormatError("bad key type byte");
}

uint64_t Key::hash() const {
  Bytes b = serialize();
  uint64_t h = 0xCBF29CE484222325ull;
  for (uint8_t c : b) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

JsonDoc Key::to_doc() const {
  return is_int() ? JsonDoc::integer(as_int()) : JsonDoc::string(as_string());
}

Key Key::from_doc_value(const JsonDoc& v) {
  if (v.kind() == JsonDoc::Kind::Int64) return Key(v.as_int());
  if (v.kind() == JsonDoc::Kind::String) return Key(v.as_string());
  throw EngineError(std::string("primary key must be int64 or string, got ") +
                    kind_name(v.kind()));
}

std::string Key::to_string() const {
  return is_int() ? std::to_string(as_int()) : as_string();
}

// ---------------------------------------------------------------------------
// Paths
// ---------------------------------------------------------------------------

std::filesystem::path component_path(const std::filesystem::path& dir,
                                     ComponentId id) {
  return dir / (id.to_string() + ".dat");
}

std::optional<ComponentId> parse_component_filename(const std::string& name) {
  ComponentId id;
  char trailing;
  if (std::sscanf(name.c_str(), "c_%" SCNu64 "_%" SCNu64 ".da%c", &id.lo,
                  &id.hi, &trailing) == 3 &&
      trailing == 't' && name == id.to_string() + ".dat")
    return id;
  return std::nullopt;
}

void remove_component_files(const std::filesystem::path& data_path) {
  std::error_code ec;
  std::filesystem::remove(data_path, ec);
  std::filesystem::path laf = data_path;
  laf += ".laf";
  std::filesystem::remove(laf, ec);
}

// ---------------------------------------------------------------------------
// ComponentWriter
// ---------------------------------------------------------------------------

ComponentWriter::ComponentWriter(const std::filesystem::path& dir,
                                 ComponentId id, uint32_t page_size,
                                 const PageCodec* codec)
    : path_(component_path(dir, id)),
      pages_(codec ? make_compressed_page_writer(path_, page_size, *codec)
                   : make_plain_page_writer(path_, page_size)),
      stream_(*pages_) {
  meta_.id = id;
}

void ComponentWriter::add_entry(const Key& key, EntryKind kind,
                                ByteSpan record_bytes) {
  if (finished_) throw IoError("component writer already finished");
  Bytes head;
  ByteWriter w(head);
  Bytes kb = key.serialize();
  w.u32(static_cast<uint32_t>(kb.size()));
  w.raw(ByteSpan(kb));
  w.u8(static_cast<uint8_t>(kind));
  stream_.append(ByteSpan(head));
  if (kind == EntryKind::Record) stream_.append(record_bytes);

  ++meta_.entry_count;
  if (kind == EntryKind::Record)
    ++meta_.record_count;
  else
    ++meta_.tombstone_count;
  if (!meta_.min_key) meta_.min_key = key;
  meta_.max_key = key;
}

void ComponentWriter::add_record(const Key& key, ByteSpan record_bytes) {
  add_entry(key, EntryKind::Record, record_bytes);
}

void ComponentWriter::add_tombstone(const Key& key) {
  add_entry(key, EntryKind::Tombstone, {});
}

void ComponentWriter::finish(ByteSpan schema_blob) {
  if (finished_) throw IoError("component writer already finished");
  meta_.data_bytes = stream_.bytes_appended();
  stream_.pad_to_boundary();

  Bytes page;
  ByteWriter w(page);
  w.raw(ByteSpan(reinterpret_cast<const uint8_t*>(kMetaMagic), 4));
  w.u8(kInvalid);
  w.u64(meta_.id.lo);
  w.u64(meta_.id.hi);
  w.u64(meta_.entry_count);
  w.u64(meta_.record_count);
  w.u64(meta_.tombstone_count);
  w.u64(meta_.data_bytes);
  write_opt_key(w, meta_.min_key);
  write_opt_key(w, meta_.max_key);
  w.u32(static_cast<uint32_t>(schema_blob.size()));

  // The blob lives inline when it fits; otherwise it spills into whole pages
  // placed just before the metadata page and referenced from it.
  uint32_t page_size = pages_->page_size();
  uint64_t overflow_pages = 0;
  bool inline_blob = page.size() + 4 + schema_blob.size() <= page_size;
  if (!inline_blob)
    overflow_pages = (schema_blob.size() + page_size - 1) / page_size;
  w.u32(static_cast<uint32_t>(overflow_pages));
  if (inline_blob) {
    w.raw(schema_blob);
  } else {
    uint64_t next = pages_->page_count();
    Bytes chunk(page_size, 0);
    for (uint64_t i = 0; i < overflow_pages; ++i) {
      size_t off = i * page_size;
      size_t n = std::min<size_t>(page_size, schema_blob.size() - off);
      std::fill(chunk.begin(), chunk.end(), 0);
      std::copy(schema_blob.begin() + off, schema_blob.begin() + off + n,
                chunk.begin());
      pages_->write_page(next++, ByteSpan(chunk));
    }
  }
  if (page.size() > page_size)
    throw IoError("metadata page overflow: keys too large for page");
  page.resize(page_size, 0);
  meta_page_index_ = pages_->page_count();
  // Metadata goes down raw so the validity byte stays patchable in place.
  pages_->write_page(meta_page_index_, ByteSpan(page), /*force_raw=*/true);
  pages_->finalize();
  finished_ = true;
}

void ComponentWriter::set_valid() {
  if (!finished_) throw IoError("set_valid before finish");
  uint8_t v = kValid;
  pages_->patch_raw_page(meta_page_index_, kValidityOffset, ByteSpan(&v, 1));
}

// ---------------------------------------------------------------------------
// ComponentReader
// ---------------------------------------------------------------------------

ComponentReader::OpenResult ComponentReader::open(
    const std::filesystem::path& data_path, uint32_t page_size) {
  std::unique_ptr<PageReader> pages;
  std::filesystem::path laf = data_path;
  laf += ".laf";
  try {
    if (std::filesystem::exists(laf)) {
      pages = make_compressed_page_reader(data_path);
    } else {
      pages = make_plain_page_reader(data_path, page_size);
    }
  } catch (const Error& e) {
    // Torn file layout from a crashed write: invalid, not fatal.
    return {OpenStatus::Invalid, nullptr, e.what()};
  }

  if (pages->page_count() == 0)
    return {OpenStatus::Invalid, nullptr, "empty file"};

  Bytes page;
  try {
    page = pages->read_page(pages->page_count() - 1);
  } catch (const Error& e) {
    return {OpenStatus::Invalid, nullptr, e.what()};
  }
  if (page.size() < 5 || std::memcmp(page.data(), kMetaMagic, 4) != 0)
    return {OpenStatus::Invalid, nullptr, "bad metadata magic"};
  if (page[kValidityOffset] != kValid)
    return {OpenStatus::Invalid, nullptr, "validity bit unset"};

  // Validity is set: from here on, damage is a hard error for the caller.
  ComponentMeta meta;
  try {
    ByteReader r{ByteSpan(page)};
    r.seek(5);
    meta.id.lo = r.u64();
    meta.id.hi = r.u64();
    meta.entry_count = r.u64();
    meta.record_count = r.u64();
    meta.tombstone_count = r.u64();
    meta.data_bytes = r.u64();
    meta.min_key = read_opt_key(r);
    meta.max_key = read_opt_key(r);
    uint32_t blob_len = r.u32();
    uint32_t overflow_pages = r.u32();
    if (overflow_pages == 0) {
      ByteSpan blob = r.raw(blob_len);
      meta.schema_blob.assign(blob.begin(), blob.end());
    } else {
      uint64_t first = pages->page_count() - 1 - overflow_pages;
      meta.schema_blob.reserve(blob_len);
      for (uint64_t i = 0; i < overflow_pages; ++i) {
        Bytes chunk = pages->read_page(first + i);
        size_t want = std::min<size_t>(chunk.size(),
                                       blob_len - meta.schema_blob.size());
        meta.schema_blob.insert(meta.schema_blob.end(), chunk.begin(),
                                chunk.begin() + want);
      }
      if (meta.schema_blob.size() != blob_len)
        throw FormatError("schema overflow pages shorter than blob length");
    }

    auto reader = std::shared_ptr<ComponentReader>(
        new ComponentReader(data_path, std::move(pages), std::move(meta)));
    return {OpenStatus::Valid, reader, ""};
  } catch (const Error& e) {
    return {OpenStatus::Corrupt, nullptr, e.what()};
  }
}

ComponentReader::ComponentReader(std::filesystem::path path,
                                 std::unique_ptr<PageReader> pages,
                                 ComponentMeta meta)
    : path_(std::move(path)),
      pages_(std::move(pages)),
      meta_(std::move(meta)) {
  schema_ = std::make_shared<const SchemaStore>(
      SchemaStore::deserialize(ByteSpan(meta_.schema_blob)));
  build_index();
}

void ComponentReader::build_index() {
  PageStreamReader stream_(*pages_);
  index_.reserve(meta_.entry_count);
  uint64_t pos = 0;
  for (uint64_t i = 0; i < meta_.entry_count; ++i) {
    if (pos + 5 > meta_.data_bytes)
      throw FormatError("component entry stream truncated: " + path_.string());
    Bytes head = stream_.read(pos, 4);
    uint32_t klen = ByteReader{ByteSpan(head)}.u32();
    Bytes key_and_kind = stream_.read(pos + 4, klen + 1);
    ByteReader kr{ByteSpan(key_and_kind)};
    Key key = Key::deserialize(kr.raw(klen));
    EntryKind kind = static_cast<EntryKind>(kr.u8());
    pos += 4 + klen + 1;

    IndexEntry e{std::move(key), 0, 0, kind};
    if (kind == EntryKind::Record) {
      Bytes lenb = stream_.read(pos, 4);
      uint32_t total = ByteReader{ByteSpan(lenb)}.u32();
      e.offset = pos;
      e.length = total;
      pos += total;
    } else if (kind != EntryKind::Tombstone) {
      throw FormatError("bad entry kind in " + path_.string());
    }
    if (pos > meta_.data_bytes)
      throw FormatError("component entry overruns data region: " +
                        path_.string());
    if (!index_.empty() && !(index_.back().key < e.key))
      throw FormatError("component entries out of key order: " +
                        path_.string());
    index_.push_back(std::move(e));
  }
}

std::optional<ComponentReader::Entry> ComponentReader::find(
    const Key& key) const {
  auto it = std::lower_bound(
      index_.begin(), index_.end(), key,
      [](const IndexEntry& e, const Key& k) { return e.key < k; });
  if (it == index_.end() || !(it->key == key)) return std::nullopt;
  return entry_at(static_cast<size_t>(it - index_.begin()));
}

ComponentReader::Entry ComponentReader::entry_at(size_t i) const {
  const IndexEntry& e = index_.at(i);
  Entry out{e.key, e.kind, {}};
  if (e.kind == EntryKind::Record) {
    // A fresh one-page window per call keeps concurrent readers safe.
    PageStreamReader stream(*pages_);
    out.record = stream.read(e.offset, e.length);
  }
  return out;
}

}  // namespace docpack
