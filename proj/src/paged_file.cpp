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

#include "docpack/paged_file.hpp"

#include <algorithm>
#include <cstring>

namespace docpack {

namespace {

constexpr char kLafMagic[4] = {'C', 'L', 'A', 'F'};

std::filesystem::path laf_path(const std::filesystem::path& data) {
  std::filesystem::path p = data;
  p += ".laf";
  return p;
}

// ---------------------------------------------------------------------------
// Plain (uncompressed) pages: page i sits at byte i * page_size.
// ---------------------------------------------------------------------------

class PlainPageWriter final : public PageWriter {
 public:
  PlainPageWriter(const std::filesystem::path& path, uint32_t page_size)
      : file_(File::create(path)), page_size_(page_size) {}

  uint32_t page_size() const override { return page_size_; }
  uint64_t page_count() const override { return count_; }

  void write_page(uint64_t page_index, ByteSpan page, bool) override {
    if (page_index != count_)
      throw IoError("out-of-order page index " + std::to_string(page_index));
    if (page.size() != page_size_) throw IoError("short page write");
    file_.append(page);
    ++count_;
  }

  void finalize() override { file_.sync(); }

  void patch_raw_page(uint64_t page_index, uint32_t offset_in_page,
                      ByteSpan bytes) override {
    file_.pwrite(page_index * page_size_ + offset_in_page, bytes);
    file_.sync();
  }

 private:
  File file_;
  uint32_t page_size_;
  uint64_t count_ = 0;
};

class PlainPageReader final : public PageReader {
 public:
  PlainPageReader(const std::filesystem::path& path, uint32_t page_size)
      : file_(File::open_ro(path)), page_size_(page_size) {
    uint64_t size = file_.size();
    if (size % page_size_ != 0)
      throw IoError("file size not page aligned: " + path.string());
    count_ = size / page_size_;
  }

  uint32_t page_size() const override { return page_size_; }
  uint64_t page_count() const override { return count_; }

  Bytes read_page(uint64_t index) const override {
    if (index >= count_) throw IoError("page index out of range");
    stats_.data_extent_reads.fetch_add(1, std::memory_order_relaxed);
    return file_.pread(index * page_size_, page_size_);
  }

  PageReadStats read_stats() const override {
    return {0, stats_.data_extent_reads.load(std::memory_order_relaxed)};
  }

  uint64_t physical_bytes() const override { return count_ * page_size_; }

 private:
  struct Stats {
    std::atomic<uint64_t> data_extent_reads{0};
  };
  File file_;
  uint32_t page_size_;
  uint64_t count_ = 0;
  mutable Stats stats_;
};

// ---------------------------------------------------------------------------
// Compressed pages + LAF
// ---------------------------------------------------------------------------

void serialize_entry(ByteWriter& w, const LafEntry& e) {
  w.u64(e.offset);
  w.u32(e.length | (e.raw ? kRawExtentFlag : 0));
}

LafEntry parse_entry(ByteReader& r) {
  LafEntry e;
  e.offset = r.u64();
  uint32_t len = r.u32();
  e.raw = (len & kRawExtentFlag) != 0;
  e.length = len & ~kRawExtentFlag;
  return e;
}

class CompressedPageWriter final : public PageWriter {
 public:
  CompressedPageWriter(const std::filesystem::path& path, uint32_t page_size,
                       const PageCodec& codec)
      : data_(File::create(path)),
        laf_(File::create(laf_path(path))),
        page_size_(page_size),
        codec_(codec) {}

  uint32_t page_size() const override { return page_size_; }
  uint64_t page_count() const override { return entries_.size(); }

  void write_page(uint64_t page_index, ByteSpan page, bool force_raw) override {
    if (page_index != entries_.size())
      throw IoError("out-of-order page index " + std::to_string(page_index));
    if (page.size() != page_size_) throw IoError("short page write");

    LafEntry e;
    e.offset = next_offset_;
    if (force_raw) {
      e.raw = true;
      e.length = page_size_;
      data_.append(page);
    } else {
      Bytes packed = codec_.compress(page);
      if (packed.size() >= page_size_) {
        // Expansion: store the raw page and flag it in the entry.
        e.raw = true;
        e.length = page_size_;
        data_.append(page);
      } else {
        e.length = static_cast<uint32_t>(packed.size());
        data_.append(ByteSpan(packed));
      }
    }
    next_offset_ += e.length;
    entries_.push_back(e);
  }

  void finalize() override {
    Bytes laf_bytes;
    ByteWriter w(laf_bytes);
    w.raw(ByteSpan(reinterpret_cast<const uint8_t*>(kLafMagic), 4));
    w.u8(codec_.id());
    w.u32(page_size_);
    w.u64(entries_.size());
    for (const LafEntry& e : entries_) serialize_entry(w, e);
    laf_.append(ByteSpan(laf_bytes));
    data_.sync();
    laf_.sync();
  }

  void patch_raw_page(uint64_t page_index, uint32_t offset_in_page,
                      ByteSpan bytes) override {
    const LafEntry& e = entries_.at(page_index);
    if (!e.raw) throw IoError("patch into a compressed extent");
    data_.pwrite(e.offset + offset_in_page, bytes);
    data_.sync();
  }

 private:
  File data_;
  File laf_;
  uint32_t page_size_;
  const PageCodec& codec_;
  std::vector<LafEntry> entries_;
  uint64_t next_offset_ = 0;
};

class CompressedPageReader final : public PageReader {
 public:
  explicit CompressedPageReader(const std::filesystem::path& path)
      : data_(File::open_ro(path)), laf_(File::open_ro(laf_path(path))) {
    Bytes header = laf_.pread(0, kLafHeaderSize);
    ByteReader r{ByteSpan(header)};
    ByteSpan magic = r.raw(4);
    if (std::memcmp(magic.data(), kLafMagic, 4) != 0)
      throw FormatError("bad LAF magic: " + laf_.path().string());
    codec_ = &codec_by_id(r.u8());
    page_size_ = r.u32();
    count_ = r.u64();
    if (kLafHeaderSize + count_ * kLafEntrySize != laf_.size())
      throw FormatError("LAF size mismatch: " + laf_.path().string());
  }

  uint32_t page_size() const override { return page_size_; }
  uint64_t page_count() const override { return count_; }

  Bytes read_page(uint64_t index) const override {
    if (index >= count_) throw IoError("page index out of range");
    LafEntry e = entry_for(index);
    stats_.data_extent_reads.fetch_add(1, std::memory_order_relaxed);
    Bytes extent = data_.pread(e.offset, e.length);
    if (e.raw) {
      if (extent.size() != page_size_)
        throw FormatError("raw extent size mismatch");
      return extent;
    }
    return codec_->decompress(ByteSpan(extent), page_size_);
  }

  PageReadStats read_stats() const override {
    return {stats_.laf_page_reads.load(std::memory_order_relaxed),
            stats_.data_extent_reads.load(std::memory_order_relaxed)};
  }

  uint64_t physical_bytes() const override {
    return data_.size() + laf_.size();
  }

 private:
  /// LAF entries are cached one LAF page at a time; entry lookup costs at
  /// most one physical LAF read when cold and none when warm.
  LafEntry entry_for(uint64_t index) const {
    uint64_t capacity = laf_page_capacity(kLafPageSize);
    uint64_t laf_page = index / capacity;
    {
      std::lock_guard<std::mutex> lock(cache_mu_);
      auto it = cache_.find(laf_page);
      if (it != cache_.end()) return it->second[index % capacity];
    }
    uint64_t first = laf_page * capacity;
    uint64_t n = std::min(capacity, count_ - first);
    stats_.laf_page_reads.fetch_add(1, std::memory_order_relaxed);
    Bytes raw = laf_.pread(kLafHeaderSize + first * kLafEntrySize,
                           n * kLafEntrySize);
    ByteReader r{ByteSpan(raw)};
    std::vector<LafEntry> entries;
    entries.reserve(n);
    for (uint64_t i = 0; i < n; ++i) entries.push_back(parse_entry(r));
    LafEntry result = entries[index % capacity];
    std::lock_guard<std::mutex> lock(cache_mu_);
    cache_.emplace(laf_page, std::move(entries));
    return result;
  }

  struct Stats {
    std::atomic<uint64_t> laf_page_reads{0};
    std::atomic<uint64_t> data_extent_reads{0};
  };

  File data_;
  File laf_;
  const PageCodec* codec_ = nullptr;
  uint32_t page_size_ = 0;
  uint64_t count_ = 0;
  mutable std::mutex cache_mu_;
  mutable std::map<uint64_t, std::vector<LafEntry>> cache_;
  mutable Stats stats_;
};

}  // namespace

std::unique_ptr<PageWriter> make_plain_page_writer(
    const std::filesystem::path& path, uint32_t page_size) {
  return std::make_unique<PlainPageWriter>(path, page_size);
}

std::unique_ptr<PageWriter> make_compressed_page_writer(
    const std::filesystem::path& path, uint32_t page_size,
    const PageCodec& codec) {
  return std::make_unique<CompressedPageWriter>(path, page_size, codec);
}

std::unique_ptr<PageReader> make_plain_page_reader(
    const std::filesystem::path& path, uint32_t page_size) {
  return std::make_unique<PlainPageReader>(path, page_size);
}

std::unique_ptr<PageReader> make_compressed_page_reader(
    const std::filesystem::path& path) {
  return std::make_unique<CompressedPageReader>(path);
}

void PageStreamWriter::append(ByteSpan data) {
  bytes_ += data.size();
  buf_.insert(buf_.end(), data.begin(), data.end());
  size_t page = out_.page_size();
  size_t pos = 0;
  while (buf_.size() - pos >= page) {
    out_.write_page(next_page_++, ByteSpan(buf_).subspan(pos, page));
    pos += page;
  }
  if (pos > 0) buf_.erase(buf_.begin(), buf_.begin() + pos);
}

void PageStreamWriter::pad_to_boundary() {
  if (buf_.empty()) return;
  buf_.resize(out_.page_size(), 0);
  out_.write_page(next_page_++, ByteSpan(buf_));
  buf_.clear();
}

Bytes PageStreamReader::read(uint64_t offset, size_t len) const {
  Bytes out;
  out.reserve(len);
  uint32_t page = in_.page_size();
  while (len > 0) {
    uint64_t index = offset / page;
    uint32_t within = static_cast<uint32_t>(offset % page);
    if (!cached_index_ || *cached_index_ != index) {
      cached_page_ = in_.read_page(index);
      cached_index_ = index;
    }
    size_t take = std::min<size_t>(len, page - within);
    out.insert(out.end(), cached_page_.begin() + within,
               cached_page_.begin() + within + take);
    offset += take;
    len -= take;
  }
  return out;
}

}  // namespace docpack
