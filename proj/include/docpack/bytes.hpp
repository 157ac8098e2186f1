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

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "docpack/error.hpp"

namespace docpack {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

/// Minimum bit width for a length/id field whose largest stored value is
/// `max_value`. Defined as bit_width(max_value + 1): the all-ones pattern is
/// never a valid value, so a field holding lengths up to 3 needs 3 bits and
/// one holding lengths up to 8 needs 4.
inline uint32_t min_bits_for(uint64_t max_value) {
  return static_cast<uint32_t>(std::bit_width(max_value + 1));
}

// ---------------------------------------------------------------------------
// Little-endian byte writer/reader. Reader is bounds-checked and throws
// FormatError on overrun; decoding untrusted bytes goes through it.
// ---------------------------------------------------------------------------

class ByteWriter {
 public:
  explicit ByteWriter(Bytes& out) : out_(out) {}

  void u8(uint8_t v) { out_.push_back(v); }
  void u16(uint16_t v) { fixed(v); }
  void u32(uint32_t v) { fixed(v); }
  void u64(uint64_t v) { fixed(v); }
  void i64(int64_t v) { fixed(static_cast<uint64_t>(v)); }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    fixed(bits);
  }
  void raw(ByteSpan s) { out_.insert(out_.end(), s.begin(), s.end()); }
  void raw(const std::string& s) {
    out_.insert(out_.end(), s.begin(), s.end());
  }
  void varint(uint64_t v) {
    while (v >= 0x80) {
      out_.push_back(static_cast<uint8_t>(v) | 0x80);
      v >>= 7;
    }
    out_.push_back(static_cast<uint8_t>(v));
  }

  size_t size() const { return out_.size(); }

  /// Patches a previously written u32 in place (offset fixups).
  void patch_u32(size_t pos, uint32_t v) {
    for (int i = 0; i < 4; ++i) out_[pos + i] = static_cast<uint8_t>(v >> (8 * i));
  }

 private:
  template <typename T>
  void fixed(T v) {
    for (size_t i = 0; i < sizeof(T); ++i)
      out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  Bytes& out_;
};

class ByteReader {
 public:
  explicit ByteReader(ByteSpan data) : data_(data) {}

  uint8_t u8() { return take(1)[0]; }
  uint16_t u16() { return static_cast<uint16_t>(fixed(2)); }
  uint32_t u32() { return static_cast<uint32_t>(fixed(4)); }
  uint64_t u64() { return fixed(8); }
  int64_t i64() { return static_cast<int64_t>(fixed(8)); }
  double f64() {
    uint64_t bits = fixed(8);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  ByteSpan raw(size_t n) { return take(n); }
  std::string str(size_t n) {
    ByteSpan s = take(n);
    return std::string(reinterpret_cast<const char*>(s.data()), s.size());
  }
  uint64_t varint() {
    uint64_t v = 0;
    int shift = 0;
    for (;;) {
      if (shift > 63) throw FormatError("varint too long");
      uint8_t b = u8();
      v |= static_cast<uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
      shift += 7;
    }
  }

  size_t pos() const { return pos_; }
  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  void seek(size_t p) {
    if (p > data_.size()) throw FormatError("seek past end");
    pos_ = p;
  }

 private:
  ByteSpan take(size_t n) {
    if (n > remaining())
      throw FormatError("truncated input at byte " + std::to_string(pos_));
    ByteSpan s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  uint64_t fixed(size_t n) {
    ByteSpan s = take(n);
    uint64_t v = 0;
    for (size_t i = 0; i < n; ++i) v |= static_cast<uint64_t>(s[i]) << (8 * i);
    return v;
  }

  ByteSpan data_;
  size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Bit packing, LSB-first: value bit 0 goes to the lowest unused bit of the
// current byte. Widths up to 32.
// ---------------------------------------------------------------------------

class BitWriter {
 public:
  void put(uint32_t value, uint32_t width) {
    buf_ |= static_cast<uint64_t>(value & mask(width)) << filled_;
    filled_ += width;
    while (filled_ >= 8) {
      bytes_.push_back(static_cast<uint8_t>(buf_));
      buf_ >>= 8;
      filled_ -= 8;
    }
  }

  /// Pads to a byte boundary and returns the packed bytes.
  Bytes finish() {
    if (filled_ > 0) {
      bytes_.push_back(static_cast<uint8_t>(buf_));
      buf_ = 0;
      filled_ = 0;
    }
    return std::move(bytes_);
  }

 private:
  static uint64_t mask(uint32_t w) { return (w >= 64) ? ~0ull : ((1ull << w) - 1); }
  Bytes bytes_;
  uint64_t buf_ = 0;
  uint32_t filled_ = 0;
};

class BitReader {
 public:
  explicit BitReader(ByteSpan data) : data_(data) {}

  uint32_t get(uint32_t width) {
    while (filled_ < width) {
      if (byte_pos_ >= data_.size()) throw FormatError("bit stream truncated");
      buf_ |= static_cast<uint64_t>(data_[byte_pos_++]) << filled_;
      filled_ += 8;
    }
    uint32_t v = static_cast<uint32_t>(buf_ & ((width >= 64) ? ~0ull : ((1ull << width) - 1)));
    buf_ >>= width;
    filled_ -= width;
    return v;
  }

 private:
  ByteSpan data_;
  size_t byte_pos_ = 0;
  uint64_t buf_ = 0;
  uint32_t filled_ = 0;
};

/// Bytes needed for `count` bit-packed values of `width` bits, byte-padded.
inline size_t packed_bytes(size_t count, uint32_t width) {
  return (count * width + 7) / 8;
}

// CRC32C (Castagnoli). Used by the WAL format.
uint32_t crc32c(ByteSpan data, uint32_t seed = 0);

}  // namespace docpack
