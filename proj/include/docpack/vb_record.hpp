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
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docpack/bytes.hpp"
#include "docpack/json_value.hpp"
#include "docpack/path.hpp"

namespace docpack::vb {

// ---------------------------------------------------------------------------
// Vector-based record format.
//
// A record separates metadata from values: one byte-per-tag type vector
// encodes the tree structure in depth-first order, and the values live in
// dedicated vectors (fixed-length scalars, variable-length values, field
// names). Layout, little-endian throughout:
//
//   header (26 bytes):
//     u32 total_length        whole record, header included
//     u32 tag_count
//     u32 offset_tags         always 26
//     u32 offset_fixed        start of fixed-length values
//     u32 offset_var          start of the var-length lengths sub-vector
//     u32 offset_fieldnames   start of the field-name values sub-vector;
//                             0 when the record is compacted
//     u8  var_len_bits        width of each var-length length entry
//     u8  fieldname_len_bits  width of each field-name entry (flag included)
//   tags                      tag_count bytes
//   fixed values              int64/double: 8 bytes, boolean: 1, null: 0
//   var lengths               bit-packed, one per string tag, byte-padded
//   var values                concatenated string bytes
//   field-name entries        bit-packed, one per object child, byte-padded
//   field-name values         concatenated name bytes (absent when compacted)
//
// A field-name entry is a flag bit (the entry's most significant bit) plus a
// payload. Flag set: the payload is a declared-field index. Flag clear: the
// payload is the inline name length (uncompacted) or a FieldNameID
// (compacted). Bit packing is LSB-first. Widths are minimal: a sub-vector
// whose largest value is m uses bit_width(m+1) bits per entry (plus the flag
// bit for field names) and is recomputed on compaction.
// ---------------------------------------------------------------------------

enum class TypeTag : uint8_t {
  Object = 1,
  Array = 2,
  String = 3,
  Int64 = 4,
  Double = 5,
  Boolean = 6,
  Null = 7,
  CloseNest = 8,  // closes the innermost open object/array (never the root)
  Eov = 9,        // end of values; closes the root
};

constexpr uint8_t kMinTag = 1;
constexpr uint8_t kMaxTag = 9;

inline bool is_scalar_tag(TypeTag t) {
  return t == TypeTag::String || t == TypeTag::Int64 || t == TypeTag::Double ||
         t == TypeTag::Boolean || t == TypeTag::Null;
}
inline bool is_nest_tag(TypeTag t) {
  return t == TypeTag::Object || t == TypeTag::Array;
}

/// Fixed-value byte footprint per scalar tag.
inline size_t fixed_size_of(TypeTag t) {
  switch (t) {
    case TypeTag::Int64:
    case TypeTag::Double:
      return 8;
    case TypeTag::Boolean:
      return 1;
    default:
      return 0;
  }
}

constexpr size_t kHeaderSize = 26;
constexpr uint32_t kMaxWidthBits = 16;
// Largest representable field-name length / string length under the width cap.
constexpr size_t kMaxFieldNameLen = (1u << (kMaxWidthBits - 1)) - 2;  // 32766
constexpr size_t kMaxStringLen = (1u << kMaxWidthBits) - 2;           // 65534

struct Header {
  uint32_t total_length = 0;
  uint32_t tag_count = 0;
  uint32_t offset_tags = 0;
  uint32_t offset_fixed = 0;
  uint32_t offset_var = 0;
  uint32_t offset_fieldnames = 0;
  uint8_t var_len_bits = 0;
  uint8_t fieldname_len_bits = 0;
};

/// Dataset-declared root fields (at minimum the primary key), referenced by
/// index instead of name in encoded records.
class DeclaredFields {
 public:
  DeclaredFields() = default;
  explicit DeclaredFields(std::vector<std::string> names)
      : names_(std::move(names)) {}

  std::optional<uint32_t> index_of(std::string_view name) const {
    for (size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return static_cast<uint32_t>(i);
    return std::nullopt;
  }
  const std::string& name_at(uint32_t index) const {
    if (index >= names_.size())
      throw FormatError("declared-field index " + std::to_string(index) +
                        " out of range");
    return names_[index];
  }
  size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Field-name dictionary view used when decoding or compacting records.
/// SchemaStore implements this.
class FieldNameTable {
 public:
  virtual ~FieldNameTable() = default;
  virtual std::optional<uint32_t> id_of(std::string_view name) const = 0;
  virtual const std::string* name_of(uint32_t id) const = 0;
};

/// An immutable record. Owns its bytes; the header is parsed and
/// frame-checked on adoption.
class VBRecord {
 public:
  static VBRecord adopt(Bytes bytes);

  ByteSpan bytes() const { return ByteSpan(bytes_); }
  const Header& header() const { return header_; }
  uint32_t total_length() const { return header_.total_length; }
  bool compacted() const { return header_.offset_fieldnames == 0; }

 private:
  VBRecord(Bytes bytes, Header h) : bytes_(std::move(bytes)), header_(h) {}
  Bytes bytes_;
  Header header_;
};

// ---------------------------------------------------------------------------
// Linear walk over a record. One walker construction equals one scan of the
// tag vector (the unit the instrumentation counts).
// ---------------------------------------------------------------------------

struct FieldRef {
  bool under_object = false;  // the value's immediate parent is an object
  bool declared = false;      // entry flag bit
  uint32_t payload = 0;       // declared index, name length, or FieldNameID
  std::string_view name;      // inline name; empty when declared or compacted
};

struct WalkEvent {
  enum class Kind : uint8_t { BeginObject, BeginArray, EndNest, Scalar, End };
  Kind kind;
  TypeTag tag = TypeTag::Null;  // scalar tag for Kind::Scalar
  FieldRef field;
  uint32_t depth = 0;  // nesting depth of the value (root = 0)
  int64_t i64v = 0;
  double f64v = 0.0;
  bool boolv = false;
  std::string_view strv;
};

class RecordWalker {
 public:
  explicit RecordWalker(const VBRecord& rec);
  WalkEvent next();
  bool done() const { return done_; }

 private:
  FieldRef read_field_ref();

  const VBRecord& rec_;
  ByteSpan bytes_;
  size_t tag_pos_;
  size_t fixed_pos_;
  BitReader var_lens_;
  size_t var_val_pos_ = 0;
  BitReader fn_entries_;
  size_t fn_val_pos_ = 0;
  std::vector<TypeTag> stack_;
  size_t strings_seen_ = 0;
  size_t entries_seen_ = 0;
  size_t n_strings_ = 0;
  size_t n_entries_ = 0;
  bool done_ = false;
};

namespace instrument {
/// Count of tag-vector scans (walker constructions) since process start.
uint64_t tag_scans();
void bump_tag_scans();
}  // namespace instrument

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Encodes a document (object root) into an uncompacted record.
VBRecord encode(const JsonDoc& doc, const DeclaredFields& declared);

/// Decodes a record back into a document. `names` may be null for
/// uncompacted records; compacted records require it.
JsonDoc decode(const VBRecord& rec, const FieldNameTable* names,
               const DeclaredFields& declared);

/// Replaces inline field names with FieldNameIDs, drops the name bytes, and
/// recomputes the entry width. Value vectors are byte-identical to the input.
VBRecord compact(const VBRecord& rec, const FieldNameTable& names);

/// Resolves all paths in a single scan of the tag vector. One result per
/// path; MISSING is nullopt. A wildcard yields an array of the matched
/// sub-values in item order, possibly empty; items where the remainder of
/// the path is absent contribute nothing.
std::vector<std::optional<JsonDoc>> get_values(
    const VBRecord& rec, const FieldNameTable* names,
    const DeclaredFields& declared, std::span<const PathExpr> paths);

/// Extraction request mixing plain paths with slot-aligned wildcard paths
/// (one slot per array item, MISSING slots preserved; used by unnest).
/// Everything resolves in the same single scan.
struct ExtractSpec {
  std::vector<PathExpr> paths;
  std::vector<PathExpr> aligned_paths;  // each must contain a wildcard
};

using AlignedSlots = std::vector<std::optional<JsonDoc>>;

struct ExtractResult {
  std::vector<std::optional<JsonDoc>> values;           // per ExtractSpec::paths
  std::vector<std::optional<AlignedSlots>> aligned;     // per aligned_paths
};

ExtractResult extract_values(const VBRecord& rec, const FieldNameTable* names,
                             const DeclaredFields& declared,
                             const ExtractSpec& spec);

struct Violation {
  std::string code;
  std::string message;
  size_t byte_pos = 0;
};

struct ValidateResult {
  bool ok = true;
  Violation violation;  // meaningful when !ok
};

/// Checks every structural invariant of the format against raw bytes.
/// Never throws; the first violation (with byte position) is the result.
ValidateResult validate(ByteSpan bytes);

}  // namespace docpack::vb
