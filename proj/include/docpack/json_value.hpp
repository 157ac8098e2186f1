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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docpack/error.hpp"

namespace docpack {

/// In-memory logical document. Objects keep insertion order and reject
/// duplicate member names; integers and doubles are distinct kinds.
class JsonDoc {
 public:
  enum class Kind : uint8_t {
    Object,
    Array,
    String,
    Int64,
    Double,
    Boolean,
    Null,
  };

  JsonDoc() : kind_(Kind::Null) {}

  static JsonDoc object() { return JsonDoc(Kind::Object); }
  static JsonDoc array() { return JsonDoc(Kind::Array); }
  static JsonDoc string(std::string s) {
    JsonDoc d(Kind::String);
    d.str_ = std::move(s);
    return d;
  }
  static JsonDoc integer(int64_t v) {
    JsonDoc d(Kind::Int64);
    d.int_ = v;
    return d;
  }
  static JsonDoc number(double v) {
    JsonDoc d(Kind::Double);
    d.dbl_ = v;
    return d;
  }
  static JsonDoc boolean(bool v) {
    JsonDoc d(Kind::Boolean);
    d.bool_ = v;
    return d;
  }
  static JsonDoc null() { return JsonDoc(Kind::Null); }

  Kind kind() const { return kind_; }
  bool is_object() const { return kind_ == Kind::Object; }
  bool is_array() const { return kind_ == Kind::Array; }
  bool is_scalar() const { return !is_object() && !is_array(); }
  bool is_numeric() const { return kind_ == Kind::Int64 || kind_ == Kind::Double; }

  // Object interface.
  JsonDoc& add_field(std::string name, JsonDoc value);  // throws on duplicate
  const JsonDoc* find(std::string_view name) const;
  size_t field_count() const { return names_.size(); }
  const std::string& field_name(size_t i) const { return names_[i]; }
  const JsonDoc& field_value(size_t i) const { return children_[i]; }

  // Array interface.
  JsonDoc& append(JsonDoc item);
  size_t item_count() const { return children_.size(); }
  const JsonDoc& item(size_t i) const { return children_[i]; }

  // Scalars.
  const std::string& as_string() const { return str_; }
  int64_t as_int() const { return int_; }
  double as_double() const { return dbl_; }
  bool as_bool() const { return bool_; }
  /// Numeric value widened to double (Int64 or Double kinds only).
  double numeric() const {
    return kind_ == Kind::Int64 ? static_cast<double>(int_) : dbl_;
  }

  bool operator==(const JsonDoc& other) const;
  bool operator!=(const JsonDoc& other) const { return !(*this == other); }

  std::string to_json() const;

  /// Parses one JSON text into a JsonDoc. Duplicate object keys are a parse
  /// error. Integers outside int64 range are rejected.
  static JsonDoc parse(std::string_view text);

 private:
  explicit JsonDoc(Kind k) : kind_(k) {}

  void write_json(std::string& out) const;

  Kind kind_;
  int64_t int_ = 0;
  double dbl_ = 0.0;
  bool bool_ = false;
  std::string str_;
  std::vector<std::string> names_;   // object member names, insertion order
  std::vector<JsonDoc> children_;    // object values (parallel to names_) or array items
};

const char* kind_name(JsonDoc::Kind k);

}  // namespace docpack
