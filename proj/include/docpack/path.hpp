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
#include <vector>

#include "docpack/json_value.hpp"

namespace docpack {

/// One step of a path expression.
struct PathStep {
  enum class Kind : uint8_t { Field, Index, Wildcard };
  Kind kind;
  std::string name;   // Field
  uint32_t index = 0; // Index

  static PathStep field(std::string n) {
    return PathStep{Kind::Field, std::move(n), 0};
  }
  static PathStep at(uint32_t i) { return PathStep{Kind::Index, {}, i}; }
  static PathStep wildcard() { return PathStep{Kind::Wildcard, {}, 0}; }

  bool operator==(const PathStep&) const = default;
};

/// Non-empty sequence of steps, e.g. dependents[0].name or readings[*].value.
/// At most one wildcard per path.
class PathExpr {
 public:
  explicit PathExpr(std::vector<PathStep> steps);

  /// Parses "a.b[0].c[*]" (an optional leading "$." or "$" is accepted).
  static PathExpr parse(std::string_view text);

  const std::vector<PathStep>& steps() const { return steps_; }
  bool has_wildcard() const { return wildcard_pos_ >= 0; }
  int wildcard_pos() const { return wildcard_pos_; }
  std::string to_string() const;

  bool operator==(const PathExpr&) const = default;

 private:
  std::vector<PathStep> steps_;
  int wildcard_pos_ = -1;
};

/// Direct tree-walk evaluation of a path over a decoded document. MISSING is
/// nullopt. A wildcard yields an array of the matched sub-values in item
/// order (items where the remainder of the path is missing contribute
/// nothing); a wildcard over a non-array is MISSING.
std::optional<JsonDoc> navigate(const JsonDoc& doc, const PathExpr& path);

/// Wildcard variant that keeps per-item alignment: returns one slot per array
/// item, MISSING for items where the remainder of the path is absent. Used by
/// unnest. nullopt when the prefix up to the wildcard is missing or not an
/// array. The path must contain a wildcard.
std::optional<std::vector<std::optional<JsonDoc>>> navigate_aligned(
    const JsonDoc& doc, const PathExpr& path);

}  // namespace docpack
