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
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "docpack/bytes.hpp"
#include "docpack/path.hpp"
#include "docpack/vb_record.hpp"

namespace docpack {

using FieldNameId = uint32_t;

// ---------------------------------------------------------------------------
// Inferred schema: a tree of typed nodes with occurrence counters plus a
// field-name dictionary. Counters count value instances: a record whose array
// holds three objects with field x bumps x's node by three. The root object
// node always exists and carries no counter of its own.
// ---------------------------------------------------------------------------

struct SchemaNode {
  enum class Kind : uint8_t {
    Object = 1,
    Array = 2,
    Union = 3,
    String = 4,
    Int64 = 5,
    Double = 6,
    Boolean = 7,
    Null = 8,
  };

  explicit SchemaNode(Kind k, uint64_t c = 0) : kind(k), counter(c) {}

  Kind kind;
  uint64_t counter;
  std::map<FieldNameId, std::unique_ptr<SchemaNode>> fields;  // Object
  std::unique_ptr<SchemaNode> item;                           // Array
  std::map<Kind, std::unique_ptr<SchemaNode>> branches;       // Union

  bool is_scalar() const {
    return kind != Kind::Object && kind != Kind::Array && kind != Kind::Union;
  }
  std::unique_ptr<SchemaNode> clone() const;
  size_t subtree_node_count() const;
};

const char* schema_kind_name(SchemaNode::Kind k);

/// The schema of a single (deleted) record: a SchemaNode-shaped tree whose
/// counters are the per-node decrements. Object children are FieldNameIDs
/// resolved against the live dictionary at extraction time.
struct AntiSchema {
  std::unique_ptr<SchemaNode> root;  // Object node; null only when moved-from

  bool empty() const { return !root || (root->fields.empty() && root->counter == 0); }
  AntiSchema clone_shape() const {
    AntiSchema a;
    a.root = root ? root->clone() : nullptr;
    return a;
  }
};

class SchemaStore : public vb::FieldNameTable {
 public:
  SchemaStore();
  SchemaStore(SchemaStore&&) noexcept = default;
  SchemaStore& operator=(SchemaStore&&) noexcept = default;

  // FieldNameTable (dictionary view).
  std::optional<uint32_t> id_of(std::string_view name) const override;
  const std::string* name_of(uint32_t id) const override;

  /// Returns the id for a name, appending a fresh one if absent. Ids are
  /// dense, first-seen ordered, and never reused.
  FieldNameId intern(std::string_view name);

  const SchemaNode& root() const { return *root_; }
  uint64_t version() const { return version_; }
  size_t dictionary_size() const { return names_.size(); }
  const std::vector<std::string>& dictionary() const { return names_; }
  size_t node_count() const { return root_->subtree_node_count(); }

  /// Folds one uncompacted record into the schema. Root-level declared
  /// fields are skipped entirely. Bumps the version.
  void infer_record(const vb::VBRecord& rec, const vb::DeclaredFields& declared);

  /// Builds the anti-schema of a record (compacted or not) without mutating
  /// the store. Unknown field names are a corruption signal.
  AntiSchema extract_anti(const vb::VBRecord& rec,
                          const vb::DeclaredFields& declared) const;

  /// Decrements counters along the anti-schema; zero-counter nodes are
  /// removed and one-child unions collapse. Dictionary entries are retained.
  /// Bumps the version.
  void apply_anti(const AntiSchema& anti);

  Bytes serialize() const;
  static SchemaStore deserialize(ByteSpan bytes);

  /// Schema nodes reachable through the path; traversing a union fans out
  /// per branch, landing on one returns the union node itself.
  std::vector<const SchemaNode*> resolve_path(const PathExpr& path) const;

  SchemaStore clone() const;

 private:
  std::unique_ptr<SchemaNode> root_;
  std::vector<std::string> names_;
  std::map<std::string, FieldNameId, std::less<>> ids_;
  uint64_t version_ = 0;
};

/// Exact equality: dictionary ids, tree, counters, and version.
bool deep_equal(const SchemaStore& a, const SchemaStore& b);

/// Structural equality with object children matched by field name instead of
/// id, unions by kind. Ignores dictionary id assignment and version; compares
/// counters. This is the comparison for order-insensitivity and re-inference
/// oracles.
bool tree_equal_by_name(const SchemaStore& a, const SchemaStore& b);

}  // namespace docpack
