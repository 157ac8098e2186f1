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

#include "docpack/schema.hpp"

#include <functional>

namespace docpack {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'C', 'H'};
constexpr uint16_t kFormatVersion = 1;

SchemaNode::Kind kind_of_event(const vb::WalkEvent& ev) {
  using K = SchemaNode::Kind;
  switch (ev.kind) {
    case vb::WalkEvent::Kind::BeginObject:
      return K::Object;
    case vb::WalkEvent::Kind::BeginArray:
      return K::Array;
    default:
      switch (ev.tag) {
        case vb::TypeTag::String: return K::String;
        case vb::TypeTag::Int64: return K::Int64;
        case vb::TypeTag::Double: return K::Double;
        case vb::TypeTag::Boolean: return K::Boolean;
        default: return K::Null;
      }
  }
}

}  // namespace

std::unique_ptr<SchemaNode> SchemaNode::clone() const {
  auto out = std::make_unique<SchemaNode>(kind, counter);
  for (const auto& [id, child] : fields) out->fields[id] = child->clone();
  if (item) out->item = item->clone();
  for (const auto& [k, child] : branches) out->branches[k] = child->clone();
  return out;
}

size_t SchemaNode::subtree_node_count() const {
  size_t n = 1;
  for (const auto& [id, child] : fields) n += child->subtree_node_count();
  if (item) n += item->subtree_node_count();
  for (const auto& [k, child] : branches) n += child->subtree_node_count();
  return n;
}

const char* schema_kind_name(SchemaNode::Kind k) {
  switch (k) {
    case SchemaNode::Kind::Object: return "object";
    case SchemaNode::Kind::Array: return "array";
    case SchemaNode::Kind::Union: return "union";
    case SchemaNode::Kind::String: return "string";
    case SchemaNode::Kind::Int64: return "int64";
    case SchemaNode::Kind::Double: return "double";
    case SchemaNode::Kind::Boolean: return "boolean";
    case SchemaNode::Kind::Null: return "null";
  }
  return "?";
}

SchemaStore::SchemaStore()
    : root_(std::make_unique<SchemaNode>(SchemaNode::Kind::Object)) {}

std::optional<uint32_t> SchemaStore::id_of(std::string_view name) const {
  auto it = ids_.find(name);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string* SchemaStore::name_of(uint32_t id) const {
  if (id >= names_.size()) return nullptr;
  return &names_[id];
}

FieldNameId SchemaStore::intern(std::string_view name) {
  auto it = ids_.find(name);
  if (it != ids_.end()) return it->second;
  FieldNameId id = static_cast<FieldNameId>(names_.size());
  names_.emplace_back(name);
  ids_.emplace(names_.back(), id);
  return id;
}

// ---------------------------------------------------------------------------
// Record absorption: the shared walk behind infer_record and extract_anti.
// Visiting a slot whose existing node has a different concrete kind wraps it
// into a union; visiting through a union descends into the matching branch.
// ---------------------------------------------------------------------------

namespace {

/// Returns the concrete node for a value of `kind` within `slot`, creating or
/// union-wrapping as needed, with counters bumped.
SchemaNode* visit_slot(std::unique_ptr<SchemaNode>& slot, SchemaNode::Kind kind) {
  if (!slot) {
    slot = std::make_unique<SchemaNode>(kind, 1);
    return slot.get();
  }
  SchemaNode* node = slot.get();
  if (node->kind == SchemaNode::Kind::Union) {
    node->counter += 1;
    auto& branch = node->branches[kind];
    if (!branch) branch = std::make_unique<SchemaNode>(kind, 0);
    branch->counter += 1;
    return branch.get();
  }
  if (node->kind == kind) {
    node->counter += 1;
    return node;
  }
  // Kind conflict: wrap the existing node into a union.
  auto wrapped = std::make_unique<SchemaNode>(SchemaNode::Kind::Union,
                                              node->counter + 1);
  SchemaNode::Kind old_kind = node->kind;
  wrapped->branches[old_kind] = std::move(slot);
  auto& fresh = wrapped->branches[kind];
  fresh = std::make_unique<SchemaNode>(kind, 1);
  SchemaNode* out = fresh.get();
  slot = std::move(wrapped);
  return out;
}

using NameToId = std::function<FieldNameId(const vb::FieldRef&)>;

/// Walks `rec` and folds every non-declared value into the tree under `root`.
void absorb_record(SchemaNode& root, const vb::VBRecord& rec,
                   const NameToId& resolve) {
  vb::RecordWalker walker(rec);
  std::vector<SchemaNode*> stack;
  int skip_depth = 0;  // >0 while inside a declared root field's subtree

  for (;;) {
    vb::WalkEvent ev = walker.next();
    if (ev.kind == vb::WalkEvent::Kind::End) break;
    if (skip_depth > 0) {
      if (ev.kind == vb::WalkEvent::Kind::BeginObject ||
          ev.kind == vb::WalkEvent::Kind::BeginArray)
        ++skip_depth;
      else if (ev.kind == vb::WalkEvent::Kind::EndNest)
        --skip_depth;
      continue;
    }
    if (ev.kind == vb::WalkEvent::Kind::EndNest) {
      stack.pop_back();
      continue;
    }
    if (stack.empty()) {
      // Root object of the record; maps onto the store's root node.
      stack.push_back(&root);
      continue;
    }
    if (ev.field.under_object && ev.field.declared) {
      // Declared fields are never recorded in the schema.
      if (ev.kind != vb::WalkEvent::Kind::Scalar) skip_depth = 1;
      continue;
    }

    SchemaNode* parent = stack.back();
    SchemaNode::Kind kind = kind_of_event(ev);
    SchemaNode* node;
    if (ev.field.under_object) {
      FieldNameId id = resolve(ev.field);
      node = visit_slot(parent->fields[id], kind);
    } else {
      node = visit_slot(parent->item, kind);
    }
    if (ev.kind != vb::WalkEvent::Kind::Scalar) stack.push_back(node);
  }
}

}  // namespace

void SchemaStore::infer_record(const vb::VBRecord& rec,
                               const vb::DeclaredFields& declared) {
  (void)declared;
  if (rec.compacted())
    throw SchemaError("infer_record expects an uncompacted record");
  absorb_record(*root_, rec, [this](const vb::FieldRef& f) {
    return intern(f.name);
  });
  ++version_;
}

AntiSchema SchemaStore::extract_anti(const vb::VBRecord& rec,
                                     const vb::DeclaredFields& declared) const {
  (void)declared;
  AntiSchema anti;
  anti.root = std::make_unique<SchemaNode>(SchemaNode::Kind::Object);
  NameToId resolve;
  if (rec.compacted()) {
    resolve = [this](const vb::FieldRef& f) -> FieldNameId {
      if (f.payload >= names_.size())
        throw SchemaError("anti-schema extraction: FieldNameID " +
                          std::to_string(f.payload) + " not in dictionary");
      return f.payload;
    };
  } else {
    resolve = [this](const vb::FieldRef& f) -> FieldNameId {
      auto id = id_of(f.name);
      if (!id)
        throw SchemaError("anti-schema extraction: name not in dictionary: " +
                          std::string(f.name));
      return *id;
    };
  }
  absorb_record(*anti.root, rec, resolve);
  return anti;
}

// ---------------------------------------------------------------------------
// apply_anti
// ---------------------------------------------------------------------------

namespace {

void subtract_counter(SchemaNode& live, uint64_t dec) {
  if (live.counter < dec)
    throw SchemaError("anti-schema decrement below zero");
  live.counter -= dec;
}

void subtract(std::unique_ptr<SchemaNode>& live_slot, const SchemaNode& anti);

void subtract_concrete(SchemaNode& live, const SchemaNode& anti) {
  if (live.kind != anti.kind)
    throw SchemaError("anti-schema kind mismatch: live " +
                      std::string(schema_kind_name(live.kind)) + " vs " +
                      schema_kind_name(anti.kind));
  subtract_counter(live, anti.counter);
  for (const auto& [id, achild] : anti.fields) {
    auto it = live.fields.find(id);
    if (it == live.fields.end())
      throw SchemaError("anti-schema names a field absent from the schema");
    subtract(it->second, *achild);
    if (it->second == nullptr || it->second->counter == 0)
      live.fields.erase(it);
  }
  if (anti.item) {
    if (!live.item)
      throw SchemaError("anti-schema names an item type absent from the schema");
    subtract(live.item, *anti.item);
    if (live.item && live.item->counter == 0) live.item.reset();
  }
}

void subtract(std::unique_ptr<SchemaNode>& live_slot, const SchemaNode& anti) {
  SchemaNode* live = live_slot.get();
  if (live->kind == SchemaNode::Kind::Union) {
    subtract_counter(*live, anti.counter);
    auto take_branch = [&](SchemaNode::Kind k) -> std::unique_ptr<SchemaNode>& {
      auto it = live->branches.find(k);
      if (it == live->branches.end())
        throw SchemaError("anti-schema names a union branch absent from schema");
      return it->second;
    };
    if (anti.kind == SchemaNode::Kind::Union) {
      for (const auto& [k, abr] : anti.branches) {
        auto& br = take_branch(k);
        subtract_concrete(*br, *abr);
        if (br->counter == 0) live->branches.erase(k);
      }
    } else {
      auto& br = take_branch(anti.kind);
      subtract_concrete(*br, anti);
      if (br->counter == 0) live->branches.erase(anti.kind);
    }
    if (live->counter == 0) {
      live_slot.reset();
      return;
    }
    if (live->branches.empty())
      throw SchemaError("union counter out of step with its branches");
    if (live->branches.size() == 1) {
      // One-branch unions collapse to the surviving branch.
      std::unique_ptr<SchemaNode> survivor =
          std::move(live->branches.begin()->second);
      live_slot = std::move(survivor);
    }
    return;
  }
  if (anti.kind == SchemaNode::Kind::Union)
    throw SchemaError("anti-schema union against a concrete schema node");
  subtract_concrete(*live, anti);
  if (live->counter == 0) live_slot.reset();
}

}  // namespace

void SchemaStore::apply_anti(const AntiSchema& anti) {
  if (!anti.root) return;
  // The store root is permanent; subtract its children directly.
  for (const auto& [id, achild] : anti.root->fields) {
    auto it = root_->fields.find(id);
    if (it == root_->fields.end())
      throw SchemaError("anti-schema names a root field absent from the schema");
    subtract(it->second, *achild);
    if (it->second == nullptr || it->second->counter == 0)
      root_->fields.erase(it);
  }
  ++version_;
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

namespace {

void write_node(ByteWriter& w, const SchemaNode& n) {
  w.u8(static_cast<uint8_t>(n.kind));
  w.varint(n.counter);
  switch (n.kind) {
    case SchemaNode::Kind::Object:
      w.varint(n.fields.size());
      for (const auto& [id, child] : n.fields) {
        w.varint(id);
        write_node(w, *child);
      }
      break;
    case SchemaNode::Kind::Array:
      w.u8(n.item ? 1 : 0);
      if (n.item) write_node(w, *n.item);
      break;
    case SchemaNode::Kind::Union:
      w.varint(n.branches.size());
      for (const auto& [k, child] : n.branches) write_node(w, *child);
      break;
    default:
      break;
  }
}

std::unique_ptr<SchemaNode> read_node(ByteReader& r, int depth) {
  if (depth > 256) throw FormatError("schema blob nesting too deep");
  uint8_t raw = r.u8();
  if (raw < 1 || raw > 8) throw FormatError("schema blob: bad node kind");
  auto n = std::make_unique<SchemaNode>(static_cast<SchemaNode::Kind>(raw));
  n->counter = r.varint();
  switch (n->kind) {
    case SchemaNode::Kind::Object: {
      uint64_t count = r.varint();
      for (uint64_t i = 0; i < count; ++i) {
        FieldNameId id = static_cast<FieldNameId>(r.varint());
        n->fields[id] = read_node(r, depth + 1);
      }
      break;
    }
    case SchemaNode::Kind::Array:
      if (r.u8()) n->item = read_node(r, depth + 1);
      break;
    case SchemaNode::Kind::Union: {
      uint64_t count = r.varint();
      for (uint64_t i = 0; i < count; ++i) {
        auto child = read_node(r, depth + 1);
        SchemaNode::Kind k = child->kind;
        n->branches[k] = std::move(child);
      }
      break;
    }
    default:
      break;
  }
  return n;
}

}  // namespace

Bytes SchemaStore::serialize() const {
  Bytes out;
  ByteWriter w(out);
  w.raw(ByteSpan(reinterpret_cast<const uint8_t*>(kMagic), 4));
  w.u16(kFormatVersion);
  w.u64(version_);
  w.varint(names_.size());
  for (const std::string& n : names_) {
    w.varint(n.size());
    w.raw(n);
  }
  write_node(w, *root_);
  return out;
}

SchemaStore SchemaStore::deserialize(ByteSpan bytes) {
  ByteReader r(bytes);
  ByteSpan magic = r.raw(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0)
    throw FormatError("schema blob: bad magic");
  if (r.u16() != kFormatVersion)
    throw FormatError("schema blob: unsupported format version");
  SchemaStore s;
  s.version_ = r.u64();
  uint64_t count = r.varint();
  for (uint64_t i = 0; i < count; ++i) {
    uint64_t len = r.varint();
    s.names_.push_back(r.str(len));
    s.ids_.emplace(s.names_.back(), static_cast<FieldNameId>(i));
  }
  s.root_ = read_node(r, 0);
  if (s.root_->kind != SchemaNode::Kind::Object)
    throw FormatError("schema blob: root must be an object");
  if (!r.done()) throw FormatError("schema blob: trailing bytes");
  return s;
}

SchemaStore SchemaStore::clone() const {
  SchemaStore s;
  s.root_ = root_->clone();
  s.names_ = names_;
  for (size_t i = 0; i < names_.size(); ++i)
    s.ids_.emplace(names_[i], static_cast<FieldNameId>(i));
  s.version_ = version_;
  return s;
}

// ---------------------------------------------------------------------------
// path resolution & equality
// ---------------------------------------------------------------------------

std::vector<const SchemaNode*> SchemaStore::resolve_path(
    const PathExpr& path) const {
  std::vector<const SchemaNode*> current{root_.get()};
  for (const PathStep& step : path.steps()) {
    std::vector<const SchemaNode*> next;
    auto consider = [&](const SchemaNode* n) {
      switch (step.kind) {
        case PathStep::Kind::Field: {
          if (n->kind != SchemaNode::Kind::Object) return;
          auto id = id_of(step.name);
          if (!id) return;
          auto it = n->fields.find(*id);
          if (it != n->fields.end()) next.push_back(it->second.get());
          break;
        }
        case PathStep::Kind::Index:
        case PathStep::Kind::Wildcard:
          if (n->kind == SchemaNode::Kind::Array && n->item)
            next.push_back(n->item.get());
          break;
      }
    };
    for (const SchemaNode* n : current) {
      if (n->kind == SchemaNode::Kind::Union) {
        for (const auto& [k, br] : n->branches) consider(br.get());
      } else {
        consider(n);
      }
    }
    current = std::move(next);
    if (current.empty()) break;
  }
  return current;
}

namespace {

bool nodes_equal_by_id(const SchemaNode& a, const SchemaNode& b) {
  if (a.kind != b.kind || a.counter != b.counter) return false;
  if (a.fields.size() != b.fields.size() ||
      a.branches.size() != b.branches.size() ||
      static_cast<bool>(a.item) != static_cast<bool>(b.item))
    return false;
  for (const auto& [id, child] : a.fields) {
    auto it = b.fields.find(id);
    if (it == b.fields.end() || !nodes_equal_by_id(*child, *it->second))
      return false;
  }
  if (a.item && !nodes_equal_by_id(*a.item, *b.item)) return false;
  for (const auto& [k, child] : a.branches) {
    auto it = b.branches.find(k);
    if (it == b.branches.end() || !nodes_equal_by_id(*child, *it->second))
      return false;
  }
  return true;
}

bool nodes_equal_by_name(const SchemaNode& a, const SchemaStore& sa,
                         const SchemaNode& b, const SchemaStore& sb) {
  if (a.kind != b.kind || a.counter != b.counter) return false;
  if (a.fields.size() != b.fields.size() ||
      a.branches.size() != b.branches.size() ||
      static_cast<bool>(a.item) != static_cast<bool>(b.item))
    return false;
  for (const auto& [id, child] : a.fields) {
    const std::string* name = sa.name_of(id);
    if (!name) return false;
    auto other_id = sb.id_of(*name);
    if (!other_id) return false;
    auto it = b.fields.find(*other_id);
    if (it == b.fields.end()) return false;
    if (!nodes_equal_by_name(*child, sa, *it->second, sb)) return false;
  }
  if (a.item && !nodes_equal_by_name(*a.item, sa, *b.item, sb)) return false;
  for (const auto& [k, child] : a.branches) {
    auto it = b.branches.find(k);
    if (it == b.branches.end()) return false;
    if (!nodes_equal_by_name(*child, sa, *it->second, sb)) return false;
  }
  return true;
}

}  // namespace

bool deep_equal(const SchemaStore& a, const SchemaStore& b) {
  return a.version() == b.version() && a.dictionary() == b.dictionary() &&
         nodes_equal_by_id(a.root(), b.root());
}

bool tree_equal_by_name(const SchemaStore& a, const SchemaStore& b) {
  return nodes_equal_by_name(a.root(), a, b.root(), b);
}

}  // namespace docpack
