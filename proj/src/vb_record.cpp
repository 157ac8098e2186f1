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

#include "docpack/vb_record.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <cstring>

namespace docpack::vb {

namespace instrument {

namespace {
std::atomic<uint64_t> g_tag_scans{0};
}

uint64_t tag_scans() { return g_tag_scans.load(std::memory_order_relaxed); }
void bump_tag_scans() { g_tag_scans.fetch_add(1, std::memory_order_relaxed); }

}  // namespace instrument

namespace {

Header parse_header(ByteSpan bytes) {
  if (bytes.size() < kHeaderSize) throw FormatError("record shorter than header");
  ByteReader r(bytes);
  Header h;
  h.total_length = r.u32();
  h.tag_count = r.u32();
  h.offset_tags = r.u32();
  h.offset_fixed = r.u32();
  h.offset_var = r.u32();
  h.offset_fieldnames = r.u32();
  h.var_len_bits = r.u8();
  h.fieldname_len_bits = r.u8();
  return h;
}

void write_header(ByteWriter& w, const Header& h) {
  w.u32(h.total_length);
  w.u32(h.tag_count);
  w.u32(h.offset_tags);
  w.u32(h.offset_fixed);
  w.u32(h.offset_var);
  w.u32(h.offset_fieldnames);
  w.u8(h.var_len_bits);
  w.u8(h.fieldname_len_bits);
}

/// Structural facts derived from one pass over the tag vector.
struct TagStats {
  size_t n_strings = 0;
  size_t n_entries = 0;  // values whose immediate parent is an object
  size_t fixed_bytes = 0;
};

TagStats scan_tags(ByteSpan tags) {
  TagStats st;
  std::vector<TypeTag> stack;
  for (size_t i = 0; i < tags.size(); ++i) {
    uint8_t raw = tags[i];
    if (raw < kMinTag || raw > kMaxTag)
      throw FormatError("invalid tag byte at index " + std::to_string(i));
    TypeTag t = static_cast<TypeTag>(raw);
    if (t == TypeTag::CloseNest) {
      if (stack.size() < 2) throw FormatError("unbalanced close tag");
      stack.pop_back();
      continue;
    }
    if (t == TypeTag::Eov) {
      if (stack.size() != 1) throw FormatError("end-of-values at wrong depth");
      if (i + 1 != tags.size()) throw FormatError("tags after end-of-values");
      stack.pop_back();
      return st;
    }
    if (i == 0 && !is_nest_tag(t)) throw FormatError("root tag must be a nest");
    if (i > 0 && stack.empty()) throw FormatError("value outside root");
    if (!stack.empty() && stack.back() == TypeTag::Object) ++st.n_entries;
    if (t == TypeTag::String) ++st.n_strings;
    st.fixed_bytes += fixed_size_of(t);
    if (is_nest_tag(t)) stack.push_back(t);
  }
  throw FormatError("tag stream missing end-of-values");
}

struct Sections {
  ByteSpan tags;
  ByteSpan var_len_region;
  size_t fixed_start = 0;
  size_t var_values_start = 0;
  size_t entries_start = 0;
  size_t entries_bytes = 0;
  size_t names_start = 0;  // == total_length when compacted
  std::vector<uint32_t> var_lens;
  TagStats stats;
};

Sections derive_sections(ByteSpan bytes, const Header& h) {
  Sections s;
  if (h.offset_tags != kHeaderSize) throw FormatError("bad tags offset");
  if (h.offset_fixed != h.offset_tags + h.tag_count ||
      h.offset_fixed > bytes.size())
    throw FormatError("bad fixed-values offset");
  s.tags = bytes.subspan(h.offset_tags, h.tag_count);
  s.stats = scan_tags(s.tags);
  s.fixed_start = h.offset_fixed;
  if (h.offset_var != h.offset_fixed + s.stats.fixed_bytes ||
      h.offset_var > bytes.size())
    throw FormatError("bad var-values offset");
  if (h.var_len_bits < 1 || h.var_len_bits > kMaxWidthBits)
    throw FormatError("var length width out of range");
  if (h.fieldname_len_bits < 2 || h.fieldname_len_bits > kMaxWidthBits)
    throw FormatError("field-name width out of range");

  size_t vl_bytes = packed_bytes(s.stats.n_strings, h.var_len_bits);
  if (h.offset_var + vl_bytes > bytes.size())
    throw FormatError("var-length vector truncated");
  s.var_len_region = bytes.subspan(h.offset_var, vl_bytes);
  BitReader lens(s.var_len_region);
  uint64_t var_total = 0;
  s.var_lens.reserve(s.stats.n_strings);
  for (size_t i = 0; i < s.stats.n_strings; ++i) {
    uint32_t len = lens.get(h.var_len_bits);
    s.var_lens.push_back(len);
    var_total += len;
  }
  s.var_values_start = h.offset_var + vl_bytes;
  s.entries_start = s.var_values_start + var_total;
  s.entries_bytes = packed_bytes(s.stats.n_entries, h.fieldname_len_bits);
  size_t entries_end = s.entries_start + s.entries_bytes;
  if (entries_end > bytes.size()) throw FormatError("entries vector truncated");
  if (h.offset_fieldnames == 0) {
    if (entries_end != bytes.size())
      throw FormatError("trailing bytes after entries in compacted record");
    s.names_start = bytes.size();
  } else {
    if (h.offset_fieldnames != entries_end)
      throw FormatError("bad field-names offset");
    s.names_start = h.offset_fieldnames;
  }
  return s;
}

}  // namespace

VBRecord VBRecord::adopt(Bytes bytes) {
  Header h = parse_header(ByteSpan(bytes));
  if (h.total_length != bytes.size())
    throw FormatError("record length mismatch: header says " +
                      std::to_string(h.total_length) + ", have " +
                      std::to_string(bytes.size()));
  return VBRecord(std::move(bytes), h);
}

// ---------------------------------------------------------------------------
// RecordWalker
// ---------------------------------------------------------------------------

RecordWalker::RecordWalker(const VBRecord& rec)
    : rec_(rec),
      bytes_(rec.bytes()),
      tag_pos_(0),
      fixed_pos_(0),
      var_lens_({}),
      fn_entries_({}) {
  instrument::bump_tag_scans();
  Sections s = derive_sections(bytes_, rec.header());
  fixed_pos_ = s.fixed_start;
  var_val_pos_ = s.var_values_start;
  fn_val_pos_ = s.names_start;
  n_strings_ = s.stats.n_strings;
  n_entries_ = s.stats.n_entries;
  var_lens_ = BitReader(s.var_len_region);
  fn_entries_ = BitReader(
      bytes_.subspan(s.entries_start, s.entries_bytes));
}

FieldRef RecordWalker::read_field_ref() {
  if (entries_seen_ >= n_entries_)
    throw FormatError("field-name entry vector exhausted");
  ++entries_seen_;
  uint8_t width = rec_.header().fieldname_len_bits;
  uint32_t entry = fn_entries_.get(width);
  FieldRef ref;
  ref.under_object = true;
  ref.declared = (entry >> (width - 1)) & 1;
  ref.payload = entry & ((1u << (width - 1)) - 1);
  if (!ref.declared && !rec_.compacted()) {
    if (fn_val_pos_ + ref.payload > bytes_.size())
      throw FormatError("field-name bytes truncated");
    ref.name = std::string_view(
        reinterpret_cast<const char*>(bytes_.data()) + fn_val_pos_, ref.payload);
    fn_val_pos_ += ref.payload;
  }
  return ref;
}

WalkEvent RecordWalker::next() {
  if (done_) throw FormatError("walk past end of record");
  const Header& h = rec_.header();
  if (tag_pos_ >= h.tag_count) throw FormatError("tag stream overrun");
  TypeTag tag = static_cast<TypeTag>(bytes_[h.offset_tags + tag_pos_]);
  ++tag_pos_;

  WalkEvent ev;
  if (tag == TypeTag::CloseNest) {
    stack_.pop_back();
    ev.kind = WalkEvent::Kind::EndNest;
    ev.depth = static_cast<uint32_t>(stack_.size());
    return ev;
  }
  if (tag == TypeTag::Eov) {
    stack_.pop_back();
    done_ = true;
    ev.kind = WalkEvent::Kind::End;
    ev.depth = 0;
    return ev;
  }

  ev.depth = static_cast<uint32_t>(stack_.size());
  if (!stack_.empty() && stack_.back() == TypeTag::Object)
    ev.field = read_field_ref();

  switch (tag) {
    case TypeTag::Object:
      ev.kind = WalkEvent::Kind::BeginObject;
      ev.tag = tag;
      stack_.push_back(tag);
      break;
    case TypeTag::Array:
      ev.kind = WalkEvent::Kind::BeginArray;
      ev.tag = tag;
      stack_.push_back(tag);
      break;
    case TypeTag::String: {
      ev.kind = WalkEvent::Kind::Scalar;
      ev.tag = tag;
      if (strings_seen_ >= n_strings_)
        throw FormatError("string value vector exhausted");
      ++strings_seen_;
      uint32_t len = var_lens_.get(h.var_len_bits);
      if (var_val_pos_ + len > bytes_.size())
        throw FormatError("string bytes truncated");
      ev.strv = std::string_view(
          reinterpret_cast<const char*>(bytes_.data()) + var_val_pos_, len);
      var_val_pos_ += len;
      break;
    }
    case TypeTag::Int64: {
      ev.kind = WalkEvent::Kind::Scalar;
      ev.tag = tag;
      ByteReader r(bytes_.subspan(fixed_pos_, 8));
      ev.i64v = r.i64();
      fixed_pos_ += 8;
      break;
    }
    case TypeTag::Double: {
      ev.kind = WalkEvent::Kind::Scalar;
      ev.tag = tag;
      ByteReader r(bytes_.subspan(fixed_pos_, 8));
      ev.f64v = r.f64();
      fixed_pos_ += 8;
      break;
    }
    case TypeTag::Boolean:
      ev.kind = WalkEvent::Kind::Scalar;
      ev.tag = tag;
      ev.boolv = bytes_[fixed_pos_] != 0;
      fixed_pos_ += 1;
      break;
    case TypeTag::Null:
      ev.kind = WalkEvent::Kind::Scalar;
      ev.tag = tag;
      break;
    default:
      throw FormatError("invalid tag in walk");
  }
  return ev;
}

// ---------------------------------------------------------------------------
// encode
// ---------------------------------------------------------------------------

namespace {

struct EncodeState {
  std::vector<uint8_t> tags;
  Bytes fixed;
  std::vector<uint32_t> var_lens;
  Bytes var_values;
  struct Entry {
    bool declared;
    uint32_t payload;
  };
  std::vector<Entry> entries;
  Bytes names;
};

void emit_value(EncodeState& st, const JsonDoc& doc, const DeclaredFields& declared,
                bool at_root) {
  switch (doc.kind()) {
    case JsonDoc::Kind::Object: {
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Object));
      for (size_t i = 0; i < doc.field_count(); ++i) {
        const std::string& name = doc.field_name(i);
        std::optional<uint32_t> idx =
            at_root ? declared.index_of(name) : std::nullopt;
        if (idx) {
          st.entries.push_back({true, *idx});
        } else {
          if (name.size() > kMaxFieldNameLen)
            throw FormatError("field name longer than representable budget: " +
                              name.substr(0, 32));
          st.entries.push_back({false, static_cast<uint32_t>(name.size())});
          st.names.insert(st.names.end(), name.begin(), name.end());
        }
        emit_value(st, doc.field_value(i), declared, false);
      }
      if (!at_root)
        st.tags.push_back(static_cast<uint8_t>(TypeTag::CloseNest));
      break;
    }
    case JsonDoc::Kind::Array: {
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Array));
      for (size_t i = 0; i < doc.item_count(); ++i)
        emit_value(st, doc.item(i), declared, false);
      st.tags.push_back(static_cast<uint8_t>(TypeTag::CloseNest));
      break;
    }
    case JsonDoc::Kind::String: {
      const std::string& s = doc.as_string();
      if (s.size() > kMaxStringLen)
        throw FormatError("string value longer than representable budget");
      st.tags.push_back(static_cast<uint8_t>(TypeTag::String));
      st.var_lens.push_back(static_cast<uint32_t>(s.size()));
      st.var_values.insert(st.var_values.end(), s.begin(), s.end());
      break;
    }
    case JsonDoc::Kind::Int64: {
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Int64));
      ByteWriter w(st.fixed);
      w.i64(doc.as_int());
      break;
    }
    case JsonDoc::Kind::Double: {
      if (!std::isfinite(doc.as_double()))
        throw FormatError("unsupported scalar: non-finite double");
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Double));
      ByteWriter w(st.fixed);
      w.f64(doc.as_double());
      break;
    }
    case JsonDoc::Kind::Boolean:
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Boolean));
      st.fixed.push_back(doc.as_bool() ? 1 : 0);
      break;
    case JsonDoc::Kind::Null:
      st.tags.push_back(static_cast<uint8_t>(TypeTag::Null));
      break;
  }
}

Bytes assemble(const std::vector<uint8_t>& tags, const Bytes& fixed,
               const std::vector<uint32_t>& var_lens, const Bytes& var_values,
               const std::vector<EncodeState::Entry>& entries,
               const Bytes& names, bool compacted) {
  uint64_t max_var = 0;
  for (uint32_t l : var_lens) max_var = std::max<uint64_t>(max_var, l);
  uint32_t var_bits = min_bits_for(max_var);

  uint64_t max_payload = 0;
  for (const auto& e : entries)
    max_payload = std::max<uint64_t>(max_payload, e.payload);
  uint32_t payload_bits = min_bits_for(max_payload);
  if (payload_bits + 1 > kMaxWidthBits)
    throw FormatError("field-name entry payload exceeds width budget");
  uint32_t fn_bits = payload_bits + 1;

  BitWriter var_w;
  for (uint32_t l : var_lens) var_w.put(l, var_bits);
  Bytes var_packed = var_w.finish();

  BitWriter fn_w;
  for (const auto& e : entries)
    fn_w.put((e.declared ? (1u << payload_bits) : 0u) | e.payload, fn_bits);
  Bytes fn_packed = fn_w.finish();

  Header h;
  h.tag_count = static_cast<uint32_t>(tags.size());
  h.offset_tags = kHeaderSize;
  h.offset_fixed = static_cast<uint32_t>(kHeaderSize + tags.size());
  h.offset_var = static_cast<uint32_t>(h.offset_fixed + fixed.size());
  size_t entries_start = h.offset_var + var_packed.size() + var_values.size();
  size_t names_start = entries_start + fn_packed.size();
  h.offset_fieldnames = compacted ? 0 : static_cast<uint32_t>(names_start);
  h.total_length = static_cast<uint32_t>(names_start + (compacted ? 0 : names.size()));
  h.var_len_bits = static_cast<uint8_t>(var_bits);
  h.fieldname_len_bits = static_cast<uint8_t>(fn_bits);

  Bytes out;
  out.reserve(h.total_length);
  ByteWriter w(out);
  write_header(w, h);
  w.raw(ByteSpan(tags));
  w.raw(ByteSpan(fixed));
  w.raw(ByteSpan(var_packed));
  w.raw(ByteSpan(var_values));
  w.raw(ByteSpan(fn_packed));
  if (!compacted) w.raw(ByteSpan(names));
  return out;
}

}  // namespace

VBRecord encode(const JsonDoc& doc, const DeclaredFields& declared) {
  if (!doc.is_object()) throw FormatError("record root must be an object");
  EncodeState st;
  emit_value(st, doc, declared, true);
  st.tags.push_back(static_cast<uint8_t>(TypeTag::Eov));
  return VBRecord::adopt(assemble(st.tags, st.fixed, st.var_lens, st.var_values,
                                  st.entries, st.names, false));
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

namespace {

std::string resolve_name(const FieldRef& f, bool compacted,
                         const FieldNameTable* names,
                         const DeclaredFields& declared) {
  if (f.declared) return declared.name_at(f.payload);
  if (!compacted) return std::string(f.name);
  const std::string* n = names->name_of(f.payload);
  if (!n)
    throw FormatError("FieldNameID " + std::to_string(f.payload) +
                      " not in dictionary");
  return *n;
}

JsonDoc scalar_doc(const WalkEvent& ev) {
  switch (ev.tag) {
    case TypeTag::String:
      return JsonDoc::string(std::string(ev.strv));
    case TypeTag::Int64:
      return JsonDoc::integer(ev.i64v);
    case TypeTag::Double:
      return JsonDoc::number(ev.f64v);
    case TypeTag::Boolean:
      return JsonDoc::boolean(ev.boolv);
    default:
      return JsonDoc::null();
  }
}

}  // namespace

JsonDoc decode(const VBRecord& rec, const FieldNameTable* names,
               const DeclaredFields& declared) {
  if (rec.compacted() && names == nullptr)
    throw FormatError("compacted record requires a schema to decode");

  RecordWalker walker(rec);
  JsonDoc root;
  std::vector<JsonDoc*> stack;
  bool have_root = false;

  for (;;) {
    WalkEvent ev = walker.next();
    if (ev.kind == WalkEvent::Kind::End) break;
    if (ev.kind == WalkEvent::Kind::EndNest) {
      stack.pop_back();
      continue;
    }
    JsonDoc value = (ev.kind == WalkEvent::Kind::Scalar) ? scalar_doc(ev)
                    : (ev.kind == WalkEvent::Kind::BeginObject)
                        ? JsonDoc::object()
                        : JsonDoc::array();
    JsonDoc* attached;
    if (stack.empty()) {
      if (have_root) throw FormatError("multiple roots");
      root = std::move(value);
      attached = &root;
      have_root = true;
    } else if (ev.field.under_object) {
      attached = &stack.back()->add_field(
          resolve_name(ev.field, rec.compacted(), names, declared),
          std::move(value));
    } else {
      attached = &stack.back()->append(std::move(value));
    }
    if (ev.kind != WalkEvent::Kind::Scalar) stack.push_back(attached);
  }
  if (!have_root) throw FormatError("empty record");
  return root;
}

// ---------------------------------------------------------------------------
// compact
// ---------------------------------------------------------------------------

VBRecord compact(const VBRecord& rec, const FieldNameTable& names) {
  if (rec.compacted()) throw FormatError("record already compacted");

  std::vector<EncodeState::Entry> entries;
  {
    RecordWalker walker(rec);
    for (;;) {
      WalkEvent ev = walker.next();
      if (ev.kind == WalkEvent::Kind::End) break;
      if (!ev.field.under_object) continue;
      if (ev.field.declared) {
        entries.push_back({true, ev.field.payload});
      } else {
        std::optional<uint32_t> id = names.id_of(ev.field.name);
        if (!id)
          throw SchemaError("dictionary lookup miss while compacting: " +
                            std::string(ev.field.name));
        entries.push_back({false, *id});
      }
    }
  }

  // Value vectors are carried over byte for byte.
  const Header& h = rec.header();
  ByteSpan bytes = rec.bytes();
  Sections s = derive_sections(bytes, h);
  std::vector<uint8_t> tags(s.tags.begin(), s.tags.end());
  Bytes fixed(bytes.begin() + h.offset_fixed, bytes.begin() + h.offset_var);
  Bytes var_values(bytes.begin() + s.var_values_start,
                   bytes.begin() + s.entries_start);
  return VBRecord::adopt(assemble(tags, fixed, s.var_lens, var_values, entries,
                                  {}, true));
}

// ---------------------------------------------------------------------------
// get_values: all paths resolved in one walk
// ---------------------------------------------------------------------------

namespace {

struct StepMatcher {
  PathStep::Kind kind;
  std::string name;
  std::optional<uint32_t> declared_idx;
  std::optional<uint32_t> dict_id;
  uint32_t index = 0;
};

struct PathMatcher {
  std::vector<StepMatcher> steps;
  int wpos = -1;
  bool aligned = false;
  // results
  std::optional<JsonDoc> single;
  bool array_found = false;
  std::vector<JsonDoc> collected;                 // wildcard, skip-missing
  std::vector<std::optional<JsonDoc>> slots;      // wildcard, aligned
};

struct PosElem {
  bool is_field = false;
  bool declared = false;
  uint32_t payload = 0;
  std::string_view name;  // inline name (uncompacted only)
  uint32_t index = 0;     // array position
};

bool step_matches(const StepMatcher& sm, const PosElem& pe, bool compacted) {
  switch (sm.kind) {
    case PathStep::Kind::Field:
      if (!pe.is_field) return false;
      if (pe.declared) return sm.declared_idx && *sm.declared_idx == pe.payload;
      if (compacted) return sm.dict_id && *sm.dict_id == pe.payload;
      return pe.name == sm.name;
    case PathStep::Kind::Index:
      return !pe.is_field && pe.index == sm.index;
    case PathStep::Kind::Wildcard:
      return !pe.is_field;
  }
  return false;
}

bool position_matches(const PathMatcher& pm, const std::vector<PosElem>& pos,
                      size_t upto, bool compacted) {
  if (pos.size() < upto) return false;
  for (size_t i = 0; i < upto; ++i)
    if (!step_matches(pm.steps[i], pos[i], compacted)) return false;
  return true;
}

/// Rebuilds a JsonDoc subtree from walk events (a selective decoder). The
/// root lives on the heap so interior pointers survive moves of the Capture
/// itself.
struct Capture {
  size_t path_idx = 0;
  std::unique_ptr<JsonDoc> root = std::make_unique<JsonDoc>();
  std::vector<JsonDoc*> stack;
  bool finished = false;

  void feed(const WalkEvent& ev, const std::string* resolved_name) {
    if (ev.kind == WalkEvent::Kind::EndNest) {
      stack.pop_back();
      if (stack.empty()) finished = true;
      return;
    }
    JsonDoc value = (ev.kind == WalkEvent::Kind::Scalar) ? scalar_doc(ev)
                    : (ev.kind == WalkEvent::Kind::BeginObject)
                        ? JsonDoc::object()
                        : JsonDoc::array();
    JsonDoc* attached;
    if (stack.empty()) {
      *root = std::move(value);
      attached = root.get();
    } else if (resolved_name) {
      attached = &stack.back()->add_field(*resolved_name, std::move(value));
    } else {
      attached = &stack.back()->append(std::move(value));
    }
    if (ev.kind != WalkEvent::Kind::Scalar) {
      stack.push_back(attached);
    } else if (stack.empty()) {
      finished = true;
    }
  }
};

}  // namespace

ExtractResult extract_values(const VBRecord& rec, const FieldNameTable* names,
                             const DeclaredFields& declared,
                             const ExtractSpec& spec) {
  if (rec.compacted() && names == nullptr)
    throw FormatError("compacted record requires a schema for field access");

  const bool compacted = rec.compacted();
  std::vector<PathMatcher> matchers;
  matchers.reserve(spec.paths.size() + spec.aligned_paths.size());
  auto add_matcher = [&](const PathExpr& p, bool aligned) {
    if (aligned && !p.has_wildcard())
      throw FormatError("aligned extraction path needs a wildcard: " +
                        p.to_string());
    PathMatcher pm;
    pm.wpos = p.wildcard_pos();
    pm.aligned = aligned;
    for (const PathStep& s : p.steps()) {
      StepMatcher sm;
      sm.kind = s.kind;
      sm.index = s.index;
      if (s.kind == PathStep::Kind::Field) {
        sm.name = s.name;
        sm.declared_idx = declared.index_of(s.name);
        if (compacted && names) sm.dict_id = names->id_of(s.name);
      }
      pm.steps.push_back(std::move(sm));
    }
    matchers.push_back(std::move(pm));
  };
  for (const PathExpr& p : spec.paths) add_matcher(p, false);
  for (const PathExpr& p : spec.aligned_paths) add_matcher(p, true);

  RecordWalker walker(rec);
  struct Frame {
    bool is_object;
    uint32_t next_index = 0;
  };
  std::vector<Frame> frames;
  std::vector<PosElem> pos;
  std::vector<Capture> captures;
  std::string resolved_buf;

  for (;;) {
    WalkEvent ev = walker.next();
    if (ev.kind == WalkEvent::Kind::End) break;

    // Names are resolved lazily, only when a capture needs them.
    const std::string* cap_name = nullptr;
    if (!captures.empty() && ev.field.under_object &&
        ev.kind != WalkEvent::Kind::EndNest) {
      resolved_buf = resolve_name(ev.field, compacted, names, declared);
      cap_name = &resolved_buf;
    }
    for (Capture& c : captures)
      if (!c.finished) c.feed(ev, ev.field.under_object ? cap_name : nullptr);
    for (auto it = captures.begin(); it != captures.end();) {
      if (!it->finished) {
        ++it;
        continue;
      }
      PathMatcher& pm = matchers[it->path_idx];
      JsonDoc doc = std::move(*it->root);
      if (pm.wpos < 0)
        pm.single = std::move(doc);
      else if (pm.aligned)
        pm.slots.back() = std::move(doc);
      else
        pm.collected.push_back(std::move(doc));
      it = captures.erase(it);
    }

    if (ev.kind == WalkEvent::Kind::EndNest) {
      frames.pop_back();
      if (!pos.empty()) pos.pop_back();
      continue;
    }

    // Position element for this value.
    PosElem pe;
    bool is_root = frames.empty();
    if (!is_root) {
      if (ev.field.under_object) {
        pe.is_field = true;
        pe.declared = ev.field.declared;
        pe.payload = ev.field.payload;
        pe.name = ev.field.name;
      } else {
        pe.index = frames.back().next_index++;
      }
      pos.push_back(pe);
    }

    if (!is_root) {
      for (size_t pi = 0; pi < matchers.size(); ++pi) {
        PathMatcher& pm = matchers[pi];
        // Wildcard bookkeeping: the array at the wildcard's parent position.
        if (pm.wpos >= 0 && pos.size() == static_cast<size_t>(pm.wpos) &&
            ev.kind == WalkEvent::Kind::BeginArray &&
            position_matches(pm, pos, pos.size(), compacted)) {
          pm.array_found = true;
        }
        if (pm.wpos >= 0 && pm.aligned &&
            pos.size() == static_cast<size_t>(pm.wpos) + 1 && pm.array_found &&
            position_matches(pm, pos, pos.size(), compacted)) {
          pm.slots.emplace_back(std::nullopt);
        }
        if (pos.size() == pm.steps.size() &&
            position_matches(pm, pos, pos.size(), compacted)) {
          if (ev.kind == WalkEvent::Kind::Scalar) {
            JsonDoc doc = scalar_doc(ev);
            if (pm.wpos < 0)
              pm.single = std::move(doc);
            else if (pm.aligned)
              pm.slots.back() = std::move(doc);
            else
              pm.collected.push_back(std::move(doc));
          } else {
            Capture c;
            c.path_idx = pi;
            c.feed(ev, nullptr);
            captures.push_back(std::move(c));
          }
        }
      }
    } else if (ev.kind == WalkEvent::Kind::BeginArray) {
      // A root-level wildcard path ("[*]...") over an array root.
      for (PathMatcher& pm : matchers)
        if (pm.wpos == 0) pm.array_found = true;
    }

    if (ev.kind == WalkEvent::Kind::Scalar) {
      if (!is_root && !pos.empty()) pos.pop_back();
    } else {
      frames.push_back(Frame{ev.kind == WalkEvent::Kind::BeginObject, 0});
    }
  }

  ExtractResult out;
  for (size_t pi = 0; pi < matchers.size(); ++pi) {
    PathMatcher& pm = matchers[pi];
    bool is_aligned = pi >= spec.paths.size();
    if (is_aligned) {
      if (!pm.array_found)
        out.aligned.emplace_back(std::nullopt);
      else
        out.aligned.emplace_back(std::move(pm.slots));
      continue;
    }
    if (pm.wpos < 0) {
      out.values.push_back(std::move(pm.single));
    } else if (!pm.array_found) {
      out.values.emplace_back(std::nullopt);
    } else {
      JsonDoc arr = JsonDoc::array();
      for (JsonDoc& d : pm.collected) arr.append(std::move(d));
      out.values.push_back(std::move(arr));
    }
  }
  return out;
}

std::vector<std::optional<JsonDoc>> get_values(
    const VBRecord& rec, const FieldNameTable* names,
    const DeclaredFields& declared, std::span<const PathExpr> paths) {
  ExtractSpec spec;
  spec.paths.assign(paths.begin(), paths.end());
  return extract_values(rec, names, declared, spec).values;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

namespace {

ValidateResult fail(std::string code, std::string message, size_t pos) {
  ValidateResult r;
  r.ok = false;
  r.violation = {std::move(code), std::move(message), pos};
  return r;
}

}  // namespace

ValidateResult validate(ByteSpan bytes) {
  if (bytes.size() < kHeaderSize)
    return fail("short_header", "record shorter than 26-byte header", 0);
  Header h;
  {
    ByteReader r(bytes);
    h.total_length = r.u32();
    h.tag_count = r.u32();
    h.offset_tags = r.u32();
    h.offset_fixed = r.u32();
    h.offset_var = r.u32();
    h.offset_fieldnames = r.u32();
    h.var_len_bits = r.u8();
    h.fieldname_len_bits = r.u8();
  }
  if (h.total_length != bytes.size())
    return fail("length_mismatch", "total_length does not match frame size", 0);
  if (h.offset_tags != kHeaderSize)
    return fail("bad_offset", "tags offset must be 26", 8);
  if (static_cast<uint64_t>(h.offset_tags) + h.tag_count > bytes.size() ||
      h.offset_fixed != h.offset_tags + h.tag_count)
    return fail("bad_offset", "fixed-values offset inconsistent with tag count",
                12);
  if (h.var_len_bits < 1 || h.var_len_bits > kMaxWidthBits)
    return fail("width_range", "var length width out of [1,16]", 24);
  if (h.fieldname_len_bits < 2 || h.fieldname_len_bits > kMaxWidthBits)
    return fail("width_range", "field-name width out of [2,16]", 25);

  // Tag stream.
  if (h.tag_count == 0)
    return fail("bad_root_tag", "empty tag stream", h.offset_tags);
  ByteSpan tags = bytes.subspan(h.offset_tags, h.tag_count);
  size_t n_strings = 0, n_entries = 0, fixed_bytes = 0;
  std::vector<TypeTag> stack;
  std::vector<size_t> bool_fixed_offsets;
  bool saw_eov = false;
  for (size_t i = 0; i < tags.size(); ++i) {
    size_t at = h.offset_tags + i;
    uint8_t raw = tags[i];
    if (raw < kMinTag || raw > kMaxTag)
      return fail("bad_tag", "invalid tag byte " + std::to_string(raw), at);
    TypeTag t = static_cast<TypeTag>(raw);
    if (i == 0) {
      if (!is_nest_tag(t))
        return fail("bad_root_tag", "first tag must be object or array", at);
      stack.push_back(t);
      continue;
    }
    if (t == TypeTag::CloseNest) {
      if (stack.size() < 2)
        return fail("unbalanced_close", "close tag would close the root", at);
      stack.pop_back();
      continue;
    }
    if (t == TypeTag::Eov) {
      if (stack.size() != 1)
        return fail("early_eov", "end-of-values inside an open nest", at);
      if (i + 1 != tags.size())
        return fail("trailing_tags", "tags after end-of-values", at + 1);
      saw_eov = true;
      break;
    }
    if (stack.empty())
      return fail("value_outside_root", "value after root closed", at);
    if (stack.back() == TypeTag::Object) ++n_entries;
    if (t == TypeTag::String) ++n_strings;
    if (t == TypeTag::Boolean) bool_fixed_offsets.push_back(fixed_bytes);
    fixed_bytes += fixed_size_of(t);
    if (is_nest_tag(t)) stack.push_back(t);
  }
  if (!saw_eov)
    return fail("missing_eov",
                "tag stream missing end-of-values at tag index " +
                    std::to_string(h.tag_count),
                h.offset_tags + h.tag_count);

  // Section arithmetic.
  if (h.offset_var != h.offset_fixed + fixed_bytes || h.offset_var > bytes.size())
    return fail("fixed_size_mismatch",
                "var offset inconsistent with fixed-value bytes", 16);
  size_t vl_bytes = packed_bytes(n_strings, h.var_len_bits);
  if (h.offset_var + vl_bytes > bytes.size())
    return fail("truncated", "var-length vector truncated", h.offset_var);
  uint64_t var_total = 0;
  uint64_t max_len = 0;
  {
    BitReader lens(bytes.subspan(h.offset_var, vl_bytes));
    for (size_t i = 0; i < n_strings; ++i) {
      uint32_t len = lens.get(h.var_len_bits);
      var_total += len;
      max_len = std::max<uint64_t>(max_len, len);
    }
  }
  size_t var_values_start = h.offset_var + vl_bytes;
  if (var_values_start + var_total > bytes.size())
    return fail("var_sum_mismatch", "string bytes exceed record",
                var_values_start);
  size_t entries_start = var_values_start + var_total;
  size_t entries_bytes = packed_bytes(n_entries, h.fieldname_len_bits);
  size_t entries_end = entries_start + entries_bytes;
  if (entries_end > bytes.size())
    return fail("truncated", "field-name entries truncated", entries_start);

  uint64_t names_total = 0;
  uint64_t max_payload = 0;
  {
    BitReader entries(bytes.subspan(entries_start, entries_bytes));
    uint32_t payload_bits = h.fieldname_len_bits - 1;
    for (size_t i = 0; i < n_entries; ++i) {
      uint32_t e = entries.get(h.fieldname_len_bits);
      bool declared = (e >> payload_bits) & 1;
      uint32_t payload = e & ((1u << payload_bits) - 1);
      if (!declared && h.offset_fieldnames != 0) names_total += payload;
      max_payload = std::max<uint64_t>(max_payload, payload);
    }
  }

  if (h.offset_fieldnames == 0) {
    if (entries_end != bytes.size())
      return fail("trailing_bytes", "bytes after entries in compacted record",
                  entries_end);
  } else {
    if (h.offset_fieldnames != entries_end)
      return fail("bad_offset", "field-names offset inconsistent", 20);
    if (entries_end + names_total != bytes.size())
      return fail("entry_sum_mismatch",
                  "field-name bytes do not match entry lengths", entries_end);
  }

  // Boolean payloads.
  for (size_t off : bool_fixed_offsets) {
    uint8_t b = bytes[h.offset_fixed + off];
    if (b > 1)
      return fail("bad_boolean", "boolean byte not 0/1", h.offset_fixed + off);
  }

  // Width minimality.
  if (min_bits_for(max_len) != h.var_len_bits)
    return fail("width_mismatch", "var width not minimal for contents", 24);
  if (min_bits_for(max_payload) + 1 != h.fieldname_len_bits)
    return fail("width_mismatch", "field-name width not minimal for contents",
                25);

  return ValidateResult{};
}

}  // namespace docpack::vb
