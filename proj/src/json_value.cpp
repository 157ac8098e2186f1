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

#include "docpack/json_value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace docpack {

JsonDoc& JsonDoc::add_field(std::string name, JsonDoc value) {
  if (kind_ != Kind::Object) throw FormatError("add_field on non-object");
  if (find(name) != nullptr)
    throw FormatError("duplicate object key: " + name);
  names_.push_back(std::move(name));
  children_.push_back(std::move(value));
  return children_.back();
}

const JsonDoc* JsonDoc::find(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return &children_[i];
  return nullptr;
}

JsonDoc& JsonDoc::append(JsonDoc item) {
  if (kind_ != Kind::Array) throw FormatError("append on non-array");
  children_.push_back(std::move(item));
  return children_.back();
}

bool JsonDoc::operator==(const JsonDoc& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Object:
      return names_ == other.names_ && children_ == other.children_;
    case Kind::Array:
      return children_ == other.children_;
    case Kind::String:
      return str_ == other.str_;
    case Kind::Int64:
      return int_ == other.int_;
    case Kind::Double:
      return dbl_ == other.dbl_;
    case Kind::Boolean:
      return bool_ == other.bool_;
    case Kind::Null:
      return true;
  }
  return false;
}

namespace {

void escape_into(const std::string& s, std::string& out) {
  out.push_back('"');
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out.push_back(c);
        }
    }
  }
  out.push_back('"');
}

}  // namespace

void JsonDoc::write_json(std::string& out) const {
  switch (kind_) {
    case Kind::Object: {
      out.push_back('{');
      for (size_t i = 0; i < names_.size(); ++i) {
        if (i) out.push_back(',');
        escape_into(names_[i], out);
        out.push_back(':');
        children_[i].write_json(out);
      }
      out.push_back('}');
      break;
    }
    case Kind::Array: {
      out.push_back('[');
      for (size_t i = 0; i < children_.size(); ++i) {
        if (i) out.push_back(',');
        children_[i].write_json(out);
      }
      out.push_back(']');
      break;
    }
    case Kind::String:
      escape_into(str_, out);
      break;
    case Kind::Int64:
      out += std::to_string(int_);
      break;
    case Kind::Double: {
      if (!std::isfinite(dbl_)) throw FormatError("non-finite double in document");
      char buf[32];
      auto res = std::to_chars(buf, buf + sizeof(buf), dbl_);
      std::string_view text(buf, res.ptr - buf);
      out.append(text);
      // Whole-valued doubles must not re-parse as integers.
      if (text.find_first_of(".eE") == std::string_view::npos) out += ".0";
      break;
    }
    case Kind::Boolean:
      out += bool_ ? "true" : "false";
      break;
    case Kind::Null:
      out += "null";
      break;
  }
}

std::string JsonDoc::to_json() const {
  std::string out;
  write_json(out);
  return out;
}

namespace {

/// SAX handler building a JsonDoc tree; sees duplicate keys before they are
/// collapsed by a DOM.
class DocBuilder : public nlohmann::json_sax<nlohmann::json> {
 public:
  JsonDoc take() { return std::move(root_); }

  bool null() override { return emit(JsonDoc::null()); }
  bool boolean(bool v) override { return emit(JsonDoc::boolean(v)); }
  bool number_integer(number_integer_t v) override {
    return emit(JsonDoc::integer(v));
  }
  bool number_unsigned(number_unsigned_t v) override {
    if (v > static_cast<number_unsigned_t>(INT64_MAX))
      throw FormatError("integer out of int64 range");
    return emit(JsonDoc::integer(static_cast<int64_t>(v)));
  }
  bool number_float(number_float_t v, const string_t&) override {
    return emit(JsonDoc::number(v));
  }
  bool string(string_t& v) override { return emit(JsonDoc::string(v)); }
  bool binary(binary_t&) override {
    throw FormatError("binary values unsupported");
  }
  bool start_object(std::size_t) override {
    push(JsonDoc::object());
    return true;
  }
  bool key(string_t& k) override {
    pending_key_ = k;
    have_key_ = true;
    return true;
  }
  bool end_object() override { return pop(); }
  bool start_array(std::size_t) override {
    push(JsonDoc::array());
    return true;
  }
  bool end_array() override { return pop(); }
  bool parse_error(std::size_t pos, const std::string&,
                   const nlohmann::detail::exception& ex) override {
    throw FormatError("json parse error at byte " + std::to_string(pos) + ": " +
                      ex.what());
  }

 private:
  bool emit(JsonDoc v) {
    if (stack_.empty()) {
      root_ = std::move(v);
      return true;
    }
    attach(std::move(v));
    return true;
  }
  void push(JsonDoc v) {
    stack_.push_back(std::move(v));
    key_stack_.push_back(std::move(pending_key_));
    had_key_stack_.push_back(have_key_);
    have_key_ = false;
  }
  bool pop() {
    JsonDoc done = std::move(stack_.back());
    stack_.pop_back();
    pending_key_ = std::move(key_stack_.back());
    key_stack_.pop_back();
    have_key_ = had_key_stack_.back();
    had_key_stack_.pop_back();
    return emit(std::move(done));
  }
  void attach(JsonDoc v) {
    JsonDoc& parent = stack_.back();
    if (parent.is_object()) {
      if (!have_key_) throw FormatError("object value without key");
      parent.add_field(std::move(pending_key_), std::move(v));
      have_key_ = false;
    } else {
      parent.append(std::move(v));
    }
  }

  JsonDoc root_;
  std::vector<JsonDoc> stack_;
  std::vector<std::string> key_stack_;
  std::vector<bool> had_key_stack_;
  std::string pending_key_;
  bool have_key_ = false;
};

}  // namespace

JsonDoc JsonDoc::parse(std::string_view text) {
  DocBuilder builder;
  if (!nlohmann::json::sax_parse(text, &builder))
    throw FormatError("json parse failed");
  return builder.take();
}

const char* kind_name(JsonDoc::Kind k) {
  switch (k) {
    case JsonDoc::Kind::Object: return "object";
    case JsonDoc::Kind::Array: return "array";
    case JsonDoc::Kind::String: return "string";
    case JsonDoc::Kind::Int64: return "int64";
    case JsonDoc::Kind::Double: return "double";
    case JsonDoc::Kind::Boolean: return "boolean";
    case JsonDoc::Kind::Null: return "null";
  }
  return "?";
}

}  // namespace docpack
