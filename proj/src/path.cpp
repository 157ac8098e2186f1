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

#include "docpack/path.hpp"

#include <charconv>

namespace docpack {

PathExpr::PathExpr(std::vector<PathStep> steps) : steps_(std::move(steps)) {
  if (steps_.empty()) throw FormatError("empty path expression");
  for (size_t i = 0; i < steps_.size(); ++i) {
    if (steps_[i].kind == PathStep::Kind::Wildcard) {
      if (wildcard_pos_ >= 0)
        throw FormatError("at most one wildcard per path");
      wildcard_pos_ = static_cast<int>(i);
    }
  }
}

PathExpr PathExpr::parse(std::string_view text) {
  std::vector<PathStep> steps;
  size_t i = 0;
  if (text.rfind("$", 0) == 0) {
    i = 1;
    if (i < text.size() && text[i] == '.') ++i;
  }
  while (i < text.size()) {
    if (text[i] == '.') {
      ++i;
      continue;
    }
    if (text[i] == '[') {
      size_t close = text.find(']', i);
      if (close == std::string_view::npos)
        throw FormatError("unterminated '[' in path: " + std::string(text));
      std::string_view inner = text.substr(i + 1, close - i - 1);
      if (inner == "*") {
        steps.push_back(PathStep::wildcard());
      } else {
        uint32_t idx = 0;
        auto res = std::from_chars(inner.data(), inner.data() + inner.size(), idx);
        if (res.ec != std::errc{} || res.ptr != inner.data() + inner.size())
          throw FormatError("bad array index in path: " + std::string(text));
        steps.push_back(PathStep::at(idx));
      }
      i = close + 1;
      continue;
    }
    size_t end = i;
    while (end < text.size() && text[end] != '.' && text[end] != '[') ++end;
    if (end == i) throw FormatError("empty field name in path: " + std::string(text));
    steps.push_back(PathStep::field(std::string(text.substr(i, end - i))));
    i = end;
  }
  return PathExpr(std::move(steps));
}

std::string PathExpr::to_string() const {
  std::string out;
  for (const PathStep& s : steps_) {
    switch (s.kind) {
      case PathStep::Kind::Field:
        if (!out.empty()) out.push_back('.');
        out += s.name;
        break;
      case PathStep::Kind::Index:
        out += "[" + std::to_string(s.index) + "]";
        break;
      case PathStep::Kind::Wildcard:
        out += "[*]";
        break;
    }
  }
  return out;
}

namespace {

std::optional<JsonDoc> walk(const JsonDoc& doc,
                            const std::vector<PathStep>& steps, size_t from) {
  const JsonDoc* cur = &doc;
  for (size_t i = from; i < steps.size(); ++i) {
    const PathStep& s = steps[i];
    switch (s.kind) {
      case PathStep::Kind::Field: {
        if (!cur->is_object()) return std::nullopt;
        const JsonDoc* next = cur->find(s.name);
        if (!next) return std::nullopt;
        cur = next;
        break;
      }
      case PathStep::Kind::Index: {
        if (!cur->is_array() || s.index >= cur->item_count()) return std::nullopt;
        cur = &cur->item(s.index);
        break;
      }
      case PathStep::Kind::Wildcard: {
        if (!cur->is_array()) return std::nullopt;
        JsonDoc out = JsonDoc::array();
        for (size_t k = 0; k < cur->item_count(); ++k) {
          auto sub = walk(cur->item(k), steps, i + 1);
          if (sub) out.append(std::move(*sub));
        }
        return out;
      }
    }
  }
  return *cur;
}

}  // namespace

std::optional<JsonDoc> navigate(const JsonDoc& doc, const PathExpr& path) {
  return walk(doc, path.steps(), 0);
}

std::optional<std::vector<std::optional<JsonDoc>>> navigate_aligned(
    const JsonDoc& doc, const PathExpr& path) {
  if (!path.has_wildcard()) throw FormatError("navigate_aligned needs a wildcard");
  const auto& steps = path.steps();
  size_t wpos = static_cast<size_t>(path.wildcard_pos());

  const JsonDoc* cur = &doc;
  for (size_t i = 0; i < wpos; ++i) {
    const PathStep& s = steps[i];
    if (s.kind == PathStep::Kind::Field) {
      if (!cur->is_object()) return std::nullopt;
      cur = cur->find(s.name);
      if (!cur) return std::nullopt;
    } else {
      if (!cur->is_array() || s.index >= cur->item_count()) return std::nullopt;
      cur = &cur->item(s.index);
    }
  }
  if (!cur->is_array()) return std::nullopt;

  std::vector<std::optional<JsonDoc>> out;
  out.reserve(cur->item_count());
  for (size_t k = 0; k < cur->item_count(); ++k)
    out.push_back(walk(cur->item(k), steps, wpos + 1));
  return out;
}

}  // namespace docpack
