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

#include <memory>
#include <string>

#include "docpack/bytes.hpp"

namespace docpack {

/// Page codec behind a stable one-byte id. Id 0 is the identity codec (kept
/// for tests and as the no-compression marker); id 1 is deflate.
class PageCodec {
 public:
  virtual ~PageCodec() = default;
  virtual uint8_t id() const = 0;
  virtual const char* name() const = 0;
  virtual Bytes compress(ByteSpan page) const = 0;
  virtual Bytes decompress(ByteSpan data, size_t expected_size) const = 0;
};

constexpr uint8_t kCodecIdentity = 0;
constexpr uint8_t kCodecDeflate = 1;

/// Returns the codec for an id; throws ConfigError for unknown ids.
const PageCodec& codec_by_id(uint8_t id);

/// Accepts "identity" and "deflate"; throws ConfigError otherwise.
const PageCodec& codec_by_name(const std::string& name);

}  // namespace docpack
