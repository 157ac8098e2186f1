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

#include "docpack/codec.hpp"

#include <zlib.h>

namespace docpack {

namespace {

class IdentityCodec final : public PageCodec {
 public:
  uint8_t id() const override { return kCodecIdentity; }
  const char* name() const override { return "identity"; }
  Bytes compress(ByteSpan page) const override {
    return Bytes(page.begin(), page.end());
  }
  Bytes decompress(ByteSpan data, size_t expected_size) const override {
    if (data.size() != expected_size)
      throw FormatError("identity codec: size mismatch");
    return Bytes(data.begin(), data.end());
  }
};

class DeflateCodec final : public PageCodec {
 public:
  uint8_t id() const override { return kCodecDeflate; }
  const char* name() const override { return "deflate"; }

  Bytes compress(ByteSpan page) const override {
    uLongf bound = compressBound(static_cast<uLong>(page.size()));
    Bytes out(bound);
    int rc = ::compress2(out.data(), &bound, page.data(),
                         static_cast<uLong>(page.size()), Z_DEFAULT_COMPRESSION);
    if (rc != Z_OK) throw IoError("deflate compress failed");
    out.resize(bound);
    return out;
  }

  Bytes decompress(ByteSpan data, size_t expected_size) const override {
    Bytes out(expected_size);
    uLongf out_len = static_cast<uLongf>(expected_size);
    int rc = ::uncompress(out.data(), &out_len, data.data(),
                          static_cast<uLong>(data.size()));
    if (rc != Z_OK || out_len != expected_size)
      throw FormatError("deflate decompress: corrupt extent");
    return out;
  }
};

}  // namespace

const PageCodec& codec_by_id(uint8_t id) {
  static const IdentityCodec identity;
  static const DeflateCodec deflate;
  switch (id) {
    case kCodecIdentity:
      return identity;
    case kCodecDeflate:
      return deflate;
    default:
      throw ConfigError("unknown codec id " + std::to_string(id));
  }
}

const PageCodec& codec_by_name(const std::string& name) {
  if (name == "identity") return codec_by_id(kCodecIdentity);
  if (name == "deflate") return codec_by_id(kCodecDeflate);
  throw ConfigError("unknown codec: " + name);
}

}  // namespace docpack
