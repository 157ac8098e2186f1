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

#include <string>
#include <vector>

#include "docpack/json_value.hpp"
#include "docpack/rng.hpp"

namespace docpack::gen {

// Seeded synthetic corpora:
//   sensors  - numeric IoT records with a readings array; verbose field
//              names, high name-to-value byte ratio (pk: sensor_id)
//   tweets   - social records with nested user/entities and hashtag arrays
//              (pk: tweet_id)
//   pubs     - publication records whose "subjects" field is sometimes an
//              object and sometimes an array of objects (pk: pub_id)

JsonDoc sensor_record(Rng& rng, int64_t id);
JsonDoc tweet_record(Rng& rng, int64_t id);
JsonDoc publication_record(Rng& rng, int64_t id);

/// kind is "sensors", "tweets", or "pubs".
std::vector<JsonDoc> generate(const std::string& kind, uint64_t count,
                              uint64_t seed);

const char* primary_key_for(const std::string& kind);

}  // namespace docpack::gen
