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

#include <unordered_map>

#include "docpack/engine.hpp"
#include "docpack/query/plan.hpp"

namespace docpack::query {

/// A value flowing through the pipeline; MISSING is nullopt.
using Value = std::optional<JsonDoc>;

// Shared value semantics (also the reference-evaluator semantics):
//  - predicates over MISSING are false; cross-kind comparisons are false
//  - numbers compare numerically across int64/double
//  - the sort order is total: MISSING < null < bool < number < string <
//    array < object, nests falling back to canonical text
std::optional<int> value_compare(const Value& a, const Value& b);
bool cmp_apply(const std::string& op, const Value& lhs, const Value& rhs);
int value_total_order(const Value& a, const Value& b);
std::string canonical_key(const Value& v);
Value fn_length(const Value& v);
Value fn_lower(const Value& v);

/// One aggregate accumulator; combine() merges per-partition partials.
class AggState {
 public:
  void add_row() { ++rows_; }
  void add(const Value& v);
  void combine(const AggState& other);
  JsonDoc result(AggFn fn) const;

 private:
  uint64_t rows_ = 0;
  uint64_t non_missing_ = 0;
  uint64_t numeric_count_ = 0;
  bool saw_double_ = false;
  int64_t sum_i_ = 0;
  double sum_d_ = 0.0;
  Value min_, max_;
};

/// Per-query immutable schema snapshots keyed by (partition, component),
/// populated before any non-local exchange consumes records. A miss is a
/// hard error, never silent.
class SchemaRegistry {
 public:
  void populate(Engine& engine);
  const SchemaStore* get(uint32_t partition, ComponentId source) const;
  bool populated() const { return populated_; }

 private:
  static uint64_t key_of(uint32_t partition, ComponentId id) {
    return (static_cast<uint64_t>(partition) << 48) ^ (id.lo << 24) ^ id.hi;
  }
  std::unordered_map<uint64_t, std::shared_ptr<const SchemaStore>> snapshots_;
  bool populated_ = false;
};

struct ExecOptions {
  /// Test hook: skip the schema broadcast to prove the registry miss is a
  /// hard error.
  bool skip_broadcast_for_test = false;
};

struct ExecStats {
  uint64_t broadcast_count = 0;  // partition schema sets delivered
  uint64_t records_scanned = 0;
  uint64_t rows_out = 0;
};

struct QueryResult {
  std::vector<JsonDoc> rows;  // shaped NDJSON objects, final order
  ExecStats stats;
};

/// Runs the plan with one executor thread per partition; group-by queries
/// repartition rows over bounded in-process exchange queues.
QueryResult execute(const QueryPlan& plan, Engine& engine,
                    const ExecOptions& opts = {});

}  // namespace docpack::query
