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
#include <optional>
#include <string>
#include <vector>

#include "docpack/path.hpp"

namespace docpack::query {

// ---------------------------------------------------------------------------
// Query spec: a small structured plan description (JSON key/value tree), not
// a SQL dialect. Shapes supported: scan, filter, one optional unnest,
// group-by with COUNT/SUM/AVG/MIN/MAX, order-by/limit, select.
//
//   {
//     "dataset": "...",                 (CLI only; the library gets an engine)
//     "unnest": {"path": "readings[*]", "as": "r"},
//     "where": <pred>,
//     "group_by": [{"expr": <expr>, "as": "sid"}],
//     "aggregates": [{"fn": "avg", "expr": <expr>, "as": "a"}],
//     "select": [<expr or {"ref": "alias"}>],
//     "order_by": [{"ref": "a", "desc": true}],
//     "limit": 10,
//     "pushdown": true
//   }
//
// Exprs:  {"path": "a.b[0]"} | {"path": "r.temp"} (unnest variable)
//         | {"lit": <json>} | {"fn": "length"|"lower", "arg": <expr>}
// Preds:  {"and": [...]} | {"or": [...]} | {"not": <pred>}
//         | {"cmp": ["eq"|"ne"|"lt"|"le"|"gt"|"ge", <expr>, <expr>]}
//         | {"any": {"path": "tags[*].text", "cmp": ["eq", {"lit": "x"}],
//            "lower": true}}   (exists over array elements)
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Kind { RecordPath, UnnestPath, Literal, Length, Lower, Ref };
  Kind kind;
  std::optional<PathExpr> path;    // RecordPath: full path; UnnestPath: the
                                   // sub-path below the unnest element
  JsonDoc literal;                 // Literal
  ExprPtr arg;                     // Length/Lower
  std::string ref;                 // Ref: group key / aggregate alias
};

struct Pred;
using PredPtr = std::shared_ptr<const Pred>;

struct Pred {
  enum class Kind { And, Or, Not, Cmp, Any };
  Kind kind;
  std::vector<PredPtr> children;   // And/Or/Not
  std::string cmp_op;              // Cmp: eq ne lt le gt ge
  ExprPtr lhs, rhs;                // Cmp
  std::optional<PathExpr> any_path;  // Any: wildcard path
  std::string any_op;              // Any: comparison against any_rhs
  JsonDoc any_rhs;
  bool any_lower = false;          // lowercase the element before comparing
};

enum class AggFn { Count, Sum, Avg, Min, Max };

struct Aggregate {
  AggFn fn;
  ExprPtr expr;  // null for COUNT(*)
  std::string alias;
};

struct GroupKey {
  ExprPtr expr;
  std::string alias;
};

struct OrderKey {
  std::string ref;   // alias of a group key / aggregate, or output column
  ExprPtr expr;      // for non-grouped queries: order by expression
  bool desc = false;
};

struct QuerySpec {
  std::string dataset;
  std::optional<PathExpr> unnest_path;
  std::string unnest_alias;
  PredPtr where;
  std::vector<GroupKey> group_by;
  std::vector<Aggregate> aggregates;
  std::vector<GroupKey> select;    // non-grouped projection (alias + expr)
  std::vector<OrderKey> order_by;
  std::optional<uint64_t> limit;
  std::optional<bool> pushdown;    // overrides the engine-level toggle

  static QuerySpec parse(const std::string& json_text);
};

// ---------------------------------------------------------------------------
// Physical plan. Field accesses against the record are consolidated into one
// multi-path extraction bound to the scan when pushdown is on; with pushdown
// off every access site scans the record vectors on its own.
// ---------------------------------------------------------------------------

struct QueryPlan {
  QuerySpec spec;
  bool pushdown = true;

  // Consolidated extraction bound to the scan (pushdown on).
  std::vector<PathExpr> scan_paths;          // plain record paths
  std::vector<PathExpr> scan_aligned_paths;  // unnest sub-paths, slot aligned
  bool has_group_by = false;
  bool has_non_local_exchange = false;  // hash repartition for group-by

  /// Index of a record path within scan_paths (pushdown on).
  int column_of(const PathExpr& p) const;
  /// Index of an unnest sub-path within scan_aligned_paths.
  int aligned_column_of(const PathExpr& p) const;
};

/// Consolidates accesses and decides exchanges. `pushdown_default` is the
/// engine-level toggle; the spec may override it.
QueryPlan plan(QuerySpec spec, bool pushdown_default);

}  // namespace docpack::query
