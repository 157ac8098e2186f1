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

#include "docpack/query/plan.hpp"

#include <json.hpp>

namespace docpack::query {

namespace {

using nlohmann::json;

JsonDoc to_doc(const json& j) { return JsonDoc::parse(j.dump()); }

/// Paths starting with "<unnest alias>." (or equal to it) address the
/// unnested element; everything else addresses the record.
ExprPtr parse_path_expr(const std::string& text, const QuerySpec& spec) {
  auto e = std::make_shared<Expr>();
  if (!spec.unnest_alias.empty()) {
    if (text == spec.unnest_alias) {
      e->kind = Expr::Kind::UnnestPath;
      return e;  // the element itself: no sub-path
    }
    std::string prefix = spec.unnest_alias + ".";
    if (text.rfind(prefix, 0) == 0) {
      e->kind = Expr::Kind::UnnestPath;
      e->path = PathExpr::parse(text.substr(prefix.size()));
      return e;
    }
  }
  e->kind = Expr::Kind::RecordPath;
  e->path = PathExpr::parse(text);
  return e;
}

ExprPtr parse_expr(const json& j, const QuerySpec& spec) {
  if (!j.is_object()) throw QueryError("expression must be an object");
  if (j.contains("path"))
    return parse_path_expr(j.at("path").get<std::string>(), spec);
  if (j.contains("lit")) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Literal;
    e->literal = to_doc(j.at("lit"));
    return e;
  }
  if (j.contains("ref")) {
    auto e = std::make_shared<Expr>();
    e->kind = Expr::Kind::Ref;
    e->ref = j.at("ref").get<std::string>();
    return e;
  }
  if (j.contains("fn")) {
    std::string fn = j.at("fn").get<std::string>();
    auto e = std::make_shared<Expr>();
    if (fn == "length")
      e->kind = Expr::Kind::Length;
    else if (fn == "lower")
      e->kind = Expr::Kind::Lower;
    else
      throw QueryError("unknown function: " + fn);
    e->arg = parse_expr(j.at("arg"), spec);
    return e;
  }
  throw QueryError("unrecognized expression: " + j.dump());
}

bool valid_cmp_op(const std::string& op) {
  return op == "eq" || op == "ne" || op == "lt" || op == "le" || op == "gt" ||
         op == "ge";
}

PredPtr parse_pred(const json& j, const QuerySpec& spec) {
  if (!j.is_object()) throw QueryError("predicate must be an object");
  auto p = std::make_shared<Pred>();
  if (j.contains("and") || j.contains("or")) {
    bool is_and = j.contains("and");
    p->kind = is_and ? Pred::Kind::And : Pred::Kind::Or;
    for (const json& c : j.at(is_and ? "and" : "or"))
      p->children.push_back(parse_pred(c, spec));
    if (p->children.empty()) throw QueryError("empty and/or");
    return p;
  }
  if (j.contains("not")) {
    p->kind = Pred::Kind::Not;
    p->children.push_back(parse_pred(j.at("not"), spec));
    return p;
  }
  if (j.contains("cmp")) {
    const json& c = j.at("cmp");
    if (!c.is_array() || c.size() != 3)
      throw QueryError("cmp wants [op, lhs, rhs]");
    p->kind = Pred::Kind::Cmp;
    p->cmp_op = c[0].get<std::string>();
    if (!valid_cmp_op(p->cmp_op))
      throw QueryError("unknown comparison: " + p->cmp_op);
    p->lhs = parse_expr(c[1], spec);
    p->rhs = parse_expr(c[2], spec);
    return p;
  }
  if (j.contains("any")) {
    const json& a = j.at("any");
    p->kind = Pred::Kind::Any;
    p->any_path = PathExpr::parse(a.at("path").get<std::string>());
    if (!p->any_path->has_wildcard())
      throw QueryError("any-predicate path needs a wildcard");
    const json& c = a.at("cmp");
    if (!c.is_array() || c.size() != 2)
      throw QueryError("any.cmp wants [op, literal]");
    p->any_op = c[0].get<std::string>();
    if (!valid_cmp_op(p->any_op))
      throw QueryError("unknown comparison: " + p->any_op);
    p->any_rhs = to_doc(c[1]);
    p->any_lower = a.value("lower", false);
    return p;
  }
  throw QueryError("unrecognized predicate: " + j.dump());
}

AggFn parse_agg_fn(const std::string& fn) {
  if (fn == "count") return AggFn::Count;
  if (fn == "sum") return AggFn::Sum;
  if (fn == "avg") return AggFn::Avg;
  if (fn == "min") return AggFn::Min;
  if (fn == "max") return AggFn::Max;
  throw QueryError("unknown aggregate: " + fn);
}

}  // namespace

QuerySpec QuerySpec::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw QueryError(std::string("plan parse error: ") + e.what());
  }
  QuerySpec spec;
  spec.dataset = j.value("dataset", "");
  if (j.contains("unnest")) {
    spec.unnest_path =
        PathExpr::parse(j.at("unnest").at("path").get<std::string>());
    if (!spec.unnest_path->has_wildcard())
      throw QueryError("unnest path needs a wildcard");
    spec.unnest_alias = j.at("unnest").value("as", "item");
  }
  if (j.contains("where")) spec.where = parse_pred(j.at("where"), spec);
  if (j.contains("group_by")) {
    int n = 0;
    for (const json& g : j.at("group_by")) {
      GroupKey k;
      k.expr = parse_expr(g.contains("expr") ? g.at("expr") : g, spec);
      k.alias = g.is_object() ? g.value("as", "key" + std::to_string(n))
                              : "key" + std::to_string(n);
      ++n;
      spec.group_by.push_back(std::move(k));
    }
  }
  if (j.contains("aggregates")) {
    int n = 0;
    for (const json& a : j.at("aggregates")) {
      Aggregate agg;
      agg.fn = parse_agg_fn(a.at("fn").get<std::string>());
      if (a.contains("expr")) agg.expr = parse_expr(a.at("expr"), spec);
      agg.alias = a.value("as", "agg" + std::to_string(n));
      ++n;
      if (agg.fn != AggFn::Count && !agg.expr)
        throw QueryError("aggregate needs an expr");
      spec.aggregates.push_back(std::move(agg));
    }
  }
  if (j.contains("select")) {
    int n = 0;
    for (const json& s : j.at("select")) {
      GroupKey k;
      k.expr = parse_expr(s.contains("expr") ? s.at("expr") : s, spec);
      k.alias = s.is_object() ? s.value("as", "col" + std::to_string(n))
                              : "col" + std::to_string(n);
      ++n;
      spec.select.push_back(std::move(k));
    }
  }
  if (j.contains("order_by")) {
    for (const json& o : j.at("order_by")) {
      OrderKey k;
      if (o.contains("ref")) k.ref = o.at("ref").get<std::string>();
      if (o.contains("expr")) k.expr = parse_expr(o.at("expr"), spec);
      if (o.contains("path")) k.expr = parse_expr(o, spec);
      if (k.ref.empty() && !k.expr) throw QueryError("order_by needs ref/expr");
      k.desc = o.value("desc", false);
      spec.order_by.push_back(std::move(k));
    }
  }
  if (j.contains("limit")) spec.limit = j.at("limit").get<uint64_t>();
  if (j.contains("pushdown")) spec.pushdown = j.at("pushdown").get<bool>();

  if (!spec.group_by.empty() && !spec.select.empty())
    throw QueryError("select and group_by are mutually exclusive");
  if (spec.group_by.empty() && !spec.aggregates.empty() && !spec.select.empty())
    throw QueryError("select cannot mix with global aggregates");
  return spec;
}

// ---------------------------------------------------------------------------
// Planner: collect every record access and bind it to the scan.
// ---------------------------------------------------------------------------

namespace {

struct PathCollector {
  std::vector<PathExpr> paths;
  std::vector<PathExpr> aligned;
  const QuerySpec& spec;

  void add_record_path(const PathExpr& p) {
    for (const PathExpr& q : paths)
      if (q == p) return;
    paths.push_back(p);
  }
  void add_unnest_subpath(const std::optional<PathExpr>& sub) {
    PathExpr full = compose(sub);
    for (const PathExpr& q : aligned)
      if (q == full) return;
    aligned.push_back(full);
  }
  PathExpr compose(const std::optional<PathExpr>& sub) const {
    std::vector<PathStep> steps = spec.unnest_path->steps();
    if (sub)
      steps.insert(steps.end(), sub->steps().begin(), sub->steps().end());
    return PathExpr(std::move(steps));
  }

  void visit(const ExprPtr& e) {
    if (!e) return;
    switch (e->kind) {
      case Expr::Kind::RecordPath:
        add_record_path(*e->path);
        break;
      case Expr::Kind::UnnestPath:
        if (!spec.unnest_path)
          throw QueryError("unnest variable used without an unnest");
        add_unnest_subpath(e->path);
        break;
      case Expr::Kind::Length:
      case Expr::Kind::Lower:
        visit(e->arg);
        break;
      default:
        break;
    }
  }
  void visit(const PredPtr& p) {
    if (!p) return;
    for (const auto& c : p->children) visit(c);
    visit(p->lhs);
    visit(p->rhs);
    if (p->any_path) add_record_path(*p->any_path);
  }
};

}  // namespace

int QueryPlan::column_of(const PathExpr& p) const {
  for (size_t i = 0; i < scan_paths.size(); ++i)
    if (scan_paths[i] == p) return static_cast<int>(i);
  return -1;
}

int QueryPlan::aligned_column_of(const PathExpr& p) const {
  for (size_t i = 0; i < scan_aligned_paths.size(); ++i)
    if (scan_aligned_paths[i] == p) return static_cast<int>(i);
  return -1;
}

QueryPlan plan(QuerySpec spec, bool pushdown_default) {
  QueryPlan out;
  out.pushdown = spec.pushdown.value_or(pushdown_default);
  out.has_group_by = !spec.group_by.empty();
  // The hash repartition for group-by is the only non-local exchange in the
  // supported repertoire.
  out.has_non_local_exchange = out.has_group_by;

  PathCollector collector{{}, {}, spec};
  collector.visit(spec.where);
  for (const auto& g : spec.group_by) collector.visit(g.expr);
  for (const auto& a : spec.aggregates) collector.visit(a.expr);
  for (const auto& s : spec.select) collector.visit(s.expr);
  for (const auto& o : spec.order_by) collector.visit(o.expr);

  // Unnest needs the element count per record even when nothing below the
  // element is referenced.
  if (spec.unnest_path && collector.aligned.empty())
    collector.add_unnest_subpath(std::nullopt);

  if (out.pushdown) {
    out.scan_paths = std::move(collector.paths);
    out.scan_aligned_paths = std::move(collector.aligned);
  } else if (spec.unnest_path) {
    // Without pushdown the unnest still extracts its elements (whole
    // objects); per-element accesses navigate those, while record accesses
    // scan the vectors at their consuming operator.
    out.scan_aligned_paths.push_back(collector.compose(std::nullopt));
  }
  out.spec = std::move(spec);
  return out;
}

}  // namespace docpack::query
