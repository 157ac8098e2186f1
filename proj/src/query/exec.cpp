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

#include "docpack/query/exec.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <thread>

#include "docpack/vb_record.hpp"

namespace docpack::query {

// ---------------------------------------------------------------------------
// Value semantics
// ---------------------------------------------------------------------------

std::optional<int> value_compare(const Value& a, const Value& b) {
  if (!a || !b) return std::nullopt;
  if (a->is_numeric() && b->is_numeric()) {
    if (a->kind() == JsonDoc::Kind::Int64 && b->kind() == JsonDoc::Kind::Int64) {
      int64_t x = a->as_int(), y = b->as_int();
      return x < y ? -1 : x > y ? 1 : 0;
    }
    double x = a->numeric(), y = b->numeric();
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (a->kind() == JsonDoc::Kind::String && b->kind() == JsonDoc::Kind::String) {
    int c = a->as_string().compare(b->as_string());
    return c < 0 ? -1 : c > 0 ? 1 : 0;
  }
  if (a->kind() == JsonDoc::Kind::Boolean && b->kind() == JsonDoc::Kind::Boolean)
    return static_cast<int>(a->as_bool()) - static_cast<int>(b->as_bool());
  return std::nullopt;  // cross-kind: incomparable
}

bool cmp_apply(const std::string& op, const Value& lhs, const Value& rhs) {
  if (op == "eq" || op == "ne") {
    if (!lhs || !rhs) return false;  // MISSING never equals anything
    bool eq;
    auto c = value_compare(lhs, rhs);
    if (c) {
      eq = *c == 0;
    } else {
      eq = *lhs == *rhs;  // deep equality for nulls/nests of same kind
      if (lhs->kind() != rhs->kind()) eq = false;
    }
    return op == "eq" ? eq : !eq;
  }
  auto c = value_compare(lhs, rhs);
  if (!c) return false;
  if (op == "lt") return *c < 0;
  if (op == "le") return *c <= 0;
  if (op == "gt") return *c > 0;
  if (op == "ge") return *c >= 0;
  return false;
}

int value_total_order(const Value& a, const Value& b) {
  auto rank = [](const Value& v) -> int {
    if (!v) return 0;
    switch (v->kind()) {
      case JsonDoc::Kind::Null: return 1;
      case JsonDoc::Kind::Boolean: return 2;
      case JsonDoc::Kind::Int64:
      case JsonDoc::Kind::Double: return 3;
      case JsonDoc::Kind::String: return 4;
      case JsonDoc::Kind::Array: return 5;
      case JsonDoc::Kind::Object: return 6;
    }
    return 7;
  };
  int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb ? -1 : 1;
  if (ra <= 1) return 0;  // both MISSING or both null
  auto c = value_compare(a, b);
  if (c) return *c;
  std::string ca = a->to_json(), cb = b->to_json();
  return ca < cb ? -1 : ca > cb ? 1 : 0;
}

std::string canonical_key(const Value& v) {
  if (!v) return "\x01MISSING";
  return v->to_json();
}

Value fn_length(const Value& v) {
  if (!v) return std::nullopt;
  if (v->kind() == JsonDoc::Kind::String)
    return JsonDoc::integer(static_cast<int64_t>(v->as_string().size()));
  if (v->is_array())
    return JsonDoc::integer(static_cast<int64_t>(v->item_count()));
  return std::nullopt;
}

Value fn_lower(const Value& v) {
  if (!v || v->kind() != JsonDoc::Kind::String) return std::nullopt;
  std::string s = v->as_string();
  for (char& c : s)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return JsonDoc::string(std::move(s));
}

// ---------------------------------------------------------------------------
// AggState
// ---------------------------------------------------------------------------

void AggState::add(const Value& v) {
  ++rows_;
  if (!v) return;
  ++non_missing_;
  if (v->is_numeric()) {
    ++numeric_count_;
    if (v->kind() == JsonDoc::Kind::Double) {
      saw_double_ = true;
      sum_d_ += v->as_double();
    } else {
      sum_i_ += v->as_int();
    }
  }
  if (v->is_numeric() || v->kind() == JsonDoc::Kind::String) {
    if (!min_.has_value() || value_total_order(v, min_) < 0) min_ = v;
    if (!max_.has_value() || value_total_order(v, max_) > 0) max_ = v;
  }
}

void AggState::combine(const AggState& other) {
  rows_ += other.rows_;
  non_missing_ += other.non_missing_;
  numeric_count_ += other.numeric_count_;
  saw_double_ |= other.saw_double_;
  sum_i_ += other.sum_i_;
  sum_d_ += other.sum_d_;
  if (other.min_.has_value() &&
      (!min_.has_value() || value_total_order(other.min_, min_) < 0))
    min_ = other.min_;
  if (other.max_.has_value() &&
      (!max_.has_value() || value_total_order(other.max_, max_) > 0))
    max_ = other.max_;
}

JsonDoc AggState::result(AggFn fn) const {
  switch (fn) {
    case AggFn::Count:
      return JsonDoc::integer(static_cast<int64_t>(rows_));
    case AggFn::Sum:
      if (numeric_count_ == 0) return JsonDoc::null();
      if (saw_double_)
        return JsonDoc::number(sum_d_ + static_cast<double>(sum_i_));
      return JsonDoc::integer(sum_i_);
    case AggFn::Avg:
      if (numeric_count_ == 0) return JsonDoc::null();
      return JsonDoc::number((sum_d_ + static_cast<double>(sum_i_)) /
                             static_cast<double>(numeric_count_));
    case AggFn::Min:
      return min_.has_value() ? *min_ : JsonDoc::null();
    case AggFn::Max:
      return max_.has_value() ? *max_ : JsonDoc::null();
  }
  return JsonDoc::null();
}

// ---------------------------------------------------------------------------
// SchemaRegistry
// ---------------------------------------------------------------------------

void SchemaRegistry::populate(Engine& engine) {
  for (uint32_t p = 0; p < engine.partition_count(); ++p)
    for (const auto& snap : engine.partition(p).components())
      snapshots_.emplace(key_of(p, snap.id), snap.schema);
  populated_ = true;
}

const SchemaStore* SchemaRegistry::get(uint32_t partition,
                                       ComponentId source) const {
  auto it = snapshots_.find(key_of(partition, source));
  if (it == snapshots_.end())
    throw QueryError("schema not broadcast before use: partition " +
                     std::to_string(partition) + " component " +
                     source.to_string());
  return it->second.get();
}

// ---------------------------------------------------------------------------
// Bounded MPSC exchange queue with backpressure
// ---------------------------------------------------------------------------

namespace {

template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(size_t cap) : cap_(cap) {}

  void add_producer() {
    std::lock_guard<std::mutex> lock(mu_);
    ++producers_;
  }
  void done_producer() {
    std::lock_guard<std::mutex> lock(mu_);
    if (--producers_ == 0) cv_pop_.notify_all();
  }
  void push(T item) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_push_.wait(lock, [&] { return items_.size() < cap_ || aborted_; });
    if (aborted_) return;
    items_.push_back(std::move(item));
    cv_pop_.notify_one();
  }
  std::optional<T> pop() {
    std::unique_lock<std::mutex> lock(mu_);
    cv_pop_.wait(lock, [&] {
      return !items_.empty() || producers_ == 0 || aborted_;
    });
    if (aborted_ || items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    cv_push_.notify_one();
    return item;
  }
  void abort() {
    std::lock_guard<std::mutex> lock(mu_);
    aborted_ = true;
    cv_push_.notify_all();
    cv_pop_.notify_all();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_push_, cv_pop_;
  std::deque<T> items_;
  size_t cap_;
  size_t producers_ = 0;
  bool aborted_ = false;
};

// ---------------------------------------------------------------------------
// Rows and evaluation
// ---------------------------------------------------------------------------

struct Row {
  uint32_t partition = 0;
  ComponentId source = kMemComponentId;
  std::optional<vb::VBRecord> rec;            // pushdown off
  std::shared_ptr<const JsonDoc> item;        // pushdown off, unnest element
  std::vector<Value> cols;                    // pushdown on: record columns
  std::vector<Value> item_vals;               // pushdown on: unnest columns
  std::vector<Value> group_keys;              // evaluated at the producer
};

struct EvalContext {
  const QueryPlan& plan;
  const Row& row;
  const vb::FieldNameTable* names;  // for pushdown-off record access
  const vb::DeclaredFields* declared;
};

Value eval_expr(const Expr& e, const EvalContext& ctx) {
  switch (e.kind) {
    case Expr::Kind::RecordPath: {
      if (ctx.plan.pushdown) {
        int col = ctx.plan.column_of(*e.path);
        if (col < 0) throw QueryError("path not bound to scan: " +
                                      e.path->to_string());
        return ctx.row.cols[static_cast<size_t>(col)];
      }
      std::vector<PathExpr> one{*e.path};
      return vb::get_values(*ctx.row.rec, ctx.names, *ctx.declared, one)[0];
    }
    case Expr::Kind::UnnestPath: {
      if (ctx.plan.pushdown) {
        std::vector<PathStep> steps = ctx.plan.spec.unnest_path->steps();
        if (e.path)
          steps.insert(steps.end(), e.path->steps().begin(),
                       e.path->steps().end());
        int col = ctx.plan.aligned_column_of(PathExpr(std::move(steps)));
        if (col < 0) throw QueryError("unnest path not bound to scan");
        return ctx.row.item_vals[static_cast<size_t>(col)];
      }
      if (!ctx.row.item) return std::nullopt;
      if (!e.path) return *ctx.row.item;
      return navigate(*ctx.row.item, *e.path);
    }
    case Expr::Kind::Literal:
      return e.literal;
    case Expr::Kind::Length:
      return fn_length(eval_expr(*e.arg, ctx));
    case Expr::Kind::Lower:
      return fn_lower(eval_expr(*e.arg, ctx));
    case Expr::Kind::Ref:
      throw QueryError("ref expression outside order_by: " + e.ref);
  }
  return std::nullopt;
}

bool eval_pred(const Pred& p, const EvalContext& ctx) {
  switch (p.kind) {
    case Pred::Kind::And:
      for (const auto& c : p.children)
        if (!eval_pred(*c, ctx)) return false;
      return true;
    case Pred::Kind::Or:
      for (const auto& c : p.children)
        if (eval_pred(*c, ctx)) return true;
      return false;
    case Pred::Kind::Not:
      return !eval_pred(*p.children[0], ctx);
    case Pred::Kind::Cmp:
      return cmp_apply(p.cmp_op, eval_expr(*p.lhs, ctx),
                       eval_expr(*p.rhs, ctx));
    case Pred::Kind::Any: {
      Value arr;
      if (ctx.plan.pushdown) {
        int col = ctx.plan.column_of(*p.any_path);
        if (col < 0) throw QueryError("any-path not bound to scan");
        arr = ctx.row.cols[static_cast<size_t>(col)];
      } else {
        std::vector<PathExpr> one{*p.any_path};
        arr = vb::get_values(*ctx.row.rec, ctx.names, *ctx.declared, one)[0];
      }
      if (!arr || !arr->is_array()) return false;
      Value rhs = p.any_rhs;
      for (size_t i = 0; i < arr->item_count(); ++i) {
        Value elem = arr->item(i);
        if (p.any_lower) elem = fn_lower(elem);
        if (cmp_apply(p.any_op, elem, rhs)) return true;
      }
      return false;
    }
  }
  return false;
}

struct GroupRow {
  std::vector<Value> keys;
  std::vector<JsonDoc> aggs;
};

uint64_t route_hash(const std::vector<Value>& keys) {
  std::string canon;
  for (const Value& k : keys) {
    canon += canonical_key(k);
    canon.push_back('\x02');
  }
  return std::hash<std::string>{}(canon);
}

}  // namespace

// ---------------------------------------------------------------------------
// execute
// ---------------------------------------------------------------------------

QueryResult execute(const QueryPlan& plan, Engine& engine,
                    const ExecOptions& opts) {
  const QuerySpec& spec = plan.spec;
  const uint32_t P = static_cast<uint32_t>(engine.partition_count());
  QueryResult result;

  SchemaRegistry registry;
  if (plan.has_non_local_exchange && !opts.skip_broadcast_for_test) {
    // Broadcast once per partition, only when records cross executors.
    registry.populate(engine);
    result.stats.broadcast_count += P;
  }

  const bool grouped = plan.has_group_by;
  const bool global_agg = !grouped && !spec.aggregates.empty();
  const bool whole_docs =
      !grouped && spec.aggregates.empty() && spec.select.empty();

  std::vector<std::unique_ptr<BoundedQueue<Row>>> exchange;
  if (grouped) {
    for (uint32_t i = 0; i < P; ++i) {
      exchange.push_back(std::make_unique<BoundedQueue<Row>>(1024));
      for (uint32_t j = 0; j < P; ++j) exchange.back()->add_producer();
    }
  }

  std::mutex out_mu;
  std::vector<JsonDoc> plain_rows;                 // non-grouped shaped rows
  std::vector<std::vector<AggState>> partials(P);  // global aggregates
  std::vector<GroupRow> group_rows;
  std::atomic<uint64_t> records_scanned{0};

  std::mutex err_mu;
  std::exception_ptr first_error;
  auto capture_error = [&](std::exception_ptr e) {
    std::lock_guard<std::mutex> lock(err_mu);
    if (!first_error) first_error = e;
    for (auto& q : exchange) q->abort();
  };

  // Per-partition local schema snapshots for scan-side access.
  std::vector<std::map<uint64_t, std::shared_ptr<const SchemaStore>>> local(P);
  auto local_key = [](ComponentId id) { return (id.lo << 24) ^ id.hi; };
  for (uint32_t p = 0; p < P; ++p)
    for (const auto& snap : engine.partition(p).components())
      local[p][local_key(snap.id)] = snap.schema;

  auto stage1 = [&](uint32_t p) {
    bool closed = false;
    auto close_queues = [&] {
      if (closed || !grouped) return;
      closed = true;
      for (auto& q : exchange) q->done_producer();
    };
    try {
      std::vector<AggState> my_partials(spec.aggregates.size());
      std::vector<JsonDoc> my_rows;
      const vb::DeclaredFields& declared = engine.partition(p).declared();

      for (auto& item : engine.partition(p).scan()) {
        records_scanned.fetch_add(1, std::memory_order_relaxed);
        vb::VBRecord rec = vb::VBRecord::adopt(std::move(item.record));
        const SchemaStore* names = nullptr;
        if (!(item.source == kMemComponentId))
          names = local[p].at(local_key(item.source)).get();

        vb::ExtractResult ext;
        bool extracted = false;
        if (plan.pushdown &&
            (!plan.scan_paths.empty() || !plan.scan_aligned_paths.empty())) {
          vb::ExtractSpec req;
          req.paths = plan.scan_paths;
          req.aligned_paths = plan.scan_aligned_paths;
          ext = vb::extract_values(rec, names, declared, req);
          extracted = true;
        }
        if (!plan.pushdown && spec.unnest_path) {
          // The unnest operator's own access: one scan for the elements.
          vb::ExtractSpec req;
          req.aligned_paths = plan.scan_aligned_paths;
          ext = vb::extract_values(rec, names, declared, req);
          extracted = true;
        }

        size_t fanout = 1;
        if (spec.unnest_path) {
          if (!extracted || plan.scan_aligned_paths.empty())
            throw QueryError("unnest without bound element extraction");
          fanout = ext.aligned[0].has_value() ? ext.aligned[0]->size() : 0;
        }

        std::optional<JsonDoc> whole;
        if (whole_docs) whole = vb::decode(rec, names, declared);

        for (size_t i = 0; i < fanout; ++i) {
          Row row;
          row.partition = p;
          row.source = item.source;
          if (plan.pushdown) {
            if (extracted) row.cols = ext.values;
            if (spec.unnest_path) {
              row.item_vals.reserve(ext.aligned.size());
              for (auto& col : ext.aligned)
                row.item_vals.push_back(col ? (*col)[i] : Value{});
            }
          } else {
            // The record rides along; consumers scan it at their own site.
            row.rec = vb::VBRecord::adopt(
                Bytes(rec.bytes().begin(), rec.bytes().end()));
            if (spec.unnest_path) {
              Value elem = ext.aligned[0] ? (*ext.aligned[0])[i] : Value{};
              if (elem)
                row.item = std::make_shared<const JsonDoc>(std::move(*elem));
            }
          }

          EvalContext ctx{plan, row, names, &declared};
          if (spec.where && !eval_pred(*spec.where, ctx)) continue;

          if (grouped) {
            row.group_keys.reserve(spec.group_by.size());
            for (const auto& g : spec.group_by)
              row.group_keys.push_back(eval_expr(*g.expr, ctx));
            uint64_t h = route_hash(row.group_keys);
            exchange[h % P]->push(std::move(row));
          } else if (global_agg) {
            for (size_t a = 0; a < spec.aggregates.size(); ++a) {
              const Aggregate& agg = spec.aggregates[a];
              if (agg.expr)
                my_partials[a].add(eval_expr(*agg.expr, ctx));
              else
                my_partials[a].add_row();
            }
          } else if (whole_docs) {
            my_rows.push_back(*whole);
          } else {
            JsonDoc out = JsonDoc::object();
            for (const auto& s : spec.select) {
              Value v = eval_expr(*s.expr, ctx);
              out.add_field(s.alias, v ? std::move(*v) : JsonDoc::null());
            }
            my_rows.push_back(std::move(out));
          }
        }
      }

      close_queues();
      if (global_agg) partials[p] = std::move(my_partials);
      if (!my_rows.empty()) {
        std::lock_guard<std::mutex> lock(out_mu);
        for (auto& r : my_rows) plain_rows.push_back(std::move(r));
      }
    } catch (...) {
      close_queues();
      capture_error(std::current_exception());
    }
  };

  auto stage2 = [&](uint32_t p) {
    try {
      struct Group {
        std::vector<Value> keys;
        std::vector<AggState> states;
      };
      std::unordered_map<std::string, Group> groups;
      const vb::DeclaredFields& declared = engine.partition(0).declared();

      while (auto row = exchange[p]->pop()) {
        std::string canon;
        for (const Value& k : row->group_keys) {
          canon += canonical_key(k);
          canon.push_back('\x02');
        }
        auto [it, fresh] = groups.try_emplace(canon);
        if (fresh) {
          it->second.keys = row->group_keys;
          it->second.states.resize(spec.aggregates.size());
        }
        // Aggregate inputs resolve here, on the consumer side of the
        // exchange; with pushdown off that means scanning the shipped record
        // against the broadcast schema of its source partition.
        const SchemaStore* names = nullptr;
        if (!plan.pushdown && row->rec && row->rec->compacted() &&
            !(row->source == kMemComponentId))
          names = registry.get(row->partition, row->source);
        EvalContext ctx{plan, *row, names, &declared};
        for (size_t a = 0; a < spec.aggregates.size(); ++a) {
          const Aggregate& agg = spec.aggregates[a];
          if (agg.expr)
            it->second.states[a].add(eval_expr(*agg.expr, ctx));
          else
            it->second.states[a].add_row();
        }
      }

      std::vector<GroupRow> my_rows;
      for (auto& [canon, g] : groups) {
        GroupRow out;
        out.keys = std::move(g.keys);
        for (size_t a = 0; a < spec.aggregates.size(); ++a)
          out.aggs.push_back(g.states[a].result(spec.aggregates[a].fn));
        my_rows.push_back(std::move(out));
      }
      std::lock_guard<std::mutex> lock(out_mu);
      for (auto& r : my_rows) group_rows.push_back(std::move(r));
    } catch (...) {
      capture_error(std::current_exception());
      // Drain so producers are not stuck on a full queue.
      while (exchange[p]->pop()) {
      }
    }
  };

  std::vector<std::thread> threads;
  for (uint32_t p = 0; p < P; ++p) threads.emplace_back(stage1, p);
  if (grouped)
    for (uint32_t p = 0; p < P; ++p) threads.emplace_back(stage2, p);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);

  // Coordinator: shape, order, limit.
  std::vector<JsonDoc> rows;
  if (grouped) {
    for (GroupRow& g : group_rows) {
      JsonDoc out = JsonDoc::object();
      for (size_t k = 0; k < spec.group_by.size(); ++k)
        out.add_field(spec.group_by[k].alias,
                      g.keys[k] ? std::move(*g.keys[k]) : JsonDoc::null());
      for (size_t a = 0; a < spec.aggregates.size(); ++a)
        out.add_field(spec.aggregates[a].alias, std::move(g.aggs[a]));
      rows.push_back(std::move(out));
    }
  } else if (global_agg) {
    JsonDoc out = JsonDoc::object();
    for (size_t a = 0; a < spec.aggregates.size(); ++a) {
      AggState total;
      for (uint32_t p = 0; p < P; ++p)
        if (!partials[p].empty()) total.combine(partials[p][a]);
      out.add_field(spec.aggregates[a].alias,
                    total.result(spec.aggregates[a].fn));
    }
    rows.push_back(std::move(out));
  } else {
    rows = std::move(plain_rows);
  }

  if (!spec.order_by.empty()) {
    auto sort_value = [&](const JsonDoc& row, const OrderKey& k) -> Value {
      if (!k.ref.empty()) {
        const JsonDoc* f = row.find(k.ref);
        return f ? Value(*f) : Value{};
      }
      // Expression keys evaluate against the shaped row document.
      if (k.expr->kind == Expr::Kind::RecordPath)
        return navigate(row, *k.expr->path);
      throw QueryError("order_by expression must be a path or ref");
    };
    std::stable_sort(rows.begin(), rows.end(),
                     [&](const JsonDoc& a, const JsonDoc& b) {
                       for (const OrderKey& k : spec.order_by) {
                         int c = value_total_order(sort_value(a, k),
                                                   sort_value(b, k));
                         if (k.desc) c = -c;
                         if (c != 0) return c < 0;
                       }
                       return a.to_json() < b.to_json();  // determinism
                     });
  }
  if (spec.limit && rows.size() > *spec.limit) rows.resize(*spec.limit);

  result.rows = std::move(rows);
  result.stats.records_scanned = records_scanned.load();
  result.stats.rows_out = result.rows.size();
  return result;
}

}  // namespace docpack::query
