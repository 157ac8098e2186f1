// Randomized engine workloads plus the sequential map-replay oracle they are
// checked against.
#pragma once

#include <doctest.h>

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "docpack/engine.hpp"
#include "support/doc_gen.hpp"

namespace docpack::testing {

struct ScriptOp {
  enum class Kind { Insert, Delete, Upsert, Flush, MergeTick } kind;
  JsonDoc doc;    // Insert/Upsert
  int64_t key = 0;  // Delete
};

struct Script {
  std::vector<ScriptOp> ops;
};

/// Uniformly random op mix over a bounded key space. Inserts pick fresh
/// keys, deletes/upserts bias toward existing ones.
inline Script random_script(Rng& rng, int n_ops, int64_t key_space = 200) {
  Script script;
  std::set<int64_t> live;
  DocGenConfig cfg;
  cfg.max_depth = 4;
  cfg.max_fields = 5;
  for (int i = 0; i < n_ops; ++i) {
    uint64_t pick = rng.below(100);
    ScriptOp op;
    if (pick < 40 || live.empty()) {
      int64_t key = rng.range(0, key_space - 1);
      if (live.count(key)) {
        op.kind = ScriptOp::Kind::Upsert;
      } else {
        op.kind = ScriptOp::Kind::Insert;
        live.insert(key);
      }
      op.doc = random_doc_with_key(rng, "id", key, cfg);
    } else if (pick < 60) {
      auto it = live.begin();
      std::advance(it, rng.below(live.size()));
      op.kind = ScriptOp::Kind::Delete;
      op.key = *it;
      live.erase(it);
    } else if (pick < 85) {
      int64_t key = rng.range(0, key_space - 1);
      op.kind = ScriptOp::Kind::Upsert;
      op.doc = random_doc_with_key(rng, "id", key, cfg);
      live.insert(key);
    } else if (pick < 95) {
      op.kind = ScriptOp::Kind::Flush;
    } else {
      op.kind = ScriptOp::Kind::MergeTick;
    }
    script.ops.push_back(std::move(op));
  }
  return script;
}

/// Sequential oracle: the committed prefix replayed into a plain map.
inline std::map<int64_t, JsonDoc> oracle_replay(const Script& script,
                                                size_t n_ops) {
  std::map<int64_t, JsonDoc> state;
  for (size_t i = 0; i < n_ops && i < script.ops.size(); ++i) {
    const ScriptOp& op = script.ops[i];
    switch (op.kind) {
      case ScriptOp::Kind::Insert:
      case ScriptOp::Kind::Upsert:
        state.insert_or_assign(op.doc.find("id")->as_int(), op.doc);
        break;
      case ScriptOp::Kind::Delete:
        state.erase(op.key);
        break;
      default:
        break;
    }
  }
  return state;
}

/// Runs one op against the engine (Insert falls back to Upsert when the key
/// is live, mirroring the oracle's last-writer-wins map).
inline void run_op(Engine& eng, const ScriptOp& op) {
  switch (op.kind) {
    case ScriptOp::Kind::Insert:
      eng.insert(op.doc);
      break;
    case ScriptOp::Kind::Upsert:
      eng.upsert(op.doc);
      break;
    case ScriptOp::Kind::Delete:
      eng.erase(Key(op.key));
      break;
    case ScriptOp::Kind::Flush:
      eng.flush_all();
      break;
    case ScriptOp::Kind::MergeTick:
      eng.merge_ticks();
      break;
  }
}

/// Decoded live state of the engine via scan (per-component schemas).
inline std::map<int64_t, JsonDoc> engine_state(Engine& eng) {
  std::map<int64_t, JsonDoc> out;
  for (auto& item : eng.scan()) {
    vb::VBRecord rec = vb::VBRecord::adopt(std::move(item.record));
    const vb::FieldNameTable* names = nullptr;
    std::shared_ptr<ComponentReader> comp;
    if (!(item.source == kMemComponentId)) {
      comp = eng.partition(item.partition).component_reader(item.source);
      REQUIRE(comp);
      names = comp->schema().get();
    }
    JsonDoc doc =
        vb::decode(rec, names, eng.partition(item.partition).declared());
    out.emplace(item.key.as_int(), std::move(doc));
  }
  return out;
}

}  // namespace docpack::testing
