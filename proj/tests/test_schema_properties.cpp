#include <doctest.h>

#include <map>

#include "docpack/schema.hpp"
#include "docpack/vb_record.hpp"
#include "support/doc_gen.hpp"
#include "support/schema_oracle.hpp"

using namespace docpack;
using namespace docpack::testing;

namespace {

const vb::DeclaredFields kDeclaredId({"id"});

bool no_zero_counters(const SchemaNode& n, bool is_root) {
  if (!is_root && n.counter == 0) return false;
  for (const auto& [id, c] : n.fields)
    if (!no_zero_counters(*c, false)) return false;
  if (n.item && !no_zero_counters(*n.item, false)) return false;
  for (const auto& [k, c] : n.branches)
    if (!no_zero_counters(*c, false)) return false;
  return true;
}

/// Every node of `a` is present in `b` with counter <= b's (name-keyed).
bool subtree_of(const SchemaNode& a, const SchemaStore& sa, const SchemaNode& b,
                const SchemaStore& sb) {
  if (a.kind != b.kind) return false;
  if (a.counter > b.counter) return false;
  for (const auto& [id, achild] : a.fields) {
    const std::string* name = sa.name_of(id);
    auto bid = sb.id_of(*name);
    if (!bid) return false;
    auto it = b.fields.find(*bid);
    if (it == b.fields.end()) return false;
    const SchemaNode* bnode = it->second.get();
    // A concrete node may have grown into a union superset.
    if (bnode->kind == SchemaNode::Kind::Union &&
        achild->kind != SchemaNode::Kind::Union) {
      auto br = bnode->branches.find(achild->kind);
      if (br == bnode->branches.end()) return false;
      if (!subtree_of(*achild, sa, *br->second, sb)) return false;
    } else if (!subtree_of(*achild, sa, *bnode, sb)) {
      return false;
    }
  }
  if (a.item) {
    if (!b.item) return false;
    const SchemaNode* bitem = b.item.get();
    if (bitem->kind == SchemaNode::Kind::Union &&
        a.item->kind != SchemaNode::Kind::Union) {
      auto br = bitem->branches.find(a.item->kind);
      if (br == bitem->branches.end()) return false;
      if (!subtree_of(*a.item, sa, *br->second, sb)) return false;
    } else if (!subtree_of(*a.item, sa, *bitem, sb)) {
      return false;
    }
  }
  for (const auto& [k, achild] : a.branches) {
    if (b.kind != SchemaNode::Kind::Union) return false;
    auto it = b.branches.find(k);
    if (it == b.branches.end()) return false;
    if (!subtree_of(*achild, sa, *it->second, sb)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("randomized insert/delete/upsert scripts match re-inference") {
  Rng rng(2024);
  for (int script = 0; script < 60; ++script) {
    SchemaStore incremental;
    std::map<int64_t, JsonDoc> live;
    std::map<int64_t, vb::VBRecord> stored;

    int ops = 20 + static_cast<int>(rng.below(200));
    for (int op = 0; op < ops; ++op) {
      uint64_t what = rng.below(10);
      if (what < 5 || live.empty()) {
        int64_t key = static_cast<int64_t>(rng.below(64));
        JsonDoc doc = random_doc_with_key(rng, "id", key);
        vb::VBRecord rec = vb::encode(doc, kDeclaredId);
        auto it = stored.find(key);
        if (it != stored.end()) {
          // upsert: decrement the old image first
          incremental.apply_anti(incremental.extract_anti(it->second, kDeclaredId));
          stored.erase(it);
          live.erase(key);
        }
        incremental.infer_record(rec, kDeclaredId);
        stored.emplace(key, rec);
        live.emplace(key, std::move(doc));
      } else {
        // delete a random existing key
        auto it = stored.begin();
        std::advance(it, rng.below(stored.size()));
        incremental.apply_anti(incremental.extract_anti(it->second, kDeclaredId));
        live.erase(it->first);
        stored.erase(it);
      }
    }

    // From-scratch oracle over survivors (independent JsonDoc walk).
    std::vector<JsonDoc> survivors;
    for (auto& [k, d] : live) survivors.push_back(d);
    ONode expected = oracle_infer(survivors, {"id"});
    REQUIRE(oracle_matches_store(expected, incremental));

    // From-scratch re-inference through the production path agrees too.
    SchemaStore fresh;
    for (auto& [k, rec] : stored) fresh.infer_record(rec, kDeclaredId);
    REQUIRE(tree_equal_by_name(incremental, fresh));

    REQUIRE(no_zero_counters(incremental.root(), true));
  }
}

TEST_CASE("inference is order-insensitive at the structural level") {
  Rng rng(555);
  for (int round = 0; round < 30; ++round) {
    std::vector<JsonDoc> docs;
    int n = 3 + static_cast<int>(rng.below(20));
    for (int i = 0; i < n; ++i)
      docs.push_back(random_doc_with_key(rng, "id", i));

    SchemaStore fwd;
    for (const JsonDoc& d : docs)
      fwd.infer_record(vb::encode(d, kDeclaredId), kDeclaredId);

    // A seeded shuffle of the same multiset.
    std::vector<size_t> order(docs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.below(i)]);

    SchemaStore perm;
    for (size_t i : order)
      perm.infer_record(vb::encode(docs[i], kDeclaredId), kDeclaredId);

    REQUIRE(tree_equal_by_name(fwd, perm));
  }
}

TEST_CASE("insert-only schemas grow as supersets") {
  Rng rng(77);
  SchemaStore cur;
  SchemaStore prev;
  for (int i = 0; i < 50; ++i) {
    JsonDoc doc = random_doc_with_key(rng, "id", i);
    cur.infer_record(vb::encode(doc, kDeclaredId), kDeclaredId);
    if (i > 0) REQUIRE(subtree_of(prev.root(), prev, cur.root(), cur));
    prev = cur.clone();
  }
}

TEST_CASE("serialize/deserialize roundtrip over random stores") {
  Rng rng(31337);
  for (int i = 0; i < 300; ++i) {
    SchemaStore s;
    int n = 1 + static_cast<int>(rng.below(12));
    for (int k = 0; k < n; ++k) {
      JsonDoc doc = random_doc_with_key(rng, "id", k);
      s.infer_record(vb::encode(doc, kDeclaredId), kDeclaredId);
    }
    SchemaStore back = SchemaStore::deserialize(ByteSpan(s.serialize()));
    REQUIRE(deep_equal(s, back));
  }
}
