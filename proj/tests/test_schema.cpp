#include <doctest.h>

#include "docpack/schema.hpp"
#include "docpack/vb_record.hpp"

using namespace docpack;

namespace {

const vb::DeclaredFields kDeclaredId({"id"});

vb::VBRecord enc(const char* text) {
  return vb::encode(JsonDoc::parse(text), kDeclaredId);
}

const SchemaNode* field(const SchemaStore& s, const SchemaNode& parent,
                        const char* name) {
  auto id = s.id_of(name);
  if (!id) return nullptr;
  auto it = parent.fields.find(*id);
  return it == parent.fields.end() ? nullptr : it->second.get();
}

// The worked nested record: five siblings under the root, a two-object
// dependents array, and a heterogeneous working_shifts array.
const char* kNestedText =
    R"json({"id":1,"name":"Ann",)json"
    R"json("dependents":[{"name":"Bob","age":6},{"name":"Carol","age":10}],)json"
    R"json("employment_date":"2018-09-20","branch_location":"point(24.0,31.5)",)json"
    R"json("working_shifts":[[8,16],"on-call"]})json";

}  // namespace

TEST_CASE("two homogeneous records infer a flat schema with counters") {
  SchemaStore s;
  s.infer_record(enc(R"json({"id":0,"name":"Ann","age":26})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":1,"name":"Bob","age":27})json"), kDeclaredId);

  REQUIRE(s.root().fields.size() == 2);
  const SchemaNode* name = field(s, s.root(), "name");
  const SchemaNode* age = field(s, s.root(), "age");
  REQUIRE(name);
  REQUIRE(age);
  CHECK(name->kind == SchemaNode::Kind::String);
  CHECK(name->counter == 2);
  CHECK(age->kind == SchemaNode::Kind::Int64);
  CHECK(age->counter == 2);
  // Declared key is never recorded.
  CHECK(!s.id_of("id"));
}

TEST_CASE("heterogeneous age evolves into union(int, string)") {
  SchemaStore s;
  s.infer_record(enc(R"json({"id":0,"name":"Ann","age":26})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":1,"name":"Bob","age":27})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":2,"name":"Alex"})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":3,"name":"Bill","age":"old"})json"), kDeclaredId);

  const SchemaNode* name = field(s, s.root(), "name");
  const SchemaNode* age = field(s, s.root(), "age");
  REQUIRE(name);
  REQUIRE(age);
  CHECK(name->counter == 4);
  REQUIRE(age->kind == SchemaNode::Kind::Union);
  CHECK(age->counter == 3);
  REQUIRE(age->branches.size() == 2);
  CHECK(age->branches.at(SchemaNode::Kind::Int64)->counter == 2);
  CHECK(age->branches.at(SchemaNode::Kind::String)->counter == 1);
}

TEST_CASE("nested record counters count instances, not records") {
  SchemaStore s;
  s.infer_record(enc(kNestedText), kDeclaredId);
  for (int i = 2; i <= 6; ++i) {
    std::string text = "{\"id\":" + std::to_string(i) + ",\"name\":\"N\"}";
    s.infer_record(enc(text.c_str()), kDeclaredId);
  }

  const SchemaNode& root = s.root();
  CHECK(field(s, root, "name")->counter == 6);
  const SchemaNode* deps = field(s, root, "dependents");
  REQUIRE(deps);
  CHECK(deps->kind == SchemaNode::Kind::Array);
  CHECK(deps->counter == 1);
  REQUIRE(deps->item);
  CHECK(deps->item->kind == SchemaNode::Kind::Object);
  CHECK(deps->item->counter == 2);  // two dependent objects in one record
  CHECK(field(s, *deps->item, "name")->counter == 2);
  CHECK(field(s, *deps->item, "age")->counter == 2);
  CHECK(field(s, root, "employment_date")->counter == 1);
  CHECK(field(s, root, "branch_location")->counter == 1);

  const SchemaNode* shifts = field(s, root, "working_shifts");
  REQUIRE(shifts);
  CHECK(shifts->counter == 1);
  REQUIRE(shifts->item);
  CHECK(shifts->item->kind == SchemaNode::Kind::Union);
  CHECK(shifts->item->counter == 2);
  const SchemaNode& arr_branch = *shifts->item->branches.at(SchemaNode::Kind::Array);
  CHECK(arr_branch.counter == 1);
  CHECK(arr_branch.item->counter == 2);  // [8,16]
  CHECK(shifts->item->branches.at(SchemaNode::Kind::String)->counter == 1);

  // Field name "name" appears at two different object levels but is one
  // dictionary entry.
  CHECK(s.id_of("name") == 0);
  CHECK(s.dictionary_size() == 6);
}

TEST_CASE("anti-schema extraction mirrors instance counts without mutating") {
  SchemaStore s;
  vb::VBRecord rec = enc(kNestedText);
  s.infer_record(rec, kDeclaredId);
  uint64_t v = s.version();

  AntiSchema anti = s.extract_anti(rec, kDeclaredId);
  CHECK(s.version() == v);  // const
  REQUIRE(anti.root);
  REQUIRE(anti.root->fields.size() == 5);
  const SchemaNode& adeps = *anti.root->fields.at(*s.id_of("dependents"));
  CHECK(adeps.counter == 1);
  CHECK(adeps.item->counter == 2);
  CHECK(adeps.item->fields.at(*s.id_of("name"))->counter == 2);
  CHECK(adeps.item->fields.at(*s.id_of("age"))->counter == 2);

  // Compacted image extracts identically.
  vb::VBRecord packed = vb::compact(rec, s);
  AntiSchema anti2 = s.extract_anti(packed, kDeclaredId);
  SchemaStore a;
  SchemaStore b;
  // Apply both to clones of the store and compare outcomes.
  a = s.clone();
  b = s.clone();
  a.apply_anti(anti);
  b.apply_anti(anti2);
  CHECK(tree_equal_by_name(a, b));
}

TEST_CASE("empty record has an empty anti-schema") {
  SchemaStore s;
  vb::VBRecord rec = vb::encode(JsonDoc::parse("{}"), {});
  AntiSchema anti = s.extract_anti(rec, {});
  CHECK(anti.empty());
}

TEST_CASE("delete-driven pruning: counter 6 drops to 5, unique nodes vanish") {
  SchemaStore s;
  vb::VBRecord rec = enc(kNestedText);
  s.infer_record(rec, kDeclaredId);
  for (int i = 2; i <= 6; ++i) {
    std::string text = "{\"id\":" + std::to_string(i) + ",\"name\":\"N\"}";
    s.infer_record(enc(text.c_str()), kDeclaredId);
  }

  s.apply_anti(s.extract_anti(rec, kDeclaredId));

  REQUIRE(s.root().fields.size() == 1);
  const SchemaNode* name = field(s, s.root(), "name");
  REQUIRE(name);
  CHECK(name->kind == SchemaNode::Kind::String);
  CHECK(name->counter == 5);
  // Dictionary entries are retained even when unreferenced.
  CHECK(s.dictionary_size() == 6);
  CHECK(s.id_of("dependents").has_value());
}

TEST_CASE("union collapses when a branch empties") {
  SchemaStore s;
  s.infer_record(enc(R"json({"id":0,"age":26})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":1,"age":27})json"), kDeclaredId);
  vb::VBRecord odd = enc(R"json({"id":3,"age":"old"})json");
  s.infer_record(odd, kDeclaredId);
  REQUIRE(field(s, s.root(), "age")->kind == SchemaNode::Kind::Union);

  s.apply_anti(s.extract_anti(odd, kDeclaredId));
  const SchemaNode* age = field(s, s.root(), "age");
  REQUIRE(age);
  CHECK(age->kind == SchemaNode::Kind::Int64);
  CHECK(age->counter == 2);
}

TEST_CASE("apply(extract(r)) inverts infer(r) on a fresh store") {
  SchemaStore s;
  vb::VBRecord rec = enc(kNestedText);
  s.infer_record(rec, kDeclaredId);
  s.apply_anti(s.extract_anti(rec, kDeclaredId));
  CHECK(s.root().fields.empty());
  CHECK(s.node_count() == 1);  // the permanent root
  // A second apply underflows: invariant breach.
  SchemaStore t;
  t.infer_record(rec, kDeclaredId);
  AntiSchema anti = t.extract_anti(rec, kDeclaredId);
  t.apply_anti(anti);
  CHECK_THROWS_AS(t.apply_anti(anti), SchemaError);
}

TEST_CASE("extraction of unknown names is a corruption signal") {
  SchemaStore s;
  vb::VBRecord rec = enc(R"json({"id":0,"brand_new":1})json");
  CHECK_THROWS_AS(s.extract_anti(rec, kDeclaredId), SchemaError);
}

TEST_CASE("schema blob roundtrips") {
  SUBCASE("empty store") {
    SchemaStore s;
    SchemaStore back = SchemaStore::deserialize(ByteSpan(s.serialize()));
    CHECK(deep_equal(s, back));
  }
  SUBCASE("union store") {
    SchemaStore s;
    s.infer_record(enc(R"json({"id":0,"name":"Ann","age":26})json"), kDeclaredId);
    s.infer_record(enc(R"json({"id":3,"name":"Bill","age":"old"})json"), kDeclaredId);
    s.infer_record(enc(kNestedText), kDeclaredId);
    Bytes blob = s.serialize();
    SchemaStore back = SchemaStore::deserialize(ByteSpan(blob));
    CHECK(deep_equal(s, back));
    // Persisted blobs are immutable snapshots; the original may move on.
    s.infer_record(enc(R"json({"id":9,"extra":true})json"), kDeclaredId);
    SchemaStore again = SchemaStore::deserialize(ByteSpan(blob));
    CHECK(!deep_equal(s, again));
  }
  SUBCASE("corrupt blobs") {
    SchemaStore s;
    Bytes blob = s.serialize();
    Bytes bad = blob;
    bad[0] = 'X';
    CHECK_THROWS_AS(SchemaStore::deserialize(ByteSpan(bad)), FormatError);
    Bytes trunc(blob.begin(), blob.begin() + blob.size() / 2);
    CHECK_THROWS_AS(SchemaStore::deserialize(ByteSpan(trunc)), FormatError);
  }
}

TEST_CASE("dictionary bindings survive serialize/deserialize/continue") {
  SchemaStore s;
  s.infer_record(enc(R"json({"id":0,"name":"Ann","age":26})json"), kDeclaredId);
  uint32_t name_id = *s.id_of("name");
  uint32_t age_id = *s.id_of("age");

  SchemaStore resumed = SchemaStore::deserialize(ByteSpan(s.serialize()));
  resumed.infer_record(enc(R"json({"id":1,"zip":"90210","name":"Bob"})json"),
                       kDeclaredId);
  CHECK(*resumed.id_of("name") == name_id);
  CHECK(*resumed.id_of("age") == age_id);
  CHECK(*resumed.id_of("zip") == 2);  // appended, never reusing ids
}

TEST_CASE("lookup and path resolution") {
  SchemaStore s;
  s.infer_record(enc(kNestedText), kDeclaredId);
  s.infer_record(enc(R"json({"id":3,"age":"old"})json"), kDeclaredId);
  s.infer_record(enc(R"json({"id":4,"age":7})json"), kDeclaredId);

  CHECK(*s.id_of("name") == 0);
  CHECK(!s.id_of("absent"));

  auto nodes = s.resolve_path(PathExpr::parse("age"));
  REQUIRE(nodes.size() == 1);
  CHECK(nodes[0]->kind == SchemaNode::Kind::Union);

  auto dep_name = s.resolve_path(PathExpr::parse("dependents[0].name"));
  REQUIRE(dep_name.size() == 1);
  CHECK(dep_name[0]->kind == SchemaNode::Kind::String);

  // Traversal through a union fans out per branch.
  auto shift_items = s.resolve_path(PathExpr::parse("working_shifts[0][0]"));
  REQUIRE(shift_items.size() == 1);
  CHECK(shift_items[0]->kind == SchemaNode::Kind::Int64);

  CHECK(s.resolve_path(PathExpr::parse("absent.path")).empty());
}

TEST_CASE("version bumps on every mutation") {
  SchemaStore s;
  CHECK(s.version() == 0);
  vb::VBRecord rec = enc(R"json({"id":0,"name":"Ann"})json");
  s.infer_record(rec, kDeclaredId);
  CHECK(s.version() == 1);
  s.infer_record(rec, kDeclaredId);
  CHECK(s.version() == 2);
  s.apply_anti(s.extract_anti(rec, kDeclaredId));
  CHECK(s.version() == 3);
}
