#include <doctest.h>

#include <limits>

#include "docpack/schema.hpp"
#include "docpack/vb_record.hpp"
#include "support/hex.hpp"

using namespace docpack;
using namespace docpack::testing;

namespace {

const char* kWorkedDocText =
    R"json({"id":1,"name":"Ann","salaries":[70000,90000],"age":26})json";

// Frozen byte image of the worked record, uncompacted. Documented
// byte-by-byte in docs/format.md.
const char* kWorkedUncompactedHex =
    "59000000 09000000 1a000000 23000000 43000000 4a000000 03 05"
    "01 04 03 02 04 04 08 04 09"
    "0100000000000000 7011010000000000 905f010000000000 1a00000000000000"
    "03"
    "416e6e"
    "90 a0 01"
    "6e616d65 73616c6172696573 616765";

// The same record after compaction against a schema whose dictionary holds
// name->0, salaries->1, age->2.
const char* kWorkedCompactedHex =
    "49000000 09000000 1a000000 23000000 43000000 00000000 03 03"
    "01 04 03 02 04 04 08 04 09"
    "0100000000000000 7011010000000000 905f010000000000 1a00000000000000"
    "03"
    "416e6e"
    "44 04";

vb::DeclaredFields declared_id() {
  return vb::DeclaredFields({"id"});
}

// The nested example record: two object dependents plus a bare string one;
// dates and points carried as strings.
const char* kNestedDocText =
    R"json({"id":1,"name":"Ann",)json"
    R"json("dependents":[{"name":"Bob","age":6},{"name":"Carol","age":10},"Dan"],)json"
    R"json("employment_date":"2018-09-20","branch_location":"point(24.0,31.5)"})json";

std::string golden_path(const char* name) {
  return std::string(DOCPACK_GOLDEN_DIR) + "/" + name;
}

}  // namespace

TEST_CASE("worked record encodes to the frozen byte image") {
  JsonDoc doc = JsonDoc::parse(kWorkedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());

  const vb::Header& h = rec.header();
  CHECK(h.tag_count == 9);
  CHECK(h.var_len_bits == 3);
  CHECK(h.fieldname_len_bits == 5);
  CHECK(!rec.compacted());

  Bytes expected = from_hex(kWorkedUncompactedHex);
  CHECK(to_hex(rec.bytes()) == to_hex(ByteSpan(expected)));
  CHECK(to_hex(ByteSpan(read_file(golden_path("worked_uncompacted.bin")))) ==
        to_hex(rec.bytes()));
}

TEST_CASE("worked record compaction shrinks entries to two bytes") {
  JsonDoc doc = JsonDoc::parse(kWorkedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());

  SchemaStore schema;
  schema.infer_record(rec, declared_id());
  CHECK(schema.id_of("name") == 0);
  CHECK(schema.id_of("salaries") == 1);
  CHECK(schema.id_of("age") == 2);

  vb::VBRecord packed = vb::compact(rec, schema);
  CHECK(packed.compacted());
  CHECK(packed.header().offset_fieldnames == 0);
  CHECK(packed.header().fieldname_len_bits == 3);
  CHECK(packed.total_length() < rec.total_length());

  Bytes expected = from_hex(kWorkedCompactedHex);
  CHECK(to_hex(packed.bytes()) == to_hex(ByteSpan(expected)));
  CHECK(to_hex(ByteSpan(read_file(golden_path("worked_compacted.bin")))) ==
        to_hex(packed.bytes()));

  // Value vectors are byte-identical: tags + fixed + var sections.
  size_t value_bytes = packed.header().offset_var + 1 + 3 - vb::kHeaderSize;
  CHECK(to_hex(rec.bytes().subspan(vb::kHeaderSize, value_bytes)) ==
        to_hex(packed.bytes().subspan(vb::kHeaderSize, value_bytes)));

  // Roundtrip through the schema.
  JsonDoc back = vb::decode(packed, &schema, declared_id());
  CHECK(back == doc);
  CHECK(vb::decode(rec, nullptr, declared_id()) == back);
}

TEST_CASE("empty record") {
  JsonDoc doc = JsonDoc::parse("{}");
  vb::VBRecord rec = vb::encode(doc, {});
  CHECK(rec.header().tag_count == 2);  // object + end-of-values
  CHECK(rec.bytes()[vb::kHeaderSize] == static_cast<uint8_t>(vb::TypeTag::Object));
  CHECK(rec.bytes()[vb::kHeaderSize + 1] == static_cast<uint8_t>(vb::TypeTag::Eov));
  CHECK(vb::decode(rec, nullptr, {}) == doc);
  CHECK(rec.total_length() == vb::kHeaderSize + 2);
}

TEST_CASE("nested record tag stream and golden image") {
  JsonDoc doc = JsonDoc::parse(kNestedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());

  using T = vb::TypeTag;
  const T expected[] = {T::Object, T::Int64,     T::String, T::Array,
                        T::Object, T::String,    T::Int64,  T::CloseNest,
                        T::Object, T::String,    T::Int64,  T::CloseNest,
                        T::String, T::CloseNest, T::String, T::String,
                        T::Eov};
  REQUIRE(rec.header().tag_count == 17);
  for (size_t i = 0; i < 17; ++i)
    CHECK(rec.bytes()[vb::kHeaderSize + i] == static_cast<uint8_t>(expected[i]));

  CHECK(vb::decode(rec, nullptr, declared_id()) == doc);
  CHECK(to_hex(ByteSpan(read_file(golden_path("nested_example.bin")))) ==
        to_hex(rec.bytes()));
}

TEST_CASE("encode errors") {
  CHECK_THROWS_AS(vb::encode(JsonDoc::parse("[1,2]"), {}), FormatError);
  CHECK_THROWS_AS(vb::encode(JsonDoc::integer(4), {}), FormatError);

  JsonDoc huge_name = JsonDoc::object();
  huge_name.add_field(std::string(40000, 'k'), JsonDoc::integer(1));
  CHECK_THROWS_AS(vb::encode(huge_name, {}), FormatError);

  JsonDoc huge_str = JsonDoc::object();
  huge_str.add_field("s", JsonDoc::string(std::string(70000, 'v')));
  CHECK_THROWS_AS(vb::encode(huge_str, {}), FormatError);

  JsonDoc nan = JsonDoc::object();
  nan.add_field("d", JsonDoc::number(std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS_AS(vb::encode(nan, {}), FormatError);
}

TEST_CASE("decode errors") {
  JsonDoc doc = JsonDoc::parse(kWorkedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());
  SchemaStore schema;
  schema.infer_record(rec, declared_id());
  vb::VBRecord packed = vb::compact(rec, schema);

  // Compacted without a schema.
  CHECK_THROWS_AS(vb::decode(packed, nullptr, declared_id()), FormatError);
  // Schema missing the referenced ids.
  SchemaStore empty;
  CHECK_THROWS_AS(vb::decode(packed, &empty, declared_id()), FormatError);
  // Declared index out of range.
  CHECK_THROWS_AS(vb::decode(rec, nullptr, {}), FormatError);
}

TEST_CASE("compaction requires every name in the dictionary") {
  JsonDoc doc = JsonDoc::parse(kWorkedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());
  SchemaStore empty;
  CHECK_THROWS_AS(vb::compact(rec, empty), SchemaError);
}

TEST_CASE("get_values resolves multiple paths in one scan") {
  JsonDoc doc = JsonDoc::parse(kWorkedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());

  std::vector<PathExpr> paths{PathExpr::parse("age"), PathExpr::parse("name"),
                              PathExpr::parse("salaries[1]"),
                              PathExpr::parse("id"),
                              PathExpr::parse("nonexistent.field")};
  uint64_t scans_before = vb::instrument::tag_scans();
  auto got = vb::get_values(rec, nullptr, declared_id(), paths);
  CHECK(vb::instrument::tag_scans() - scans_before == 1);

  REQUIRE(got.size() == 5);
  CHECK(*got[0] == JsonDoc::integer(26));
  CHECK(*got[1] == JsonDoc::string("Ann"));
  CHECK(*got[2] == JsonDoc::integer(90000));
  CHECK(*got[3] == JsonDoc::integer(1));
  CHECK(!got[4].has_value());
}

TEST_CASE("get_values on the nested record, compacted and not") {
  JsonDoc doc = JsonDoc::parse(kNestedDocText);
  vb::VBRecord rec = vb::encode(doc, declared_id());
  SchemaStore schema;
  schema.infer_record(rec, declared_id());
  vb::VBRecord packed = vb::compact(rec, schema);

  std::vector<PathExpr> paths{PathExpr::parse("dependents[0].name"),
                              PathExpr::parse("dependents[*].name"),
                              PathExpr::parse("dependents[*].age"),
                              PathExpr::parse("name[*]")};

  for (const vb::VBRecord* r : {&rec, &packed}) {
    auto got = vb::get_values(*r, &schema, declared_id(), paths);
    REQUIRE(got.size() == 4);
    CHECK(*got[0] == JsonDoc::string("Bob"));
    REQUIRE(got[1]->is_array());
    REQUIRE(got[1]->item_count() == 2);  // the string dependent has no name
    CHECK(got[1]->item(0) == JsonDoc::string("Bob"));
    CHECK(got[1]->item(1) == JsonDoc::string("Carol"));
    CHECK(got[2]->item(1) == JsonDoc::integer(10));
    CHECK(!got[3].has_value());  // wildcard over a non-array
  }

  // Nested value extraction rebuilds whole subtrees.
  std::vector<PathExpr> sub{PathExpr::parse("dependents[1]"),
                            PathExpr::parse("dependents")};
  auto got = vb::get_values(packed, &schema, declared_id(), sub);
  CHECK(*got[0] == doc.find("dependents")->item(1));
  CHECK(*got[1] == *doc.find("dependents"));
}

TEST_CASE("validate accepts the fixtures and pinpoints violations") {
  Bytes good = from_hex(kWorkedUncompactedHex);
  CHECK(vb::validate(ByteSpan(good)).ok);
  Bytes packed = from_hex(kWorkedCompactedHex);
  CHECK(vb::validate(ByteSpan(packed)).ok);

  SUBCASE("missing end-of-values") {
    Bytes bad = good;
    bad[vb::kHeaderSize + 8] = static_cast<uint8_t>(vb::TypeTag::Int64);
    // Now the fixed vector is short too, but the first violation reported is
    // the missing EOV at tag index tag_count.
    auto r = vb::validate(ByteSpan(bad));
    REQUIRE(!r.ok);
    CHECK(r.violation.code == "missing_eov");
    CHECK(r.violation.byte_pos == vb::kHeaderSize + 9);
  }
  SUBCASE("frame length mismatch") {
    Bytes bad = good;
    bad.pop_back();
    auto r = vb::validate(ByteSpan(bad));
    REQUIRE(!r.ok);
    CHECK(r.violation.code == "length_mismatch");
  }
  SUBCASE("invalid tag byte") {
    Bytes bad = good;
    bad[vb::kHeaderSize + 3] = 0x7F;
    auto r = vb::validate(ByteSpan(bad));
    REQUIRE(!r.ok);
    CHECK(r.violation.code == "bad_tag");
    CHECK(r.violation.byte_pos == vb::kHeaderSize + 3);
  }
  SUBCASE("non-minimal width") {
    // Bump the var width and repack: contents no longer justify the width.
    JsonDoc doc = JsonDoc::parse(kWorkedDocText);
    (void)doc;
    Bytes bad = good;
    bad[24] = 4;
    auto r = vb::validate(ByteSpan(bad));
    REQUIRE(!r.ok);  // either var_sum or width mismatch, must not pass
  }
  SUBCASE("unbalanced close") {
    Bytes bad = good;
    bad[vb::kHeaderSize + 1] = static_cast<uint8_t>(vb::TypeTag::CloseNest);
    auto r = vb::validate(ByteSpan(bad));
    REQUIRE(!r.ok);
    CHECK(r.violation.code == "unbalanced_close");
  }
}
