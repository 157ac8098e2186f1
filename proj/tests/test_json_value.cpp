#include <doctest.h>

#include "docpack/json_value.hpp"
#include "docpack/path.hpp"

using namespace docpack;

TEST_CASE("parse keeps insertion order and scalar kinds") {
  JsonDoc d = JsonDoc::parse(R"({"b":1,"a":2.5,"s":"x","t":true,"n":null})");
  REQUIRE(d.is_object());
  REQUIRE(d.field_count() == 5);
  CHECK(d.field_name(0) == "b");
  CHECK(d.field_name(1) == "a");
  CHECK(d.field_value(0).kind() == JsonDoc::Kind::Int64);
  CHECK(d.field_value(1).kind() == JsonDoc::Kind::Double);
  CHECK(d.field_value(2).as_string() == "x");
  CHECK(d.field_value(3).as_bool());
  CHECK(d.field_value(4).kind() == JsonDoc::Kind::Null);
}

TEST_CASE("parse roundtrips through to_json") {
  const char* texts[] = {
      R"({})",
      R"({"a":[1,2,[3,{"b":"c"}]],"d":{"e":{}},"f":-12,"g":0.125})",
      R"({"weird":"\"\\\n\t"})",
      R"({"big":9223372036854775807,"small":-9223372036854775808})",
  };
  for (const char* t : texts) {
    JsonDoc d = JsonDoc::parse(t);
    JsonDoc d2 = JsonDoc::parse(d.to_json());
    CHECK(d == d2);
  }

  // Control characters must come back out as \u escapes.
  JsonDoc ctl = JsonDoc::object();
  ctl.add_field("c", JsonDoc::string(std::string{'a', '\x01', 'b'}));
  CHECK(ctl.to_json() == "{\"c\":\"a\\u0001b\"}");
  CHECK(JsonDoc::parse(ctl.to_json()) == ctl);
}

TEST_CASE("duplicate keys are rejected") {
  CHECK_THROWS_AS(JsonDoc::parse(R"({"a":1,"a":2})"), FormatError);
  JsonDoc obj = JsonDoc::object();
  obj.add_field("x", JsonDoc::integer(1));
  CHECK_THROWS_AS(obj.add_field("x", JsonDoc::integer(2)), FormatError);
}

TEST_CASE("uint64 beyond int64 range is rejected") {
  CHECK_THROWS_AS(JsonDoc::parse("{\"v\":18446744073709551615}"), FormatError);
  CHECK(JsonDoc::parse("{\"v\":9223372036854775807}")
            .find("v")
            ->as_int() == INT64_MAX);
}

TEST_CASE("int64 and double with equal value are distinct") {
  CHECK(JsonDoc::integer(1) != JsonDoc::number(1.0));
}

TEST_CASE("path parse and print") {
  PathExpr p = PathExpr::parse("$.dependents[0].name");
  REQUIRE(p.steps().size() == 3);
  CHECK(p.steps()[0].kind == PathStep::Kind::Field);
  CHECK(p.steps()[1].kind == PathStep::Kind::Index);
  CHECK(p.steps()[2].name == "name");
  CHECK(p.to_string() == "dependents[0].name");

  PathExpr w = PathExpr::parse("entities.hashtags[*].text");
  CHECK(w.has_wildcard());
  CHECK(w.wildcard_pos() == 2);

  CHECK_THROWS_AS(PathExpr::parse(""), FormatError);
  CHECK_THROWS_AS(PathExpr::parse("a[*].b[*]"), FormatError);
  CHECK_THROWS_AS(PathExpr::parse("a[x]"), FormatError);
}

TEST_CASE("navigate oracle semantics") {
  JsonDoc d = JsonDoc::parse(
      R"({"a":{"b":[{"c":1},{"c":2},{"d":3}]},"s":"x","arr":[10,20]})");

  CHECK(*navigate(d, PathExpr::parse("s")) == JsonDoc::string("x"));
  CHECK(*navigate(d, PathExpr::parse("a.b[1].c")) == JsonDoc::integer(2));
  CHECK(!navigate(d, PathExpr::parse("a.zzz")));
  CHECK(!navigate(d, PathExpr::parse("s.b")));       // field off a scalar
  CHECK(!navigate(d, PathExpr::parse("arr[5]")));    // out of range
  CHECK(!navigate(d, PathExpr::parse("a[0]")));      // index into object

  // Wildcard collects matches in item order, skipping items without the field.
  JsonDoc got = *navigate(d, PathExpr::parse("a.b[*].c"));
  REQUIRE(got.is_array());
  REQUIRE(got.item_count() == 2);
  CHECK(got.item(0) == JsonDoc::integer(1));
  CHECK(got.item(1) == JsonDoc::integer(2));

  // Wildcard over a non-array is MISSING; over an array with no matches it is
  // an empty array.
  CHECK(!navigate(d, PathExpr::parse("a[*]")));
  CHECK(navigate(d, PathExpr::parse("a.b[*].zz"))->item_count() == 0);

  // Aligned navigation keeps one slot per item.
  auto aligned = navigate_aligned(d, PathExpr::parse("a.b[*].c"));
  REQUIRE(aligned.has_value());
  REQUIRE(aligned->size() == 3);
  CHECK((*aligned)[0].has_value());
  CHECK(!(*aligned)[2].has_value());
  CHECK(!navigate_aligned(d, PathExpr::parse("zz[*].c")).has_value());
}
