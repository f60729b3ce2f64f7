#include <doctest.h>

#include <cmath>
#include <cstdlib>

#include "exorder/serialize.hpp"
#include "test_support.hpp"

using namespace exorder;

TEST_CASE("fmt17 round-trips doubles") {
  for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 5e-324}) CHECK(std::strtod(fmt17(x).c_str(), nullptr) == x);
  Json j = {{"a", INFINITY}, {"b", -INFINITY}, {"c", 0.1}};
  Json back = Json::parse(dump_json(j));
  CHECK(std::isinf(json_double(back["a"])));
  CHECK(json_double(back["b"]) < 0);
  CHECK(json_double(back["c"]) == 0.1);
}

TEST_CASE("snapshot round trip is byte-identical") {
  const MeasureTree& tree = testing::desk_tree();
  Json snap = tree_snapshot(tree, "abc", 16, 7);
  std::string text = dump_json(snap);
  SnapshotCheck ok = validate_snapshot(Json::parse(text));
  CHECK(ok.ok);
  MeasureTree again = tree_from_snapshot(Json::parse(text));
  CHECK(dump_json(tree_snapshot(again, "abc", 16, 7)) == text);
}

TEST_CASE("a corrupted weight names the violated invariant") {
  const MeasureTree& tree = testing::desk_tree();
  Json snap = Json::parse(dump_json(tree_snapshot(tree, "abc", 4, 7)));
  double w = json_double(snap["nu_bar"]["log_weights"][0]);
  snap["nu_bar"]["log_weights"][0] = w + 0.01;
  SnapshotCheck c = validate_snapshot(snap);
  CHECK_FALSE(c.ok);
  CHECK(c.invariant == "nu_bar-normalized");
  CHECK_THROWS_AS(tree_from_snapshot(snap), std::runtime_error);

  Json snap2 = Json::parse(dump_json(tree_snapshot(tree, "abc", 4, 7)));
  snap2["header"]["schema"] = "something-else";
  CHECK(validate_snapshot(snap2).invariant == "schema");
}

TEST_CASE("schedule and block measure round trip") {
  const MeasureTree& tree = testing::desk_tree();
  Json s = to_json(tree.schedule());
  CHECK(dump_json(to_json(schedule_from_json(s))) == dump_json(s));
  Json b = to_json(tree.nu_bar());
  CHECK(dump_json(to_json(block_measure_from_json(b))) == dump_json(b));
}

TEST_CASE("csv tables carry a schema and hash preamble") {
  CsvTable t("exorder.test", "h123", {"x", "y"});
  t.row({CsvTable::num(0.5), CsvTable::num(2.0)});
  std::string s = t.str();
  CHECK(s.rfind("# schema=exorder.test version=1\n# config_hash=h123\n", 0) == 0);
  CHECK(s.find("x,y\n") != std::string::npos);
  CHECK(s.find("0.5") != std::string::npos);
}
