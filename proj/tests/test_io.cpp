#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fbl/error.hpp"
#include "fbl/io.hpp"

using namespace fbl;

TEST_CASE("pmf and channel parsing") {
  CHECK(pmf_from_json(Json::parse("[0.25, 0.75]"))[1] == 0.75);
  CHECK(pmf_from_json(Json::parse(R"({"probs": [1, 3], "renormalize": true})"))[0] == 0.25);
  CHECK_THROWS_AS(pmf_from_json(Json::parse("[0.2, 0.2]")), InvalidArgument);
  CHECK_THROWS_AS(pmf_from_json(Json::parse(R"({"probs": [1], "weights": [1]})")), InvalidArgument);
  const Channel w = channel_from_json(Json::parse(R"({"dims": [2, 2], "probs": [0.9, 0.1, 0.2, 0.8]})"));
  CHECK(w(1, 0) == 0.2);
  CHECK_THROWS_AS(channel_from_json(Json::parse(R"({"dims": [2, 2], "probs": [1, 0, 1]})")),
                  InvalidArgument);
}

TEST_CASE("instances survive a serialization round trip") {
  const Instance cases[] = {dsbs_wak_timeshared(0.11, 0.1, 0.3, 0.4), dsbs_wz(0.11, 0.2, 0.25),
                            stuck_at_gp(0.1, 0.11)};
  for (const Instance& inst : cases) {
    const Json j = to_json(inst);
    const Instance back = instance_from_json(Json::parse(j.dump()));
    CHECK(instance_hash(back) == instance_hash(inst));
    CHECK(to_json(back) == j);
  }
  CHECK(instance_hash(cases[0]) != instance_hash(cases[1]));
}

TEST_CASE("instance parsing rejects malformed input") {
  Json j = to_json(Instance(dsbs_wak(0.11, 0.2)));
  j["extra"] = 1;
  CHECK_THROWS_AS(instance_from_json(j), InvalidArgument);
  CHECK_THROWS_AS(instance_from_json(Json::parse(R"({"kind": "mac"})")), InvalidArgument);
  CHECK_THROWS_AS(instance_from_json(Json::parse("[1, 2]")), InvalidArgument);
}

TEST_CASE("hash is 64-bit FNV-1a") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
}

TEST_CASE("number formatting round-trips") {
  CHECK(format_double(100000.0) == "100000");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_double(std::nan("")) == "nan");
  for (double v : {1.0 / 3.0, 2.5e-300, 6.02e23, -0.11}) {
    CHECK(std::stod(format_double(v)) == v);
  }
}

TEST_CASE("region csv layout") {
  RegionCurve c;
  c.first_name = "R1";
  c.second_name = "R2";
  c.points = {{0.5, 1.0}, {0.75, 0.25}};
  c.n = 100;
  c.eps = 0.1;
  c.instance_id = "abc";
  c.construction = "cs";
  std::ostringstream out;
  write_region_csv(out, c, {{"seed", "3"}});
  CHECK(out.str() ==
        "# meta: instance=abc\n# meta: construction=cs\n# meta: n=100\n# meta: eps=0.1\n"
        "# meta: seed=3\nR1,R2\n0.5,1\n0.75,0.25\n");
}

TEST_CASE("report serialization") {
  BoundReport r;
  r.bound = "wak_cs";
  r.terms = {{"primary_prob", 0.25}, {"delta", std::numeric_limits<double>::infinity()}};
  r.evaluator = "exact";
  const Json j = to_json(r);
  CHECK(j["bound"] == "wak_cs");
  CHECK(j["terms"]["primary_prob"] == 0.25);
  CHECK(j["terms"]["delta"] == "inf");
  TrialStats s;
  s.trials = 10;
  s.errors = 2;
  CHECK(to_json(s)["errors"] == 2);
}
