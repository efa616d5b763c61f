#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "../tools/cli.hpp"
#include "fbl/error.hpp"
#include "support.hpp"

using fbl::cli::run_cli;

namespace {

constexpr double kGoldenRelTol = 1e-9;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> v;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) v.push_back(line);
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> v;
  std::istringstream in(line);
  for (std::string cell; std::getline(in, cell, ',');) v.push_back(cell);
  return v;
}

bool cell_matches(const std::string& a, const std::string& b) {
  if (a == b) return true;
  char* end_a = nullptr;
  char* end_b = nullptr;
  const double x = std::strtod(a.c_str(), &end_a);
  const double y = std::strtod(b.c_str(), &end_b);
  if (*end_a != '\0' || *end_b != '\0') return false;
  return std::abs(x - y) <= kGoldenRelTol * std::max({std::abs(x), std::abs(y), 1e-300});
}

// Meta and header lines must match exactly; numeric cells within tolerance.
void check_golden(const std::string& name, const std::vector<std::string>& args) {
  std::ifstream in(std::filesystem::path(FBL_GOLDEN_DIR) / name);
  REQUIRE(in.good());
  std::stringstream expect;
  expect << in.rdbuf();
  const Run r = run(args);
  REQUIRE(r.code == 0);
  const auto got = lines(r.out), want = lines(expect.str());
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (want[i].rfind('#', 0) == 0) {
      CHECK(got[i] == want[i]);
      continue;
    }
    const auto g = split(got[i]), w = split(want[i]);
    REQUIRE(g.size() == w.size());
    for (std::size_t c = 0; c < g.size(); ++c) {
      INFO(name << " line " << i + 1 << ": " << got[i] << " vs " << want[i]);
      CHECK(cell_matches(g[c], w[c]));
    }
  }
}

}  // namespace

TEST_CASE("grid parsing") {
  const auto g = fbl::cli::parse_grid("0:1:0.25");
  REQUIRE(g.size() == 5);
  CHECK(g.back() == doctest::Approx(1.0));
  CHECK(fbl::cli::parse_grid("0.1,0.3").size() == 2);
  CHECK_THROWS_AS(fbl::cli::parse_grid("1:0:0.1"), fbl::InvalidArgument);
  CHECK_THROWS_AS(fbl::cli::parse_grid("0:1:0"), fbl::InvalidArgument);
  CHECK_THROWS_AS(fbl::cli::parse_grid("a,b"), fbl::InvalidArgument);
}

TEST_CASE("rate-distortion command") {
  const Run r = run({"rd", "--uniform-binary", "--D", "0.11"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(std::abs(j["rate"].get<double>() - (1.0 - fbl::testing::h2(0.11))) <= 1e-9);
}

TEST_CASE("simulation output is reproducible and thread-count independent") {
  const std::vector<std::string> args{"simulate", "wak", "--trials", "2000", "--seed", "7"};
  setenv("FBL_THREADS", "1", 1);
  const Run a = run(args);
  setenv("FBL_THREADS", "4", 1);
  const Run b = run(args);
  unsetenv("FBL_THREADS");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  const auto j = nlohmann::json::parse(a.out);
  CHECK(j["trials"] == 2000);
  CHECK(j["config"]["seed"] == 7);
}

TEST_CASE("bound evaluation echoes the derived parameters") {
  const Run r = run({"bound", "eval", "--kind", "wak", "--auto-params", "--n", "8", "--log-m", "6",
                     "--log-l", "4"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["params"]["gamma_b"].get<double>() == doctest::Approx(3.0));
  CHECK(j["params"]["gamma_c"].get<double>() == doctest::Approx(1.0));
  CHECK(j["params"]["delta"].get<double>() == doctest::Approx(0.125));
  const Run over = run({"bound", "eval", "--kind", "wak", "--auto-params", "--n", "8",
                        "--gamma-b", "2.5"});
  CHECK(nlohmann::json::parse(over.out)["params"]["gamma_b"].get<double>() == 2.5);
}

TEST_CASE("exit codes") {
  CHECK(run({"region", "wak", "--preset", "dsbs", "--alpha", "0.11", "--n", "100", "--eps", "0.1",
             "--beta-grid", "0.5:0:0.1"})
            .code == fbl::cli::kExitConfig);
  CHECK(run({"rd", "--uniform-binary", "--D", "0.1", "--bogus"}).code == fbl::cli::kExitConfig);
  CHECK(run({"bound", "eval", "--kind", "wak", "--preset", "biased", "--p", "0.3", "--alpha", "0.11",
             "--beta", "0.2", "--auto-params", "--n", "1000"})
            .code == fbl::cli::kExitNumeric);
  CHECK(run({"--help"}).code == fbl::cli::kExitOk);
}

TEST_CASE("instance file input") {
  const auto path = std::filesystem::temp_directory_path() / "fbl_cli_instance.json";
  {
    std::ofstream f(path);
    f << R"({"kind": "wak", "p_xy": {"dims": [2, 2], "probs": [0.445, 0.055, 0.055, 0.445]},
             "test_channels": [{"dims": [2, 2], "probs": [0.8, 0.2, 0.2, 0.8]}]})";
  }
  const Run file = run({"bound", "eval", "--kind", "wak", "--instance", path.string(),
                        "--auto-params", "--n", "6"});
  const Run preset = run({"bound", "eval", "--kind", "wak", "--preset", "dsbs", "--alpha", "0.11",
                          "--beta", "0.2", "--auto-params", "--n", "6"});
  std::filesystem::remove(path);
  REQUIRE(file.code == 0);
  REQUIRE(preset.code == 0);
  CHECK(nlohmann::json::parse(file.out)["total"] == nlohmann::json::parse(preset.out)["total"]);
}

TEST_CASE("stuck-at rate table columns") {
  const Run r = run({"region", "gp", "--preset", "stuck-at", "--p", "0.1", "--alpha", "0.11",
                     "--eps", "0.01", "--n", "5000"});
  REQUIRE(r.code == 0);
  const auto ls = lines(r.out);
  std::size_t header = 0;
  while (header < ls.size() && ls[header].rfind('#', 0) == 0) ++header;
  REQUIRE(header + 1 < ls.size());
  CHECK(ls[header] == "n,rate_gp,rate_decoder_si,capacity");
  const auto row = split(ls[header + 1]);
  CHECK(std::stod(row[1]) < std::stod(row[2]));
  CHECK(std::stod(row[2]) < std::stod(row[3]));
}

TEST_CASE("golden region outputs") {
  check_golden("dsbs_union.csv", {"region", "wak", "--preset", "dsbs", "--alpha", "0.11", "--n",
                                  "10000", "--eps", "0.1", "--beta-grid", "0:0.5:0.05",
                                  "--drop-logterm", "--points", "21"});
  check_golden("biased_corner.csv", {"region", "wak", "--preset", "biased", "--p", "0.3", "--alpha",
                                     "0.11", "--n", "1000", "--eps", "0.1", "--variant", "corner",
                                     "--points", "21"});
  check_golden("stuck_at.csv", {"region", "gp", "--preset", "stuck-at", "--p", "0.1", "--alpha",
                                "0.11", "--eps", "0.001", "--n-grid", "1000:10000:1000",
                                "--drop-logterm"});
}
