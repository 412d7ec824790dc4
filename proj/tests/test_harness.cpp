#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinlab/harness.hpp"

using namespace spinlab;

namespace {

const char* const kChainConfig = R"(
# three site chain pinned to an all-zero collar
[model]
dim = 1
box = 3
alphabet = 2
kind = ising
beta = 0.3
boundary = 0

[sweep]
count = 2
eps = 0.05 0.2
seed = 1

[tolerances]
identity = 1e-9
inequality = 1e-9
transport = 1e-6

[run]
suite = all
)";

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

std::string parse_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& error) {
    return error.what();
  }
  return "";
}

const CheckRow* find_row(const Report& report, const std::string& name,
                         int sweep_index) {
  for (const CheckRow& row : report.rows)
    if (row.name == name && row.sweep_index == sweep_index) return &row;
  return nullptr;
}

std::string strip_timings(const std::string& doc) {
  auto cut = doc.find("\"timings\"");
  REQUIRE(cut != std::string::npos);
  return doc.substr(0, cut);
}

}  // namespace

TEST_CASE("parse_config reads every section") {
  RunConfig config = parse_config(kChainConfig);
  CHECK(config.model.dim == 1);
  CHECK(config.model.box == std::vector<int>{3});
  CHECK(config.model.alphabet == 2);
  CHECK(config.model.kind == "ising");
  CHECK(config.model.beta == doctest::Approx(0.3));
  CHECK(config.model.boundary == "0");
  CHECK(config.sweep.count == 2);
  CHECK(config.sweep.eps == std::vector<double>{0.05, 0.2});
  CHECK(config.sweep.seed == 1);
  CHECK(config.tolerances.identity == doctest::Approx(1e-9));
  CHECK(config.tolerances.transport == doctest::Approx(1e-6));
  CHECK(config.suite == "all");
}

TEST_CASE("parse_config keeps the documented defaults on empty input") {
  RunConfig config = parse_config("");
  CHECK(config.model.dim == 1);
  CHECK(config.model.box == std::vector<int>{3});
  CHECK(config.model.alphabet == 2);
  CHECK(config.model.kind == "ising");
  CHECK(config.model.boundary == "free");
  CHECK(config.sweep.count == 4);
  CHECK(config.sweep.seed == 0);
  CHECK(config.suite == "all");
  CHECK(config.block_side == 0);
}

TEST_CASE("parse_config names the offending line and key") {
  std::string msg = parse_error("[model]\ndim = 1\nbeta = fast\n");
  CHECK(contains(msg, "line 3"));
  CHECK(contains(msg, "beta"));

  msg = parse_error("[model]\nspeed = 3\n");
  CHECK(contains(msg, "line 2"));
  CHECK(contains(msg, "speed"));

  CHECK(contains(parse_error("[engine]\n"), "line 1"));
  CHECK(contains(parse_error("dim = 1\n"), "before any section"));
  CHECK(contains(parse_error("[model]\ndim 1\n"), "key = value"));
  CHECK(contains(parse_error("[tolerances]\nidentity = 0\n"), "positive"));
  CHECK(contains(parse_error("[sweep]\neps = 1.5\n"), "[0, 1)"));
  CHECK(contains(parse_error("[run]\nsuite = everything\n"), "suite"));
  CHECK(contains(parse_error("[model]\nbox = 0\n"), "positive"));
}

TEST_CASE("parse_config cross checks fields at the end") {
  CHECK_THROWS_AS(parse_config("[model]\ndim = 2\nbox = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nalphabet = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nboundary = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nboundary = maybe\n"), ConfigError);
  CHECK_NOTHROW(
      parse_config("[model]\nkind = potts\nalphabet = 3\nboundary = 2\n"));
}

TEST_CASE("load_config rejects a missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/run.cfg"), ConfigError);
}

TEST_CASE("build_model honours boundary and geometry") {
  ModelConfig free_chain;
  free_chain.box = {3};
  LatticeModel open = build_model(free_chain);
  CHECK(open.collar() == nullptr);
  CHECK(open.box().size() == 3);

  ModelConfig pinned = free_chain;
  pinned.boundary = "0";
  LatticeModel closed = build_model(pinned);
  REQUIRE(closed.collar() != nullptr);
  CHECK(closed.collar()->size() == 2);

  ModelConfig plane;
  plane.dim = 2;
  plane.box = {2, 2};
  plane.kind = "potts";
  plane.alphabet = 3;
  LatticeModel square = build_model(plane);
  CHECK(square.box().size() == 4);
  CHECK(square.box().dim() == 2);

  ModelConfig bad = plane;
  bad.box = {2};
  CHECK_THROWS_AS(build_model(bad), ConfigError);
}

TEST_CASE("a product reference passes theorem1 with the unit constant") {
  RunConfig config;
  config.model.beta = 0.0;
  config.sweep.count = 3;
  config.suite = "theorem1";
  Report report = run(config);
  CHECK(report.all_pass());
  CHECK(report.skips() == 0);
  CHECK(report.rows.size() == 7);
  CHECK(report.constants.at("transport_constant") == doctest::Approx(1.0));
  CHECK(report.constants.at("dobrushin_norm") == doctest::Approx(0.0));
  REQUIRE(find_row(report, "dobrushin_condition", -1) != nullptr);
  for (int s = 0; s < 3; ++s) {
    REQUIRE(find_row(report, "entropy_tv_form", s) != nullptr);
    CHECK(find_row(report, "entropy_tv_form", s)->status == "pass");
    REQUIRE(find_row(report, "entropy_divergence_form", s) != nullptr);
  }
}

TEST_CASE("the full suite on a pinned chain passes every row") {
  Report report = run(parse_config(kChainConfig));
  CHECK(report.suite == "all");
  CHECK(report.rows.size() == 29);
  CHECK(report.all_pass());
  CHECK(report.skips() == 0);
  CHECK(report.constants.count("alpha") == 1);
  CHECK(report.constants.count("theta") == 1);
  CHECK(report.constants.count("mixing_constant") == 1);
  CHECK(report.constants.at("dobrushin_norm") < 1.0);
  CHECK(
      std::is_sorted(report.rows.begin(), report.rows.end(),
                     [](const CheckRow& a, const CheckRow& b) {
                       return std::tie(a.name, a.sweep_index) <
                              std::tie(b.name, b.sweep_index);
                     }));
  const CheckRow* entry = find_row(report, "cube_entry_bound", -1);
  REQUIRE(entry != nullptr);
  CHECK(entry->slack <= 0.0);
}

TEST_CASE("a free boundary reports the block rows as skipped") {
  RunConfig config;
  config.model.beta = 0.3;
  config.sweep.count = 1;
  config.suite = "all";
  Report report = run(config);
  CHECK(report.rows.size() == 17);
  CHECK(report.failures() == 0);
  CHECK(report.skips() == 6);
  CHECK(report.all_pass());
  for (const CheckRow& row : report.rows)
    if (row.status == "skip") {
      CHECK(row.sweep_index == -1);
      CHECK(!row.note.empty());
    }
  const CheckRow* blocks = find_row(report, "block_decomposition_lower", -1);
  REQUIRE(blocks != nullptr);
  CHECK(blocks->status == "skip");
}

TEST_CASE("zero tolerances turn float dust into failures") {
  RunConfig config;
  config.model.beta = 0.3;
  config.sweep.count = 1;
  config.suite = "corollaries";
  config.tolerances = {0.0, 0.0, 0.0};
  Report report = run(config);
  const CheckRow* stationarity = find_row(report, "sweep_stationarity", -1);
  REQUIRE(stationarity != nullptr);
  CHECK(stationarity->lhs > 0.0);
  CHECK(stationarity->status == "fail");
  CHECK(!report.all_pass());
}

TEST_CASE("strong coupling is reported as skipped rather than passed") {
  RunConfig config;
  config.model.beta = 1.5;
  config.sweep.count = 2;
  config.suite = "theorem1";
  Report report = run(config);
  CHECK(report.constants.at("dobrushin_norm") >= 1.0);
  CHECK(report.constants.count("transport_constant") == 0);
  CHECK(report.rows.size() == 3);
  for (const CheckRow& row : report.rows) CHECK(row.status == "skip");
  CHECK(report.all_pass());
  CHECK(report.skips() == 3);
}

TEST_CASE("json renders are byte stable apart from the timing block") {
  RunConfig config = parse_config(kChainConfig);
  Report first = run(config);
  Report second = run(config);
  std::string a = report_render(first, "json");
  std::string b = report_render(second, "json");
  CHECK(strip_timings(a) == strip_timings(b));

  nlohmann::json doc = nlohmann::json::parse(a);
  CHECK(doc["version"] == "v1");
  CHECK(doc["suite"] == "all");
  CHECK(doc["checks"].size() == first.rows.size());
  CHECK(doc["summary"]["all_pass"] == true);
  CHECK(doc["summary"]["failed"] == 0);
  CHECK(doc["model"]["beta"] == doctest::Approx(0.3));
  CHECK(doc["constants"].contains("alpha"));
  CHECK(doc["timings"].contains("elapsed_seconds"));
}

TEST_CASE("csv renders one line per row plus a header") {
  Report report = run(parse_config(kChainConfig));
  std::string csv = report_render(report, "csv");
  CHECK(csv.rfind("name,ref,sweep,lhs,rhs,slack,tol,status,note\n", 0) == 0);
  std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == report.rows.size() + 1);
}

TEST_CASE("text render carries the verdict") {
  Report report = run(parse_config(kChainConfig));
  std::string text = report_render(report, "text");
  CHECK(contains(text, "constants:"));
  CHECK(contains(text, "-> PASS"));
  CHECK(contains(text, "dobrushin_condition"));
}

TEST_CASE("report_render rejects unknown formats") {
  Report report;
  CHECK_THROWS_AS(report_render(report, "yaml"), std::invalid_argument);
}

TEST_CASE("run rejects inconsistent programmatic configs") {
  RunConfig bad_suite;
  bad_suite.suite = "everything";
  CHECK_THROWS_AS(run(bad_suite), ConfigError);

  RunConfig bad_count;
  bad_count.sweep.count = 0;
  CHECK_THROWS_AS(run(bad_count), ConfigError);

  RunConfig bad_eps;
  bad_eps.sweep.eps.clear();
  CHECK_THROWS_AS(run(bad_eps), ConfigError);
}
