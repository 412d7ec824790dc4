#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "spinlab/models.hpp"
#include "spinlab/transport.hpp"

namespace spinlab {

// Raised on malformed run configuration text; the message names the line
// and the offending key or section.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int dim = 1;
  std::vector<int> box = {3};  // extent per dimension, sites start at 1
  int alphabet = 2;
  std::string kind = "ising";  // ising | potts
  double beta = 0.0;
  double field = 0.0;
  double couplings = 1.0;
  int range = 1;
  std::string boundary = "free";  // "free" or a collar symbol index
  std::uint64_t seed = 0;
};

struct SweepConfig {
  int count = 4;
  std::vector<double> eps = {0.05, 0.2};  // perturbation sizes, cycled
  std::uint64_t seed = 0;
};

struct ToleranceConfig {
  double identity = 1e-9;    // combinatorial and closed form comparisons
  double inequality = 1e-9;  // exact-arithmetic inequality slacks
  double transport = 1e-6;   // rows that depend on solver output
};

struct RunConfig {
  ModelConfig model;
  SweepConfig sweep;
  ToleranceConfig tolerances;
  std::string suite = "all";
  int block_side = 0;  // cube side for the block suites; 0 scans for one
  W2Options w2;
};

// Parses the plain text key/value format with [model], [sweep],
// [tolerances], and [run] sections. Unknown keys, bad values, and
// nonpositive tolerances are rejected with line diagnostics.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

bool valid_suite(const std::string& suite);

LatticeModel build_model(const ModelConfig& model);

// One verified comparison. status is "pass" when slack <= tol, "fail"
// when it is not, and "skip" when the check does not apply to the model
// (the note says why and the numbers may be NaN).
struct CheckRow {
  std::string name;
  std::string ref;       // display tag of the statement being checked
  int sweep_index = -1;  // -1 marks model level rows
  double lhs = std::numeric_limits<double>::quiet_NaN();
  double rhs = std::numeric_limits<double>::quiet_NaN();
  double slack = std::numeric_limits<double>::quiet_NaN();
  double tol = 0.0;
  std::string status = "skip";
  std::string note;
};

struct Report {
  std::string version = "v1";
  std::string suite;
  ModelConfig model;
  std::uint64_t sweep_seed = 0;
  int sweep_count = 0;
  std::map<std::string, double> constants;
  std::vector<CheckRow> rows;  // sorted by name, then sweep index
  double elapsed_seconds = 0.0;

  std::size_t failures() const;
  std::size_t skips() const;
  bool all_pass() const { return failures() == 0; }
};

// Builds the model, draws the seeded perturbation sweep, evaluates the
// selected suite, and assembles the sorted report. Sweep items run on a
// small worker pool; assembly order does not depend on scheduling.
Report run(const RunConfig& config);

// format: json | csv | text. json is the canonical versioned schema and is
// byte stable for a fixed config and seed apart from the timings block.
std::string report_render(const Report& report, const std::string& format);

}  // namespace spinlab
