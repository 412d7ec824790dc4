#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "spinlab/dobrushin.hpp"
#include "spinlab/harness.hpp"
#include "spinlab/measures.hpp"
#include "spinlab/mixing.hpp"
#include "spinlab/models.hpp"
#include "spinlab/transport.hpp"

namespace {

using spinlab::ConfigError;

// 0 pass, 1 check failure, 2 usage or config error, 3 solver failure.
constexpr int kUsageError = 2;
constexpr int kSolverFailure = 3;

void write_out(const std::string& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc;
    return;
  }
  std::ofstream file(out);
  if (!file) throw ConfigError("cannot write '" + out + "'");
  file << doc;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Renders a flat name -> value table in any of the report formats.
std::string render_table(const std::map<std::string, double>& values,
                         const std::string& format, const char* label) {
  if (format == "json") {
    nlohmann::ordered_json doc;
    for (const auto& [name, value] : values) doc[name] = value;
    return doc.dump(2) + "\n";
  }
  if (format == "csv") {
    std::string out = std::string(label) + ",value\n";
    for (const auto& [name, value] : values)
      out += name + ',' + fmt(value) + '\n';
    return out;
  }
  if (format == "text") {
    std::string out;
    for (const auto& [name, value] : values)
      out += name + " = " + fmt(value) + '\n';
    return out;
  }
  throw std::invalid_argument("unknown format '" + format + "'");
}

int run_verify(const std::string& config_path, const CLI::Option* suite_opt,
               const std::string& suite, const CLI::Option* seed_opt,
               std::uint64_t seed, const CLI::Option* tol_opt, double tol,
               const std::string& format, const std::string& out) {
  spinlab::RunConfig config = spinlab::load_config(config_path);
  if (suite_opt->count()) {
    if (!spinlab::valid_suite(suite))
      throw ConfigError("config: unknown suite '" + suite + "'");
    config.suite = suite;
  }
  if (seed_opt->count()) config.sweep.seed = seed;
  if (tol_opt->count()) {
    if (tol < 0.0) throw ConfigError("config: --tol must be nonnegative");
    config.tolerances.identity = tol;
    config.tolerances.inequality = tol;
    config.tolerances.transport = tol;
  }
  spinlab::Report report = spinlab::run(config);
  write_out(spinlab::report_render(report, format), out);
  return report.all_pass() ? 0 : 1;
}

int run_w2(const std::string& left_path, const std::string& right_path,
           double tol, const std::string& format, const std::string& out) {
  spinlab::Distribution left = spinlab::load_json(left_path);
  spinlab::Distribution right = spinlab::load_json(right_path);
  spinlab::W2Options options;
  options.tol = tol;
  options.keep_coupling = false;
  spinlab::W2Result result = spinlab::w2_distance(left, right, options);
  write_out(render_table({{"value", result.value},
                          {"squared", result.value * result.value},
                          {"gap", result.gap},
                          {"lower_bound", result.lower_bound},
                          {"iterations", static_cast<double>(result.iterations)}},
                         format, "quantity"),
            out);
  return 0;
}

int run_phi(const std::string& config_path, int budget,
            const CLI::Option* seed_opt, std::uint64_t seed,
            const std::string& format, const std::string& out) {
  spinlab::RunConfig config = spinlab::load_config(config_path);
  spinlab::LatticeModel model = spinlab::build_model(config.model);
  spinlab::PhiEstimateOptions options;
  options.budget = budget;
  if (seed_opt->count()) options.seed = seed;
  spinlab::MixingProfile profile = spinlab::estimate_phi(model, options);
  if (format == "json") {
    nlohmann::ordered_json doc;
    doc["exhaustive"] = profile.exhaustive;
    doc["evaluations"] = profile.evaluations;
    nlohmann::ordered_json bins = nlohmann::ordered_json::object();
    for (const auto& [r, value] : profile.empirical)
      bins[std::to_string(r)] = value;
    doc["bins"] = bins;
    write_out(doc.dump(2) + "\n", out);
    return 0;
  }
  std::map<std::string, double> table;
  for (const auto& [r, value] : profile.empirical)
    table["phi(" + std::to_string(r) + ")"] = value;
  table["evaluations"] = static_cast<double>(profile.evaluations);
  table["exhaustive"] = profile.exhaustive ? 1.0 : 0.0;
  write_out(render_table(table, format, "bin"), out);
  return 0;
}

int run_constants(const std::string& config_path, int block,
                  const std::string& format, const std::string& out) {
  spinlab::RunConfig config = spinlab::load_config(config_path);
  spinlab::LatticeModel model = spinlab::build_model(config.model);
  spinlab::Distribution q = model.joint();
  std::map<std::string, double> table;
  table["alpha"] = spinlab::alpha_constant(q);
  table["states"] = static_cast<double>(q.size());
  spinlab::DobrushinReport dob = spinlab::dobrushin_report(q);
  table["dobrushin_norm"] = dob.norm;
  table["dobrushin_norm_l1"] = dob.norm_l1;
  table["transport_constant"] = dob.constant;
  if (model.collar() != nullptr) {
    spinlab::MixingProfile profile = spinlab::estimate_phi(model);
    const int side = block > 0 ? block : 0;
    try {
      spinlab::MixingConstant mixing = spinlab::mixing_constant(
          profile, config.model.dim, side, table["alpha"],
          config.model.alphabet);
      table["block_side"] = mixing.m;
      table["theta"] = mixing.theta.theta;
      table["phi_norm"] = mixing.theta.norm;
      table["mixing_constant"] = mixing.value;
    } catch (const std::domain_error&) {
      const int shown = side > 0 ? side : 1;
      spinlab::ThetaParams theta =
          spinlab::theta_m(profile, config.model.dim, shown);
      table["block_side"] = shown;
      table["theta"] = theta.theta;
      table["phi_norm"] = theta.norm;
    }
  }
  write_out(render_table(table, format, "constant"), out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact checks of transport entropy bounds on finite spin systems"};
  app.require_subcommand(1);

  std::string v_config, v_suite, v_format = "text", v_out;
  std::uint64_t v_seed = 0;
  double v_tol = 0.0;
  auto* verify = app.add_subcommand("verify", "Run a check suite from a config file");
  verify->add_option("--config", v_config, "run configuration file")->required();
  auto* v_suite_opt = verify->add_option(
      "--suite", v_suite,
      "suite override: theorem1|theorem2|corollaries|lemmas|aux|theorem3|all");
  auto* v_seed_opt = verify->add_option("--seed", v_seed, "sweep seed override");
  auto* v_tol_opt =
      verify->add_option("--tol", v_tol, "override every tolerance");
  verify->add_option("--format", v_format, "output format: text|json|csv");
  verify->add_option("--out", v_out, "write the report to this file");

  std::string w_left, w_right, w_format = "text", w_out;
  double w_tol = 1e-7;
  auto* w2cmd = app.add_subcommand(
      "w2", "Transport distance between two saved measures");
  w2cmd->add_option("left", w_left, "json measure file")->required();
  w2cmd->add_option("right", w_right, "json measure file")->required();
  w2cmd->add_option("--tol", w_tol, "certified optimality gap");
  w2cmd->add_option("--format", w_format, "output format: text|json|csv");
  w2cmd->add_option("--out", w_out, "write the result to this file");

  std::string p_config, p_format = "text", p_out;
  int p_budget = 256;
  std::uint64_t p_seed = 0;
  auto* phicmd =
      app.add_subcommand("phi", "Decay profile of a configured model");
  phicmd->add_option("--config", p_config, "run configuration file")->required();
  phicmd->add_option("--budget", p_budget, "sample budget when not exhaustive");
  auto* p_seed_opt = phicmd->add_option("--seed", p_seed, "sampling seed");
  phicmd->add_option("--format", p_format, "output format: text|json|csv");
  phicmd->add_option("--out", p_out, "write the profile to this file");

  std::string c_config, c_format = "text", c_out;
  int c_block = 0;
  auto* constcmd = app.add_subcommand(
      "constants", "Coupling norms and transport constants of a model");
  constcmd->add_option("--config", c_config, "run configuration file")->required();
  constcmd->add_option("--block", c_block, "cube side, 0 scans for one");
  constcmd->add_option("--format", c_format, "output format: text|json|csv");
  constcmd->add_option("--out", c_out, "write the table to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*verify)
      return run_verify(v_config, v_suite_opt, v_suite, v_seed_opt, v_seed,
                        v_tol_opt, v_tol, v_format, v_out);
    if (*w2cmd) return run_w2(w_left, w_right, w_tol, w_format, w_out);
    if (*phicmd)
      return run_phi(p_config, p_budget, p_seed_opt, p_seed, p_format, p_out);
    if (*constcmd) return run_constants(c_config, c_block, c_format, c_out);
  } catch (const ConfigError& error) {
    std::cerr << error.what() << '\n';
    return kUsageError;
  } catch (const spinlab::SolverError& error) {
    std::cerr << error.what() << '\n';
    return kSolverFailure;
  } catch (const std::invalid_argument& error) {
    std::cerr << error.what() << '\n';
    return kUsageError;
  } catch (const std::runtime_error& error) {
    std::cerr << error.what() << '\n';
    return kUsageError;
  } catch (const std::exception& error) {
    std::cerr << error.what() << '\n';
    return kSolverFailure;
  }
  return 0;
}
