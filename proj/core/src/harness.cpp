#include "spinlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <iomanip>
#include <optional>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

#include "spinlab/dobrushin.hpp"
#include "spinlab/measures.hpp"
#include "spinlab/mixing.hpp"
#include "spinlab/samplers.hpp"

namespace spinlab {

namespace {

const char* const kSuites[] = {"theorem1",    "theorem2", "corollaries",
                               "lemmas",      "aux",      "theorem3",
                               "all"};

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail_at(int line, const std::string& message) {
  throw ConfigError("config line " + std::to_string(line) + ": " + message);
}

long long int_value(const std::string& value, int line,
                    const std::string& key) {
  std::size_t used = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (value.empty() || used != value.size())
    fail_at(line, "key '" + key + "' needs an integer, got '" + value + "'");
  return out;
}

std::uint64_t seed_value(const std::string& value, int line,
                         const std::string& key) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (value.empty() || used != value.size())
    fail_at(line, "key '" + key + "' needs a nonnegative integer, got '" +
                      value + "'");
  return out;
}

double double_value(const std::string& value, int line,
                    const std::string& key) {
  std::size_t used = 0;
  double out = 0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (value.empty() || used != value.size())
    fail_at(line, "key '" + key + "' needs a number, got '" + value + "'");
  return out;
}

std::vector<std::string> split_words(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::string fmt_full(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CheckRow bound_row(std::string name, std::string ref, int index,
                   const BoundCheck& check, double tol) {
  CheckRow row;
  row.name = std::move(name);
  row.ref = std::move(ref);
  row.sweep_index = index;
  row.lhs = check.lhs;
  row.rhs = check.rhs;
  row.slack = check.slack();
  row.tol = tol;
  row.status = check.holds(tol) ? "pass" : "fail";
  return row;
}

CheckRow skip_row(std::string name, std::string ref, int index,
                  std::string note) {
  CheckRow row;
  row.name = std::move(name);
  row.ref = std::move(ref);
  row.sweep_index = index;
  row.note = std::move(note);
  return row;
}

std::string box_text(const std::vector<int>& box) {
  std::string out;
  for (std::size_t j = 0; j < box.size(); ++j) {
    if (j) out += 'x';
    out += std::to_string(box[j]);
  }
  return out;
}

}  // namespace

bool valid_suite(const std::string& suite) {
  for (const char* s : kSuites)
    if (suite == s) return true;
  return false;
}

RunConfig parse_config(const std::string& text) {
  RunConfig config;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string entry = trim(raw);
    if (entry.empty()) continue;
    if (entry.front() == '[') {
      if (entry.back() != ']')
        fail_at(line, "section header is missing the closing bracket");
      section = trim(entry.substr(1, entry.size() - 2));
      if (section != "model" && section != "sweep" &&
          section != "tolerances" && section != "run")
        fail_at(line, "unknown section [" + section + "]");
      continue;
    }
    auto eq = entry.find('=');
    if (eq == std::string::npos) fail_at(line, "expected key = value");
    std::string key = trim(entry.substr(0, eq));
    std::string value = trim(entry.substr(eq + 1));
    if (key.empty()) fail_at(line, "expected key = value");
    if (section.empty())
      fail_at(line, "key '" + key + "' appears before any section header");

    if (section == "model") {
      if (key == "dim") {
        config.model.dim = static_cast<int>(int_value(value, line, key));
        if (config.model.dim < 1) fail_at(line, "dim must be at least 1");
      } else if (key == "box") {
        config.model.box.clear();
        for (const std::string& word : split_words(value)) {
          int extent = static_cast<int>(int_value(word, line, key));
          if (extent < 1) fail_at(line, "box extents must be positive");
          config.model.box.push_back(extent);
        }
        if (config.model.box.empty())
          fail_at(line, "box needs at least one extent");
      } else if (key == "alphabet") {
        config.model.alphabet = static_cast<int>(int_value(value, line, key));
        if (config.model.alphabet < 2)
          fail_at(line, "alphabet needs at least two symbols");
      } else if (key == "kind") {
        if (value != "ising" && value != "potts")
          fail_at(line, "kind must be ising or potts, got '" + value + "'");
        config.model.kind = value;
      } else if (key == "beta") {
        config.model.beta = double_value(value, line, key);
      } else if (key == "field") {
        config.model.field = double_value(value, line, key);
      } else if (key == "couplings") {
        config.model.couplings = double_value(value, line, key);
      } else if (key == "range") {
        config.model.range = static_cast<int>(int_value(value, line, key));
        if (config.model.range < 1) fail_at(line, "range must be at least 1");
      } else if (key == "boundary") {
        config.model.boundary = value;
      } else if (key == "seed") {
        config.model.seed = seed_value(value, line, key);
      } else {
        fail_at(line, "unknown key '" + key + "' in [model]");
      }
    } else if (section == "sweep") {
      if (key == "count") {
        config.sweep.count = static_cast<int>(int_value(value, line, key));
        if (config.sweep.count < 1) fail_at(line, "count must be positive");
      } else if (key == "eps") {
        config.sweep.eps.clear();
        for (const std::string& word : split_words(value)) {
          double eps = double_value(word, line, key);
          if (eps < 0.0 || eps >= 1.0)
            fail_at(line, "eps values must lie in [0, 1)");
          config.sweep.eps.push_back(eps);
        }
        if (config.sweep.eps.empty())
          fail_at(line, "eps needs at least one value");
      } else if (key == "seed") {
        config.sweep.seed = seed_value(value, line, key);
      } else {
        fail_at(line, "unknown key '" + key + "' in [sweep]");
      }
    } else if (section == "tolerances") {
      double tol = double_value(value, line, key);
      if (!(tol > 0.0)) fail_at(line, "tolerances must be positive");
      if (key == "identity")
        config.tolerances.identity = tol;
      else if (key == "inequality")
        config.tolerances.inequality = tol;
      else if (key == "transport")
        config.tolerances.transport = tol;
      else
        fail_at(line, "unknown key '" + key + "' in [tolerances]");
    } else {  // run
      if (key == "suite") {
        if (!valid_suite(value))
          fail_at(line, "unknown suite '" + value + "'");
        config.suite = value;
      } else if (key == "block") {
        config.block_side = static_cast<int>(int_value(value, line, key));
        if (config.block_side < 0)
          fail_at(line, "block must be nonnegative");
      } else if (key == "w2_tol") {
        double tol = double_value(value, line, key);
        if (!(tol > 0.0)) fail_at(line, "w2_tol must be positive");
        config.w2.tol = tol;
      } else {
        fail_at(line, "unknown key '" + key + "' in [run]");
      }
    }
  }

  if (static_cast<int>(config.model.box.size()) != config.model.dim)
    throw ConfigError("config: box lists " +
                      std::to_string(config.model.box.size()) +
                      " extents but dim is " + std::to_string(config.model.dim));
  if (config.model.kind == "ising" && config.model.alphabet != 2)
    throw ConfigError("config: the ising kind needs alphabet = 2");
  if (config.model.boundary != "free") {
    std::size_t used = 0;
    int symbol = -1;
    try {
      symbol = std::stoi(config.model.boundary, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (config.model.boundary.empty() || used != config.model.boundary.size())
      throw ConfigError("config: boundary must be 'free' or a symbol index");
    if (symbol < 0 || symbol >= config.model.alphabet)
      throw ConfigError("config: boundary symbol " + std::to_string(symbol) +
                        " is outside the alphabet");
  }
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

LatticeModel build_model(const ModelConfig& model) {
  if (model.dim < 1) throw ConfigError("config: dim must be at least 1");
  if (static_cast<int>(model.box.size()) != model.dim)
    throw ConfigError("config: box lists " +
                      std::to_string(model.box.size()) +
                      " extents but dim is " + std::to_string(model.dim));
  std::vector<std::pair<int, int>> ranges;
  for (int extent : model.box) {
    if (extent < 1) throw ConfigError("config: box extents must be positive");
    ranges.push_back({1, extent});
  }
  SiteSet sites = SiteSet::box(ranges);

  PairPotential potential;
  if (model.kind == "ising")
    potential.kind = PairPotential::Kind::ising;
  else if (model.kind == "potts")
    potential.kind = PairPotential::Kind::potts;
  else
    throw ConfigError("config: unknown model kind '" + model.kind + "'");
  potential.range = model.range;
  potential.beta = model.beta;
  potential.coupling = model.couplings;
  potential.field = model.field;

  if (model.boundary == "free")
    return LatticeModel(Alphabet(model.alphabet), sites, potential);
  std::size_t used = 0;
  int symbol = -1;
  try {
    symbol = std::stoi(model.boundary, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (model.boundary.empty() || used != model.boundary.size())
    throw ConfigError("config: boundary must be 'free' or a symbol index");
  return LatticeModel(Alphabet(model.alphabet), sites, potential,
                      std::max(1, potential.range), symbol);
}

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const CheckRow& row : rows) n += row.status == "fail";
  return n;
}

std::size_t Report::skips() const {
  std::size_t n = 0;
  for (const CheckRow& row : rows) n += row.status == "skip";
  return n;
}

Report run(const RunConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (!valid_suite(config.suite))
    throw ConfigError("config: unknown suite '" + config.suite + "'");
  if (config.sweep.count < 1)
    throw ConfigError("config: sweep count must be positive");
  if (config.sweep.eps.empty())
    throw ConfigError("config: sweep needs at least one eps value");

  Report report;
  report.suite = config.suite;
  report.model = config.model;
  report.sweep_seed = config.sweep.seed;
  report.sweep_count = config.sweep.count;

  const LatticeModel model = build_model(config.model);
  const Distribution q = model.joint();
  const double alpha = alpha_constant(q);
  report.constants["alpha"] = alpha;
  report.constants["states"] = static_cast<double>(q.size());

  const auto want = [&](const char* suite) {
    return config.suite == "all" || config.suite == suite;
  };
  const ToleranceConfig& tol = config.tolerances;
  W2Options w2 = config.w2;
  w2.keep_coupling = false;

  std::vector<Distribution> sweep;
  sweep.reserve(static_cast<std::size_t>(config.sweep.count));
  for (int s = 0; s < config.sweep.count; ++s) {
    const double eps = config.sweep.eps[s % config.sweep.eps.size()];
    sweep.push_back(perturb(q, eps, config.sweep.seed + s));
  }

  const bool need_dob =
      want("theorem1") || want("theorem2") || want("corollaries");
  std::optional<DobrushinReport> dob;
  if (need_dob) {
    dob.emplace(dobrushin_report(q));
    report.constants["dobrushin_norm"] = dob->norm;
    if (dob->satisfied) report.constants["transport_constant"] = dob->constant;
  }
  const bool contracting = dob && dob->satisfied;

  const bool collar = model.collar() != nullptr;
  const bool need_profile = (want("aux") || want("theorem3")) && collar;
  std::optional<MixingProfile> profile;
  std::optional<ThetaParams> theta;
  int side = std::max(1, config.block_side);
  if (need_profile) {
    profile.emplace(estimate_phi(model));
    if (config.block_side == 0) {
      side = 1;
      for (int m = 1; m <= 16; ++m) {
        if (theta_m(*profile, config.model.dim, m).usable) {
          side = m;
          break;
        }
      }
    }
    theta = theta_m(*profile, config.model.dim, side);
    report.constants["block_side"] = side;
    report.constants["theta"] = theta->theta;
    report.constants["phi_norm"] = theta->norm;
  }

  std::optional<MixingConstant> mixing;
  std::string mixing_note;
  if (want("theorem3") && collar) {
    try {
      mixing = mixing_constant(*profile, config.model.dim, config.block_side,
                               alpha, config.model.alphabet);
      report.constants["mixing_constant"] = mixing->value;
      report.constants["mixing_side"] = mixing->m;
    } catch (const std::domain_error& error) {
      mixing_note = error.what();
    }
  }

  std::vector<CheckRow> rows;
  const std::string needs_contraction =
      "needs a coupling matrix norm below one";
  const std::string no_collar = "free boundary leaves no collar to measure";

  if (need_dob) {
    CheckRow row;
    row.name = "dobrushin_condition";
    row.ref = "Thm2";
    row.sweep_index = -1;
    row.lhs = dob->norm;
    row.rhs = 1.0;
    row.slack = dob->norm - 1.0;
    row.tol = 0.0;
    if (contracting) {
      row.status = "pass";
    } else {
      row.status = "skip";
      row.note = "coupling matrix norm " + fmt_short(dob->norm) +
                 " is not below one; dependent checks are skipped";
    }
    rows.push_back(std::move(row));
  }

  if (!contracting) {
    if (want("theorem1")) {
      rows.push_back(
          skip_row("entropy_tv_form", "Eq(1.4)a", -1, needs_contraction));
      rows.push_back(skip_row("entropy_divergence_form", "Eq(1.4)b", -1,
                              needs_contraction));
    }
    if (want("theorem2"))
      rows.push_back(
          skip_row("transport_condition", "Eq(1.3)", -1, needs_contraction));
    if (want("corollaries")) {
      rows.push_back(
          skip_row("entropy_contraction", "Eq(1.5)", -1, needs_contraction));
      rows.push_back(
          skip_row("log_sobolev_form", "Cor2", -1, needs_contraction));
    }
  }

  if (want("corollaries")) {
    const auto kernel = random_scan_gibbs(q);
    rows.push_back(bound_row("sweep_stationarity", "Eq(1.5)", -1,
                             {kernel->stationarity_residual(q), 0.0},
                             tol.identity));
  }

  if (want("aux")) {
    if (!collar) {
      rows.push_back(skip_row("cube_entry_bound", "Eq(4.2.9)", -1, no_collar));
      rows.push_back(skip_row("cube_matrix_norm", "Eq(4.2.11)", -1, no_collar));
      rows.push_back(
          skip_row("block_decomposition_lower", "Eq(4.2.4)a", -1, no_collar));
      rows.push_back(
          skip_row("block_decomposition_upper", "Eq(4.2.4)b", -1, no_collar));
      rows.push_back(
          skip_row("block_contraction", "Eq(4.2.12)", -1, no_collar));
    } else {
      const CubeInfluence influence =
          cube_influence(*profile, side, model.box());
      rows.push_back(bound_row(
          "cube_entry_bound", "Eq(4.2.9)", -1,
          {std::max(influence.entry_slack, influence.count_slack), 0.0},
          tol.identity));
      rows.push_back(bound_row("cube_matrix_norm", "Eq(4.2.11)", -1,
                               {influence.norm, influence.norm_bound},
                               tol.inequality));
      if (theta->usable) {
        const BlockContraction contraction = block_contraction_sweep(
            q, *profile, side, config.sweep.count, config.sweep.seed, w2);
        rows.push_back(bound_row("block_contraction", "Eq(4.2.12)", -1,
                                 {contraction.worst_ratio, contraction.rate},
                                 tol.transport));
      } else {
        const std::string hot = "theta " + fmt_short(theta->theta) +
                                " at side " + std::to_string(side) +
                                " is not below one";
        rows.push_back(
            skip_row("block_decomposition_lower", "Eq(4.2.4)a", -1, hot));
        rows.push_back(
            skip_row("block_decomposition_upper", "Eq(4.2.4)b", -1, hot));
        rows.push_back(skip_row("block_contraction", "Eq(4.2.12)", -1, hot));
      }
    }
  }

  if (want("theorem3")) {
    if (!collar)
      rows.push_back(skip_row("mixing_entropy", "Thm3", -1, no_collar));
    else if (!mixing)
      rows.push_back(skip_row("mixing_entropy", "Thm3", -1, mixing_note));
  }

  const bool run_theorem1 = want("theorem1") && contracting;
  const bool run_theorem2 = want("theorem2") && contracting;
  const bool run_corollaries = want("corollaries") && contracting;
  const bool run_lemmas = want("lemmas");
  const bool run_blocks = want("aux") && collar && theta->usable;
  const bool run_mixing = want("theorem3") && mixing.has_value();

  const auto evaluate_instance = [&](int s) {
    const Distribution& p = sweep[static_cast<std::size_t>(s)];
    std::vector<CheckRow> out;
    if (run_theorem1) {
      const EntropyTensorization et =
          entropy_tensorization(p, q, dob->constant);
      if (std::isnan(et.tv_form)) {
        out.push_back(skip_row("entropy_tv_form", "Eq(1.4)a", s,
                               "a reference conditional is undefined"));
        out.push_back(skip_row("entropy_divergence_form", "Eq(1.4)b", s,
                               "a reference conditional is undefined"));
      } else {
        out.push_back(bound_row("entropy_tv_form", "Eq(1.4)a", s,
                                et.versus_tv(), tol.inequality));
        out.push_back(bound_row("entropy_divergence_form", "Eq(1.4)b", s,
                                {et.tv_form, et.divergence_form},
                                tol.inequality));
      }
    }
    if (run_theorem2) {
      SweepOptions opts;
      opts.w2 = w2;
      opts.seed = config.sweep.seed + 7919 * static_cast<std::uint64_t>(s);
      const SweepResult res = transport_bound_sweep(p, q, dob->constant, {}, opts);
      out.push_back(bound_row("transport_condition", "Eq(1.3)", s,
                              {res.worst.lhs, res.worst.rhs}, tol.transport));
    }
    if (run_corollaries) {
      out.push_back(bound_row("entropy_contraction", "Eq(1.5)", s,
                              entropy_contraction_check(p, q, dob->constant),
                              tol.inequality));
      out.push_back(bound_row("log_sobolev_form", "Cor2", s,
                              log_sobolev_check(p, q, dob->constant),
                              tol.inequality));
    }
    if (run_lemmas) {
      out.push_back(bound_row("hellinger_domination", "Lemma1", s,
                              tv_sq_vs_affinity(p, q), tol.inequality));
      out.push_back(
          bound_row("pinsker", "Pinsker", s, pinsker(p, q), tol.inequality));
      out.push_back(bound_row("reverse_pinsker", "Eq(2.1)", s,
                              reverse_pinsker(p, q), tol.inequality));
      out.push_back(bound_row("tv_tensorization", "Lemma4", s,
                              tv_tensorization_check(p, q), tol.inequality));
    }
    if (run_blocks) {
      const BlockDecomposition bd =
          block_decomposition_check(p, q, *profile, side, w2);
      out.push_back(bound_row("block_decomposition_lower", "Eq(4.2.4)a", s,
                              bd.first(), tol.transport));
      out.push_back(bound_row("block_decomposition_upper", "Eq(4.2.4)b", s,
                              bd.second(), tol.transport));
    }
    if (run_mixing) {
      const EntropyTensorization et =
          entropy_tensorization(p, q, mixing->value);
      out.push_back(bound_row("mixing_entropy", "Thm3", s, et.versus_tv(),
                              tol.inequality));
    }
    return out;
  };

  const std::size_t items = sweep.size();
  std::vector<std::vector<CheckRow>> per_item(items);
  const std::size_t workers = std::min<std::size_t>(
      items, std::max(1u, std::thread::hardware_concurrency()));
  std::atomic<std::size_t> cursor{0};
  std::vector<std::future<void>> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.push_back(std::async(std::launch::async, [&] {
      for (;;) {
        const std::size_t s = cursor.fetch_add(1);
        if (s >= items) break;
        per_item[s] = evaluate_instance(static_cast<int>(s));
      }
    }));
  for (auto& worker : pool) worker.get();
  for (auto& item : per_item)
    for (CheckRow& row : item) rows.push_back(std::move(row));

  std::stable_sort(rows.begin(), rows.end(),
                   [](const CheckRow& a, const CheckRow& b) {
                     if (a.name != b.name) return a.name < b.name;
                     return a.sweep_index < b.sweep_index;
                   });
  report.rows = std::move(rows);
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  return report;
}

std::string report_render(const Report& report, const std::string& format) {
  if (format == "json") {
    nlohmann::ordered_json doc;
    doc["version"] = report.version;
    doc["suite"] = report.suite;
    doc["model"] = {{"dim", report.model.dim},
                    {"box", report.model.box},
                    {"alphabet", report.model.alphabet},
                    {"kind", report.model.kind},
                    {"beta", report.model.beta},
                    {"field", report.model.field},
                    {"couplings", report.model.couplings},
                    {"range", report.model.range},
                    {"boundary", report.model.boundary},
                    {"seed", report.model.seed}};
    doc["sweep"] = {{"count", report.sweep_count}, {"seed", report.sweep_seed}};
    nlohmann::ordered_json constants = nlohmann::ordered_json::object();
    for (const auto& [name, value] : report.constants) constants[name] = value;
    doc["constants"] = constants;
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    for (const CheckRow& row : report.rows) {
      nlohmann::ordered_json item;
      item["name"] = row.name;
      item["ref"] = row.ref;
      item["sweep"] = row.sweep_index;
      item["lhs"] = row.lhs;
      item["rhs"] = row.rhs;
      item["slack"] = row.slack;
      item["tol"] = row.tol;
      item["status"] = row.status;
      item["note"] = row.note;
      checks.push_back(std::move(item));
    }
    doc["checks"] = checks;
    doc["summary"] = {
        {"rows", report.rows.size()},
        {"passed", report.rows.size() - report.failures() - report.skips()},
        {"failed", report.failures()},
        {"skipped", report.skips()},
        {"all_pass", report.all_pass()}};
    doc["timings"] = {{"elapsed_seconds", report.elapsed_seconds}};
    return doc.dump(2) + "\n";
  }

  if (format == "csv") {
    std::string out = "name,ref,sweep,lhs,rhs,slack,tol,status,note\n";
    for (const CheckRow& row : report.rows) {
      out += csv_field(row.name) + ',' + csv_field(row.ref) + ',' +
             std::to_string(row.sweep_index) + ',' + fmt_full(row.lhs) + ',' +
             fmt_full(row.rhs) + ',' + fmt_full(row.slack) + ',' +
             fmt_full(row.tol) + ',' + row.status + ',' +
             csv_field(row.note) + '\n';
    }
    return out;
  }

  if (format == "text") {
    std::ostringstream out;
    out << "suite " << report.suite << " on " << report.model.kind << " dim "
        << report.model.dim << " box " << box_text(report.model.box)
        << " alphabet " << report.model.alphabet << " beta "
        << fmt_short(report.model.beta) << " boundary "
        << report.model.boundary << "\n";
    out << "sweep count " << report.sweep_count << " seed "
        << report.sweep_seed << "\n";
    out << "constants:\n";
    for (const auto& [name, value] : report.constants)
      out << "  " << name << " = " << fmt_short(value) << "\n";
    std::size_t width = 4;
    for (const CheckRow& row : report.rows)
      width = std::max(width, row.name.size());
    out << "checks:\n";
    for (const CheckRow& row : report.rows) {
      out << "  " << std::left << std::setw(static_cast<int>(width) + 2)
          << row.name << std::setw(11) << row.ref;
      if (row.sweep_index < 0)
        out << std::setw(7) << "model";
      else
        out << std::setw(7) << row.sweep_index;
      out << std::left << std::setw(6) << row.status;
      if (row.status == "skip")
        out << " " << row.note;
      else
        out << " lhs " << fmt_short(row.lhs) << "  rhs " << fmt_short(row.rhs)
            << "  slack " << fmt_short(row.slack);
      out << "\n";
    }
    const std::size_t failed = report.failures();
    const std::size_t skipped = report.skips();
    out << report.rows.size() << " rows: "
        << (report.rows.size() - failed - skipped) << " passed, " << failed
        << " failed, " << skipped << " skipped -> "
        << (report.all_pass() ? "PASS" : "FAIL") << "\n";
    out << "elapsed " << fmt_short(report.elapsed_seconds) << "s\n";
    return out.str();
  }

  throw std::invalid_argument("report_render: unknown format '" + format +
                              "'");
}

}  // namespace spinlab
