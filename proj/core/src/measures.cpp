#include "spinlab/measures.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "spinlab/numeric.hpp"

namespace spinlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_same_space(const Distribution& r, const Distribution& s,
                      const char* who) {
  if (!r.space().same_shape(s.space())) {
    throw std::invalid_argument(std::string(who) + ": spaces differ");
  }
}

// Normalizes in place to a compensated total of one. Two passes keep the
// final drift at a few ulps regardless of length.
void normalize_exact(Eigen::VectorXd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    KahanSum total;
    for (Eigen::Index i = 0; i < w.size(); ++i) total.add(w[i]);
    if (!(total.value() > 0.0)) {
      throw std::invalid_argument("normalize: total mass not positive");
    }
    w /= total.value();
  }
}

}  // namespace

Distribution::Distribution(std::shared_ptr<const ConfigSpace> space,
                           Eigen::VectorXd w)
    : space_(std::move(space)), w_(std::move(w)) {
  if (!space_) {
    throw std::invalid_argument("Distribution: null space");
  }
  if (static_cast<std::uint64_t>(w_.size()) != space_->num_states()) {
    throw std::invalid_argument("Distribution: weight count mismatch");
  }
  KahanSum total;
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (w_[i] < 0.0) {
      throw std::invalid_argument("Distribution: negative weight");
    }
    total.add(w_[i]);
  }
  if (std::abs(total.value() - 1.0) > kNormalizationTol) {
    throw std::invalid_argument("Distribution: weights do not sum to one");
  }
}

Distribution Distribution::uniform(std::shared_ptr<const ConfigSpace> space) {
  const auto n = static_cast<Eigen::Index>(space->num_states());
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return Distribution(std::move(space), std::move(w));
}

Distribution Distribution::point_mass(std::shared_ptr<const ConfigSpace> space,
                                      std::uint64_t id) {
  if (id >= space->num_states()) {
    throw std::out_of_range("Distribution::point_mass: id out of range");
  }
  Eigen::VectorXd w =
      Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->num_states()));
  w[static_cast<Eigen::Index>(id)] = 1.0;
  return Distribution(std::move(space), std::move(w));
}

double Distribution::min_positive() const {
  double m = kInf;
  for (Eigen::Index i = 0; i < w_.size(); ++i) {
    if (w_[i] > 0.0) m = std::min(m, w_[i]);
  }
  return m;
}

double tv_distance(const Distribution& r, const Distribution& s) {
  check_same_space(r, s, "tv_distance");
  KahanSum acc;
  for (Eigen::Index i = 0; i < r.weights().size(); ++i) {
    acc.add(std::abs(r.weights()[i] - s.weights()[i]));
  }
  return 0.5 * acc.value();
}

double relative_entropy(const Distribution& r, const Distribution& s) {
  check_same_space(r, s, "relative_entropy");
  KahanSum acc;
  for (Eigen::Index i = 0; i < r.weights().size(); ++i) {
    const double a = r.weights()[i];
    if (a == 0.0) continue;
    const double b = s.weights()[i];
    if (b == 0.0) return kInf;
    acc.add(a * std::log(a / b));
  }
  return acc.value();
}

double hellinger_affinity(const Distribution& r, const Distribution& s) {
  check_same_space(r, s, "hellinger_affinity");
  KahanSum acc;
  for (Eigen::Index i = 0; i < r.weights().size(); ++i) {
    acc.add(std::sqrt(r.weights()[i] * s.weights()[i]));
  }
  return acc.value();
}

double hellinger_distance(const Distribution& r, const Distribution& s) {
  check_same_space(r, s, "hellinger_distance");
  KahanSum acc;
  for (Eigen::Index i = 0; i < r.weights().size(); ++i) {
    const double d = std::sqrt(r.weights()[i]) - std::sqrt(s.weights()[i]);
    acc.add(d * d);
  }
  return std::sqrt(acc.value());
}

BoundCheck tv_sq_vs_affinity(const Distribution& r, const Distribution& s) {
  const double tv = tv_distance(r, s);
  const double a = hellinger_affinity(r, s);
  return {tv * tv, 1.0 - a * a};
}

BoundCheck pinsker(const Distribution& r, const Distribution& s) {
  const double tv = tv_distance(r, s);
  return {tv * tv, 0.5 * relative_entropy(r, s)};
}

BoundCheck reverse_pinsker(const Distribution& r, const Distribution& s) {
  const double d = relative_entropy(r, s);
  if (!std::isfinite(d)) {
    throw std::domain_error(
        "reverse_pinsker: r not absolutely continuous w.r.t. s");
  }
  const double alpha_s = s.min_positive();
  const double tv = tv_distance(r, s);
  return {d, (4.0 / alpha_s) * tv * tv};
}

Distribution marginal(const Distribution& p, const IndexSet& I) {
  const ConfigSpace& space = p.space();
  const std::size_t n = space.num_sites();
  for (std::size_t t = 0; t < I.size(); ++t) {
    if (I[t] >= n || (t > 0 && I[t] <= I[t - 1])) {
      throw std::invalid_argument("marginal: positions must be sorted and valid");
    }
  }
  if (I.empty()) {
    throw std::invalid_argument("marginal: empty target");
  }
  auto sub_space = std::make_shared<const ConfigSpace>(
      space.alphabet(), space.sites().subset(I));

  const auto m = static_cast<Eigen::Index>(sub_space->num_states());
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd comp = Eigen::VectorXd::Zero(m);

  // Position of each full site inside I, or npos.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> pos(n, npos);
  for (std::size_t t = 0; t < I.size(); ++t) pos[I[t]] = t;

  const int base = space.alphabet().size();
  std::vector<int> digit(n, 0);
  std::uint64_t sub_id = 0;
  const std::uint64_t total = space.num_states();
  for (std::uint64_t id = 0; id < total; ++id) {
    const double x = p.weights()[static_cast<Eigen::Index>(id)];
    auto& s = sums[static_cast<Eigen::Index>(sub_id)];
    auto& c = comp[static_cast<Eigen::Index>(sub_id)];
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;

    std::size_t j = 0;
    while (j < n) {
      if (digit[j] + 1 < base) {
        ++digit[j];
        if (pos[j] != npos) sub_id += sub_space->stride(pos[j]);
        break;
      }
      if (pos[j] != npos) {
        sub_id -= static_cast<std::uint64_t>(digit[j]) *
                  sub_space->stride(pos[j]);
      }
      digit[j] = 0;
      ++j;
    }
  }
  normalize_exact(sums);
  return Distribution(std::move(sub_space), std::move(sums));
}

ConditionalSlice conditional(const Distribution& p, const IndexSet& I,
                             const std::vector<int>& context) {
  const ConfigSpace& space = p.space();
  const IndexSet comp = space.sites().complement(I);
  if (context.size() != comp.size()) {
    throw std::invalid_argument("conditional: context size mismatch");
  }
  std::uint64_t base_id = 0;
  for (std::size_t c = 0; c < comp.size(); ++c) {
    if (context[c] < 0 || context[c] >= space.alphabet().size()) {
      throw std::invalid_argument("conditional: context symbol out of range");
    }
    base_id += static_cast<std::uint64_t>(context[c]) * space.stride(comp[c]);
  }

  auto sub_space = std::make_shared<const ConfigSpace>(
      space.alphabet(), space.sites().subset(I));
  const auto m = static_cast<Eigen::Index>(sub_space->num_states());

  Eigen::VectorXd w(m);
  KahanSum total;
  std::vector<int> sub(I.size(), 0);
  const int base = space.alphabet().size();
  std::uint64_t full_id = base_id;
  for (Eigen::Index sid = 0; sid < m; ++sid) {
    const double x = p.weights()[static_cast<Eigen::Index>(full_id)];
    w[sid] = x;
    total.add(x);

    std::size_t t = 0;
    while (t < I.size()) {
      if (sub[t] + 1 < base) {
        ++sub[t];
        full_id += space.stride(I[t]);
        break;
      }
      full_id -= static_cast<std::uint64_t>(sub[t]) * space.stride(I[t]);
      sub[t] = 0;
      ++t;
    }
  }

  ConditionalSlice slice;
  slice.target = I;
  slice.context = context;
  slice.context_mass = total.value();
  if (total.value() > 0.0) {
    normalize_exact(w);
    slice.law.emplace(std::move(sub_space), std::move(w));
  }
  return slice;
}

namespace {

// Walks every fiber of site i: outer loops enumerate the context, the
// inner loop the fiber. fn(base_id) sees the id with symbol 0 at i.
template <typename Fn>
void for_each_fiber(const ConfigSpace& space, std::size_t i, Fn&& fn) {
  const auto base = static_cast<std::uint64_t>(space.alphabet().size());
  const std::uint64_t lo_count = space.stride(i);
  const std::uint64_t hi_count = space.num_states() / (lo_count * base);
  for (std::uint64_t hi = 0; hi < hi_count; ++hi) {
    for (std::uint64_t lo = 0; lo < lo_count; ++lo) {
      fn(hi * lo_count * base + lo);
    }
  }
}

}  // namespace

double avg_site_divergence(const Distribution& p, const Distribution& q,
                           std::size_t i) {
  check_same_space(p, q, "avg_site_divergence");
  const ConfigSpace& space = p.space();
  if (i >= space.num_sites()) {
    throw std::out_of_range("avg_site_divergence: site out of range");
  }
  const int base = space.alphabet().size();
  const std::uint64_t stride = space.stride(i);
  KahanSum acc;
  bool infinite = false;
  for_each_fiber(space, i, [&](std::uint64_t base_id) {
    if (infinite) return;
    double wp = 0.0, wq = 0.0;
    for (int x = 0; x < base; ++x) {
      const auto id = static_cast<Eigen::Index>(base_id + x * stride);
      wp += p.weights()[id];
      wq += q.weights()[id];
    }
    if (wp == 0.0) return;
    if (wq == 0.0) {
      infinite = true;
      return;
    }
    double d = 0.0;
    for (int x = 0; x < base; ++x) {
      const auto id = static_cast<Eigen::Index>(base_id + x * stride);
      const double a = p.weights()[id] / wp;
      if (a == 0.0) continue;
      const double b = q.weights()[id] / wq;
      if (b == 0.0) {
        infinite = true;
        return;
      }
      d += a * std::log(a / b);
    }
    acc.add(wp * d);
  });
  return infinite ? kInf : acc.value();
}

double avg_site_tv_sq(const Distribution& p, const Distribution& q,
                      std::size_t i) {
  check_same_space(p, q, "avg_site_tv_sq");
  const ConfigSpace& space = p.space();
  if (i >= space.num_sites()) {
    throw std::out_of_range("avg_site_tv_sq: site out of range");
  }
  const int base = space.alphabet().size();
  const std::uint64_t stride = space.stride(i);
  KahanSum acc;
  bool undefined = false;
  for_each_fiber(space, i, [&](std::uint64_t base_id) {
    if (undefined) return;
    double wp = 0.0, wq = 0.0;
    for (int x = 0; x < base; ++x) {
      const auto id = static_cast<Eigen::Index>(base_id + x * stride);
      wp += p.weights()[id];
      wq += q.weights()[id];
    }
    if (wp == 0.0) return;
    if (wq == 0.0) {
      undefined = true;
      return;
    }
    double l1 = 0.0;
    for (int x = 0; x < base; ++x) {
      const auto id = static_cast<Eigen::Index>(base_id + x * stride);
      l1 += std::abs(p.weights()[id] / wp - q.weights()[id] / wq);
    }
    const double tv = 0.5 * l1;
    acc.add(wp * tv * tv);
  });
  if (undefined) {
    throw std::domain_error(
        "avg_site_tv_sq: q-conditional undefined on a p-positive context");
  }
  return acc.value();
}

double sum_avg_site_divergence(const Distribution& p, const Distribution& q) {
  KahanSum acc;
  for (std::size_t i = 0; i < p.space().num_sites(); ++i) {
    const double d = avg_site_divergence(p, q, i);
    if (!std::isfinite(d)) return kInf;
    acc.add(d);
  }
  return acc.value();
}

double sum_avg_site_tv_sq(const Distribution& p, const Distribution& q) {
  KahanSum acc;
  for (std::size_t i = 0; i < p.space().num_sites(); ++i) {
    acc.add(avg_site_tv_sq(p, q, i));
  }
  return acc.value();
}

double chain_expansion_residual(const Distribution& p, const Distribution& q) {
  const double d = relative_entropy(p, q);
  if (!std::isfinite(d)) {
    throw std::domain_error(
        "chain_expansion_residual: p not absolutely continuous w.r.t. q");
  }
  const std::size_t n = p.space().num_sites();
  const int base = p.space().alphabet().size();
  KahanSum first, second;
  for (std::size_t i = 0; i < n; ++i) {
    const IndexSet self{i};
    const Distribution pi = marginal(p, self);
    const Distribution qi = marginal(q, self);
    first.add(relative_entropy(pi, qi));

    if (n == 1) continue;
    const IndexSet rest = p.space().sites().complement(self);
    for (int y = 0; y < base; ++y) {
      const double w = pi[static_cast<std::uint64_t>(y)];
      if (w == 0.0) continue;
      const ConditionalSlice pc = conditional(p, rest, {y});
      const ConditionalSlice qc = conditional(q, rest, {y});
      if (!pc.defined() || !qc.defined()) {
        throw std::domain_error("chain_expansion_residual: empty conditional");
      }
      second.add(w * relative_entropy(*pc.law, *qc.law));
    }
  }
  const double nn = static_cast<double>(n);
  return std::abs(d - first.value() / nn - second.value() / nn);
}

double alpha_constant(const Distribution& q) {
  const ConfigSpace& space = q.space();
  const int base = space.alphabet().size();
  double alpha = kInf;
  for (std::size_t i = 0; i < space.num_sites(); ++i) {
    const std::uint64_t stride = space.stride(i);
    for_each_fiber(space, i, [&](std::uint64_t base_id) {
      double total = 0.0;
      for (int x = 0; x < base; ++x) {
        total += q.weights()[static_cast<Eigen::Index>(base_id + x * stride)];
      }
      if (total == 0.0) return;
      for (int x = 0; x < base; ++x) {
        const double w =
            q.weights()[static_cast<Eigen::Index>(base_id + x * stride)];
        if (w > 0.0) alpha = std::min(alpha, w / total);
      }
    });
  }
  if (!std::isfinite(alpha)) {
    throw std::logic_error("alpha_constant: empty support");
  }
  return alpha;
}

LocalSpecEnsemble::LocalSpecEnsemble(Distribution joint)
    : joint_(std::move(joint)) {}

ConditionalSlice LocalSpecEnsemble::block_conditional(
    const IndexSet& I, const std::vector<int>& context) const {
  return conditional(joint_, I, context);
}

void save_json(const Distribution& p, const std::string& path) {
  nlohmann::ordered_json j;
  j["alphabet"] = p.space().alphabet().size();
  j["dim"] = p.space().sites().dim();
  j["sites"] = p.space().sites().sites();
  std::vector<double> w(p.weights().data(),
                        p.weights().data() + p.weights().size());
  j["weights"] = w;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

Distribution load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  const int alphabet = j.at("alphabet").get<int>();
  const int dim = j.at("dim").get<int>();
  auto sites = j.at("sites").get<std::vector<Site>>();
  auto weights = j.at("weights").get<std::vector<double>>();
  auto space = std::make_shared<const ConfigSpace>(
      Alphabet(alphabet), SiteSet(dim, std::move(sites)));
  Eigen::VectorXd w =
      Eigen::Map<Eigen::VectorXd>(weights.data(),
                                  static_cast<Eigen::Index>(weights.size()));
  return Distribution(std::move(space), std::move(w));
}

void save_binary(const Distribution& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_binary: cannot open " + path);
  out.write(reinterpret_cast<const char*>(p.weights().data()),
            static_cast<std::streamsize>(p.weights().size() * sizeof(double)));
}

Distribution load_binary(const std::string& path,
                         std::shared_ptr<const ConfigSpace> space) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_binary: cannot open " + path);
  const auto n = static_cast<Eigen::Index>(space->num_states());
  Eigen::VectorXd w(n);
  in.read(reinterpret_cast<char*>(w.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(n * sizeof(double))) {
    throw std::runtime_error("load_binary: file too short for space");
  }
  return Distribution(std::move(space), std::move(w));
}

}  // namespace spinlab
