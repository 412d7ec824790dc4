#include "spinlab/models.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "spinlab/numeric.hpp"

namespace spinlab {

namespace {

int l1_distance(const Site& a, const Site& b) {
  int d = 0;
  for (std::size_t nu = 0; nu < a.size(); ++nu) {
    d += std::abs(a[nu] - b[nu]);
  }
  return d;
}

// Collar of the box: every lattice site within Chebyshev distance `width`
// of the box but outside it, in box() enumeration order of the inflated
// bounding region.
SiteSet make_collar(const SiteSet& box, int width) {
  std::vector<std::pair<int, int>> ranges(box.dim());
  for (int nu = 0; nu < box.dim(); ++nu) {
    int lo = box.site(0)[nu];
    int hi = lo;
    for (const Site& s : box.sites()) {
      lo = std::min(lo, s[nu]);
      hi = std::max(hi, s[nu]);
    }
    ranges[nu] = {lo - width, hi + width};
  }
  std::vector<Site> collar_sites;
  const SiteSet inflated = SiteSet::box(ranges);
  for (const Site& s : inflated.sites()) {
    if (box.contains(s)) continue;
    int dist = std::numeric_limits<int>::max();
    for (const Site& b : box.sites()) {
      dist = std::min(dist, rho(s, b));
    }
    if (dist <= width) collar_sites.push_back(s);
  }
  return SiteSet(box.dim(), std::move(collar_sites));
}

double pair_energy(const PairPotential& pot, int alphabet, int xa, int xb) {
  if (pot.kind == PairPotential::Kind::ising) {
    const double sa = 2.0 * xa - 1.0;
    const double sb = 2.0 * xb - 1.0;
    return -pot.coupling * sa * sb;
  }
  (void)alphabet;
  return -pot.coupling * (xa == xb ? 1.0 : 0.0);
}

double field_energy(const PairPotential& pot, int x) {
  if (pot.kind == PairPotential::Kind::ising) {
    return -pot.field * (2.0 * x - 1.0);
  }
  return -pot.field * (x == 0 ? 1.0 : 0.0);
}

}  // namespace

LatticeModel::LatticeModel(Alphabet alphabet, SiteSet box,
                           PairPotential potential, int collar_width,
                           std::optional<int> boundary_symbol)
    : alphabet_(alphabet), box_(std::move(box)), potential_(potential) {
  if (potential_.range < 1) {
    throw std::invalid_argument("LatticeModel: interaction range must be >= 1");
  }
  if (potential_.kind == PairPotential::Kind::ising && alphabet_.size() != 2) {
    throw std::invalid_argument("LatticeModel: ising needs a binary alphabet");
  }
  if (collar_width < 0) {
    throw std::invalid_argument("LatticeModel: negative collar width");
  }
  if (collar_width > 0 && collar_width < potential_.range) {
    throw std::invalid_argument(
        "LatticeModel: collar narrower than the interaction range");
  }
  if (collar_width > 0) {
    collar_ = make_collar(box_, collar_width);
    const int fill = boundary_symbol.value_or(0);
    if (fill < 0 || fill >= alphabet_.size()) {
      throw std::invalid_argument("LatticeModel: boundary symbol out of range");
    }
    boundary_.assign(collar_->size(), fill);
  } else if (boundary_symbol.has_value()) {
    throw std::invalid_argument(
        "LatticeModel: boundary symbol given without a collar");
  }
  space_ = std::make_shared<const ConfigSpace>(alphabet_, box_);

  const std::size_t nb = box_.size();
  auto within = [&](const Site& a, const Site& b) {
    const int dist = potential_.adjacency == PairPotential::Adjacency::l1
                         ? l1_distance(a, b)
                         : rho(a, b);
    return dist >= 1 && dist <= potential_.range;
  };
  for (std::size_t a = 0; a < nb; ++a) {
    for (std::size_t b = a + 1; b < nb; ++b) {
      if (within(box_.site(a), box_.site(b))) pairs_.emplace_back(a, b);
    }
    if (collar_) {
      for (std::size_t c = 0; c < collar_->size(); ++c) {
        if (within(box_.site(a), collar_->site(c))) {
          pairs_.emplace_back(a, nb + c);
        }
      }
    }
  }
}

double LatticeModel::energy(const std::vector<int>& box_symbols,
                            const std::vector<int>& collar_symbols) const {
  const std::size_t nb = box_.size();
  double e = 0.0;
  for (const auto& [a, b] : pairs_) {
    const int xa = box_symbols[a];
    const int xb = b < nb ? box_symbols[b] : collar_symbols[b - nb];
    e += pair_energy(potential_, alphabet_.size(), xa, xb);
  }
  for (std::size_t a = 0; a < nb; ++a) {
    e += field_energy(potential_, box_symbols[a]);
  }
  return e;
}

Distribution LatticeModel::joint() const { return joint(boundary_); }

Distribution LatticeModel::joint(const std::vector<int>& collar_symbols) const {
  if (collar_symbols.size() != (collar_ ? collar_->size() : 0)) {
    throw std::invalid_argument("LatticeModel::joint: collar size mismatch");
  }
  const auto n = static_cast<Eigen::Index>(space_->num_states());
  std::vector<double> logw(static_cast<std::size_t>(n));
  std::vector<int> symbols;
  for (Eigen::Index id = 0; id < n; ++id) {
    space_->decode_into(static_cast<std::uint64_t>(id), symbols);
    logw[static_cast<std::size_t>(id)] =
        -potential_.beta * energy(symbols, collar_symbols);
  }
  const double log_z = log_sum_exp(logw);
  Eigen::VectorXd w(n);
  for (Eigen::Index id = 0; id < n; ++id) {
    w[id] = std::exp(logw[static_cast<std::size_t>(id)] - log_z);
  }
  KahanSum total;
  for (Eigen::Index id = 0; id < n; ++id) total.add(w[id]);
  w /= total.value();
  return Distribution(space_, std::move(w));
}

Distribution LatticeModel::block_conditional(const IndexSet& M,
                                             const std::vector<int>& rest) const {
  return block_conditional(M, rest, boundary_);
}

Distribution LatticeModel::block_conditional(
    const IndexSet& M, const std::vector<int>& rest,
    const std::vector<int>& collar_symbols) const {
  const IndexSet comp = box_.complement(M);
  if (rest.size() != comp.size()) {
    throw std::invalid_argument(
        "LatticeModel::block_conditional: context size mismatch");
  }
  if (collar_symbols.size() != (collar_ ? collar_->size() : 0)) {
    throw std::invalid_argument(
        "LatticeModel::block_conditional: collar size mismatch");
  }
  auto sub_space =
      std::make_shared<const ConfigSpace>(alphabet_, box_.subset(M));
  const auto n = static_cast<Eigen::Index>(sub_space->num_states());

  std::vector<int> symbols(box_.size());
  for (std::size_t c = 0; c < comp.size(); ++c) symbols[comp[c]] = rest[c];

  std::vector<double> logw(static_cast<std::size_t>(n));
  std::vector<int> sub;
  for (Eigen::Index id = 0; id < n; ++id) {
    sub_space->decode_into(static_cast<std::uint64_t>(id), sub);
    for (std::size_t t = 0; t < M.size(); ++t) symbols[M[t]] = sub[t];
    logw[static_cast<std::size_t>(id)] =
        -potential_.beta * energy(symbols, collar_symbols);
  }
  const double log_z = log_sum_exp(logw);
  Eigen::VectorXd w(n);
  for (Eigen::Index id = 0; id < n; ++id) {
    w[id] = std::exp(logw[static_cast<std::size_t>(id)] - log_z);
  }
  KahanSum total;
  for (Eigen::Index id = 0; id < n; ++id) total.add(w[id]);
  w /= total.value();
  return Distribution(std::move(sub_space), std::move(w));
}

Distribution random_spec(std::uint64_t seed,
                         std::shared_ptr<const ConfigSpace> space,
                         double min_mass) {
  if (min_mass < 0.0 || min_mass > 1.0) {
    throw std::invalid_argument("random_spec: min_mass outside [0, 1]");
  }
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(space->num_states());
  Eigen::VectorXd g(n);
  KahanSum gsum;
  for (Eigen::Index i = 0; i < n; ++i) {
    g[i] = rng.uniform();
    gsum.add(g[i]);
  }
  const double floor = min_mass / static_cast<double>(n);
  Eigen::VectorXd w(n);
  KahanSum total;
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = floor + (1.0 - min_mass) * (g[i] / gsum.value());
    total.add(w[i]);
  }
  w /= total.value();
  return Distribution(std::move(space), std::move(w));
}

Distribution product_spec(std::uint64_t seed,
                          std::shared_ptr<const ConfigSpace> space,
                          double min_mass) {
  if (min_mass < 0.0 || min_mass > 1.0) {
    throw std::invalid_argument("product_spec: min_mass outside [0, 1]");
  }
  Rng rng(seed);
  const int base = space->alphabet().size();
  const std::size_t sites = space->num_sites();
  std::vector<std::vector<double>> site_laws(sites);
  for (std::size_t j = 0; j < sites; ++j) {
    std::vector<double> m(static_cast<std::size_t>(base));
    double gsum = 0.0;
    for (double& x : m) {
      x = rng.uniform();
      gsum += x;
    }
    double msum = 0.0;
    for (double& x : m) {
      x = min_mass / base + (1.0 - min_mass) * (x / gsum);
      msum += x;
    }
    for (double& x : m) x /= msum;
    site_laws[j] = std::move(m);
  }
  const auto n = static_cast<Eigen::Index>(space->num_states());
  Eigen::VectorXd w(n);
  std::vector<int> symbols;
  for (Eigen::Index id = 0; id < n; ++id) {
    space->decode_into(static_cast<std::uint64_t>(id), symbols);
    double prod = 1.0;
    for (std::size_t j = 0; j < sites; ++j) {
      prod *= site_laws[j][static_cast<std::size_t>(symbols[j])];
    }
    w[id] = prod;
  }
  KahanSum total;
  for (Eigen::Index i = 0; i < n; ++i) total.add(w[i]);
  w /= total.value();
  return Distribution(std::move(space), std::move(w));
}

Distribution perturb(const Distribution& q, double eps, std::uint64_t seed) {
  if (eps < 0.0 || eps > 1.0) {
    throw std::invalid_argument("perturb: eps outside [0, 1]");
  }
  if (eps == 0.0) return q;
  Rng rng(seed);
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::VectorXd r(n);
  KahanSum rsum;
  for (Eigen::Index i = 0; i < n; ++i) {
    r[i] = q.weights()[i] > 0.0 ? rng.uniform() : 0.0;
    rsum.add(r[i]);
  }
  Eigen::VectorXd w(n);
  KahanSum total;
  for (Eigen::Index i = 0; i < n; ++i) {
    w[i] = (1.0 - eps) * q.weights()[i] + eps * (r[i] / rsum.value());
    total.add(w[i]);
  }
  w /= total.value();
  return Distribution(q.space_ptr(), std::move(w));
}

}  // namespace spinlab
