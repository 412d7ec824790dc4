#include "spinlab/mixing.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "spinlab/numeric.hpp"

namespace spinlab {

namespace {

constexpr int kTailCap = 2'000'000;

void check_shapes(const Distribution& p, const Distribution& q,
                  const char* who) {
  if (!p.space().same_shape(q.space())) {
    throw std::invalid_argument(std::string(who) +
                                ": measures live on different spaces");
  }
}

double analytic_value(const MixingProfile& profile, int r) {
  if (!profile.analytic) return 0.0;
  const auto [amplitude, decay] = *profile.analytic;
  return std::min(1.0, amplitude * std::exp(-decay * double(r)));
}

void require_convergent(const MixingProfile& profile, const char* who) {
  if (profile.analytic && profile.analytic->first > 0.0 &&
      profile.analytic->second <= 0.0) {
    throw std::domain_error(std::string(who) +
                            ": analytic profile tail does not converge");
  }
}

// terms[r - 1] = (2r+1)^(dim-1) * phi(r), extended past the recorded bins
// until the analytic branch is negligible.
std::vector<double> decay_terms(const MixingProfile& profile, int dim,
                                int horizon, const char* who) {
  require_convergent(profile, who);
  const int observed = profile.max_observed();
  std::vector<double> terms;
  terms.reserve(std::max(observed, horizon));
  KahanSum total;
  for (int r = 1; r <= observed; ++r) {
    terms.push_back(std::pow(2.0 * r + 1.0, dim - 1) * profile(r));
    total.add(terms.back());
  }
  if (profile.analytic && profile.analytic->first > 0.0) {
    bool settled = false;
    for (int r = observed + 1; r <= observed + kTailCap; ++r) {
      const double term =
          std::pow(2.0 * r + 1.0, dim - 1) * analytic_value(profile, r);
      if (r > horizon && term < 1e-18 * std::max(1.0, total.value())) {
        settled = true;
        break;
      }
      terms.push_back(term);
      total.add(term);
    }
    if (!settled) {
      throw std::domain_error(std::string(who) +
                              ": analytic tail converges too slowly");
    }
  }
  return terms;
}

}  // namespace

double MixingProfile::operator()(int r) const {
  if (r < 1) {
    throw std::invalid_argument(
        "MixingProfile: defined for positive distances only");
  }
  double value = analytic_value(*this, r);
  const auto it = empirical.find(r);
  if (it != empirical.end()) value = std::max(value, it->second);
  return std::min(1.0, value);
}

int MixingProfile::max_observed() const {
  return empirical.empty() ? 0 : empirical.rbegin()->first;
}

MixingProfile exponential_profile(double amplitude, double decay) {
  if (amplitude < 0.0) {
    throw std::invalid_argument(
        "exponential_profile: amplitude must be nonnegative");
  }
  MixingProfile profile;
  profile.analytic = {amplitude, decay};
  profile.exhaustive = true;
  return profile;
}

MixingProfile estimate_phi(const LatticeModel& model,
                           const PhiEstimateOptions& opts) {
  MixingProfile profile;
  const SiteSet* collar = model.collar();
  if (collar == nullptr || collar->size() == 0) {
    profile.exhaustive = true;
    return profile;
  }

  const SiteSet& box = model.box();
  const std::size_t n = box.size();
  const std::size_t cn = collar->size();
  const int base = model.alphabet().size();

  auto record = [&profile](int r, double tv) {
    auto [it, fresh] = profile.empirical.try_emplace(r, tv);
    if (!fresh) it->second = std::max(it->second, tv);
    ++profile.evaluations;
  };

  // Contexts per flipped collar site; the gate keeps exhaustive scans small.
  std::uint64_t contexts = 1;
  for (std::size_t j = 0; j + 1 < cn && contexts <= 2048; ++j) {
    contexts *= std::uint64_t(base);
  }
  const bool exhaustive = n <= 9 && base == 2 && contexts <= 2048;
  profile.exhaustive = exhaustive;

  if (exhaustive) {
    std::vector<int> dist(n);
    std::vector<int> symbols(cn, 0);
    for (std::size_t c = 0; c < cn; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        dist[i] = rho(collar->site(c), box.site(i));
      }
      // Minimum distance from the flipped site to each position subset.
      std::vector<int> minr(std::size_t{1} << n,
                            std::numeric_limits<int>::max());
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        const std::size_t low = std::size_t(std::countr_zero(mask));
        minr[mask] = std::min(minr[mask & (mask - 1)], dist[low]);
      }

      for (std::uint64_t ctx = 0; ctx < contexts; ++ctx) {
        std::uint64_t rem = ctx;
        for (std::size_t j = 0; j < cn; ++j) {
          if (j == c) continue;
          symbols[j] = int(rem % std::uint64_t(base));
          rem /= std::uint64_t(base);
        }
        for (int a = 0; a < base; ++a) {
          for (int b = a + 1; b < base; ++b) {
            symbols[c] = a;
            const Distribution qy = model.joint(symbols);
            symbols[c] = b;
            const Distribution qz = model.joint(symbols);
            IndexSet block;
            for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n);
                 ++mask) {
              block.clear();
              for (std::size_t i = 0; i < n; ++i) {
                if (mask & (std::uint64_t{1} << i)) block.push_back(i);
              }
              record(minr[mask],
                     tv_distance(marginal(qy, block), marginal(qz, block)));
            }
          }
        }
      }
    }
    return profile;
  }

  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> pick_site(0, cn - 1);
  std::uniform_int_distribution<int> pick_symbol(0, base - 1);
  std::vector<int> symbols(cn);
  for (int t = 0; t < opts.budget; ++t) {
    const std::size_t c = pick_site(rng);
    for (std::size_t j = 0; j < cn; ++j) symbols[j] = pick_symbol(rng);
    const int a = pick_symbol(rng);
    int b = pick_symbol(rng);
    while (b == a) b = pick_symbol(rng);

    IndexSet block;
    while (block.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        if (rng() & 1u) block.push_back(i);
      }
    }
    int r = std::numeric_limits<int>::max();
    for (const std::size_t i : block) {
      r = std::min(r, rho(collar->site(c), box.site(i)));
    }

    symbols[c] = a;
    const Distribution qy = model.joint(symbols);
    symbols[c] = b;
    const Distribution qz = model.joint(symbols);
    record(r, tv_distance(marginal(qy, block), marginal(qz, block)));
  }
  return profile;
}

PhiNorm phi_norm(const MixingProfile& profile, int dim, int radius) {
  if (dim < 1) {
    throw std::invalid_argument("phi_norm: dimension must be positive");
  }
  if (radius < 0) {
    throw std::invalid_argument("phi_norm: radius must be nonnegative");
  }
  require_convergent(profile, "phi_norm");

  PhiNorm out;
  out.radius = std::max(radius, profile.max_observed());
  KahanSum sum;
  for (int r = 1; r <= out.radius; ++r) {
    const double shell =
        std::pow(2.0 * r + 1.0, dim) - std::pow(2.0 * r - 1.0, dim);
    sum.add(shell * profile(r));
  }
  out.value = sum.value();

  if (profile.analytic && profile.analytic->first > 0.0) {
    KahanSum tail;
    bool settled = false;
    for (int r = out.radius + 1; r <= out.radius + kTailCap; ++r) {
      const double shell =
          std::pow(2.0 * r + 1.0, dim) - std::pow(2.0 * r - 1.0, dim);
      const double term = shell * analytic_value(profile, r);
      if (term < 1e-18 * std::max(1.0, out.value + tail.value())) {
        settled = true;
        break;
      }
      tail.add(term);
    }
    if (!settled) {
      throw std::domain_error("phi_norm: analytic tail converges too slowly");
    }
    out.tail = tail.value();
    out.value += out.tail;
  } else {
    out.truncated = true;
  }
  return out;
}

ThetaParams theta_m(const MixingProfile& profile, int dim, int m, int r_cap) {
  if (dim < 1) {
    throw std::invalid_argument("theta_m: dimension must be positive");
  }
  if (m < 1) {
    throw std::invalid_argument("theta_m: block side must be positive");
  }
  if (r_cap < 1) {
    throw std::invalid_argument("theta_m: cut radius cap must be positive");
  }

  ThetaParams out;
  out.m = m;
  out.norm = phi_norm(profile, dim, r_cap).value;

  const std::vector<double> terms = decay_terms(profile, dim, r_cap, "theta_m");
  std::vector<double> suffix(terms.size() + 1, 0.0);
  for (std::size_t i = terms.size(); i > 0; --i) {
    suffix[i - 1] = suffix[i] + terms[i - 1];
  }

  double best = std::numeric_limits<double>::infinity();
  for (int cut = 1; cut <= r_cap; ++cut) {
    const double tail =
        std::size_t(cut - 1) < terms.size() ? suffix[cut - 1] : 0.0;
    const double value =
        out.norm * double(dim) * double(cut) / double(m) + 2.0 * dim * tail;
    if (value < best) {
      best = value;
      out.r_star = cut;
    }
  }
  out.theta = best;
  out.usable = best < 1.0;
  return out;
}

double theta_finite_range(const MixingProfile& profile, int dim, int m,
                          int range) {
  if (dim < 1 || m < 1 || range < 0) {
    throw std::invalid_argument("theta_finite_range: bad geometry");
  }
  return phi_norm(profile, dim, range).value * double(dim) * double(range) /
         double(m);
}

CubeInfluence cube_influence(const MixingProfile& profile, int m,
                             const SiteSet& lambda, int r_cap) {
  if (m < 1) {
    throw std::invalid_argument("cube_influence: block side must be positive");
  }
  const int dim = lambda.dim();
  const std::size_t n = lambda.size();
  const CubeFamily family = cubes_intersecting(lambda, m);

  CubeInfluence out;
  out.matrix = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));
  out.counts = Eigen::MatrixXd::Zero(Eigen::Index(n), Eigen::Index(n));

  std::vector<char> covered(n, 0);
  for (const IndexSet& cube : family.cubes) {
    std::fill(covered.begin(), covered.end(), 0);
    for (const std::size_t i : cube) covered[i] = 1;
    for (const std::size_t i : cube) {
      for (std::size_t k = 0; k < n; ++k) {
        if (!covered[k]) out.counts(Eigen::Index(k), Eigen::Index(i)) += 1.0;
      }
    }
  }

  const double volume = std::pow(double(m), dim);
  double entry_slack = -std::numeric_limits<double>::infinity();
  double count_slack = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (k == i) continue;
      const int r = rho(lambda.site(k), lambda.site(i));
      const double count = out.counts(Eigen::Index(k), Eigen::Index(i));
      const double count_bound =
          std::min(double(dim) * std::pow(double(m), dim - 1) * r, volume);
      count_slack = std::max(count_slack, count - count_bound);

      const double phi = profile(r);
      const double value = phi * count;
      out.matrix(Eigen::Index(k), Eigen::Index(i)) = value;
      const double entry_bound =
          volume * phi * std::min(double(dim) * double(r) / double(m), 1.0);
      entry_slack = std::max(entry_slack, value - entry_bound);
    }
  }
  if (n > 1) {
    out.entry_slack = entry_slack;
    out.count_slack = count_slack;
  }

  out.norm = spectral_norm(out.matrix);
  out.theta = theta_m(profile, dim, m, r_cap);
  out.norm_bound = volume * out.theta.theta;
  return out;
}

BlockDecomposition block_decomposition_check(
    const Distribution& p, const Distribution& q, const MixingProfile& profile,
    int m, const W2Options& w2_in, std::optional<double> theta_override) {
  check_shapes(p, q, "block_decomposition_check");
  if (m < 1) {
    throw std::invalid_argument(
        "block_decomposition_check: block side must be positive");
  }

  const SiteSet& lambda = p.space().sites();
  const int dim = lambda.dim();
  const int base = p.space().alphabet().size();

  BlockDecomposition out;
  out.theta = theta_m(profile, dim, m);
  out.theta_used = theta_override ? *theta_override : out.theta.theta;

  W2Options w2 = w2_in;
  w2.keep_coupling = false;
  const double whole = w2_distance(p, q, w2).value;
  out.lhs = whole * whole;

  const CubeFamily family = cubes_intersecting(lambda, m);
  out.cubes = family.size();
  std::map<IndexSet, int> multiplicity;
  for (const IndexSet& cube : family.cubes) ++multiplicity[cube];

  KahanSum sum_w2;
  KahanSum sum_tv;
  for (const auto& [block, copies] : multiplicity) {
    const IndexSet rest = lambda.complement(block);
    std::vector<int> ctx(rest.size(), 0);
    while (true) {
      const ConditionalSlice ps = conditional(p, block, ctx);
      if (ps.defined()) {
        const ConditionalSlice qs = conditional(q, block, ctx);
        if (!qs.defined()) {
          throw std::domain_error(
              "block_decomposition_check: context has positive p-mass but no "
              "q-mass");
        }
        const double w = w2_distance(*ps.law, *qs.law, w2).value;
        const double tv = tv_distance(*ps.law, *qs.law);
        sum_w2.add(double(copies) * ps.context_mass * w * w);
        sum_tv.add(double(copies) * ps.context_mass * tv * tv);
      }
      std::size_t digit = 0;
      while (digit < ctx.size() && ++ctx[digit] == base) {
        ctx[digit] = 0;
        ++digit;
      }
      if (digit == ctx.size()) break;
    }
  }
  out.sum_w2 = sum_w2.value();
  out.sum_tv = sum_tv.value();

  if (out.theta_used < 1.0) {
    out.applicable = true;
    const double shrink = 1.0 / ((1.0 - out.theta_used) * (1.0 - out.theta_used));
    out.mid = shrink / std::pow(double(m), dim) * out.sum_w2;
    out.rhs = shrink * out.sum_tv;
  } else {
    out.mid = std::numeric_limits<double>::quiet_NaN();
    out.rhs = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::shared_ptr<const MixtureKernel> cube_sweep_kernel(const Distribution& q,
                                                       int m) {
  if (m < 1) {
    throw std::invalid_argument(
        "cube_sweep_kernel: block side must be positive");
  }
  const CubeFamily family = cubes_intersecting(q.space().sites(), m);
  std::map<IndexSet, int> multiplicity;
  for (const IndexSet& cube : family.cubes) ++multiplicity[cube];

  std::vector<std::pair<double, std::shared_ptr<const Kernel>>> parts;
  parts.reserve(multiplicity.size());
  const double weight = 1.0 / double(family.size());
  for (const auto& [block, copies] : multiplicity) {
    parts.emplace_back(weight * double(copies),
                       std::make_shared<BlockResampleKernel>(q, block));
  }
  return std::make_shared<MixtureKernel>(std::move(parts));
}

BlockContraction block_contraction_sweep(const Distribution& q,
                                         const MixingProfile& profile, int m,
                                         int pairs, std::uint64_t seed,
                                         const W2Options& w2_in) {
  if (pairs < 1) {
    throw std::invalid_argument(
        "block_contraction_sweep: need at least one pair");
  }
  const SiteSet& lambda = q.space().sites();
  const int dim = lambda.dim();

  BlockContraction out;
  out.theta = theta_m(profile, dim, m);
  const auto kernel = cube_sweep_kernel(q, m);
  out.cubes = cubes_intersecting(lambda, m).size();
  out.rate = 1.0 - std::pow(double(m), dim) / double(out.cubes) *
                       (1.0 - out.theta.theta);

  W2Options w2 = w2_in;
  w2.keep_coupling = false;

  std::mt19937_64 rng(seed);
  for (int t = 0; t < pairs; ++t) {
    const Distribution r = random_spec(rng(), q.space_ptr(), 1e-2);
    const Distribution s = random_spec(rng(), q.space_ptr(), 1e-2);
    const double before = w2_distance(r, s, w2).value;
    if (before <= 1e-9) {
      ++out.skipped;
      continue;
    }
    const double after =
        w2_distance(kernel->apply(r), kernel->apply(s), w2).value;
    out.worst_ratio = std::max(out.worst_ratio, after / before);
    ++out.tested;
  }
  return out;
}

MixingConstant mixing_constant(const MixingProfile& profile, int dim, int m,
                               double alpha, int alphabet_size, int m_cap) {
  if (dim < 1) {
    throw std::invalid_argument("mixing_constant: dimension must be positive");
  }
  if (m < 0) {
    throw std::invalid_argument(
        "mixing_constant: block side must be nonnegative");
  }
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw std::invalid_argument("mixing_constant: alpha must lie in (0, 1]");
  }
  if (alphabet_size < 1) {
    throw std::invalid_argument("mixing_constant: alphabet must be nonempty");
  }
  if (m_cap < 1) {
    throw std::invalid_argument("mixing_constant: side cap must be positive");
  }

  MixingConstant out;
  int smallest = 0;
  for (int side = 1; side <= m_cap; ++side) {
    if (theta_m(profile, dim, side).usable) {
      smallest = side;
      break;
    }
  }
  if (smallest == 0) {
    throw std::domain_error(
        "mixing_constant: no block side up to the cap contracts");
  }
  out.m_min = smallest;
  out.m = m == 0 ? smallest : m;
  out.theta = theta_m(profile, dim, out.m);
  if (!out.theta.usable) {
    throw std::domain_error(
        "mixing_constant: requested block side does not contract");
  }

  const double unit = double(alphabet_size) * alpha;
  const double exponent = double(out.m) + std::log2(double(out.m));
  const double gap = 1.0 - out.theta.theta;
  out.value = std::pow(double(out.m), dim) / (gap * gap) *
              std::pow(2.0 / (unit * unit), exponent);
  return out;
}

MixingEntropyBound mixing_entropy_check(const Distribution& p,
                                        const Distribution& q,
                                        const MixingProfile& profile, int m,
                                        int m_cap) {
  check_shapes(p, q, "mixing_entropy_check");
  const int dim = p.space().sites().dim();
  MixingEntropyBound out;
  out.constant =
      mixing_constant(profile, dim, m, alpha_constant(q),
                      int(q.space().alphabet().size()), m_cap);
  out.tensorization = entropy_tensorization(p, q, out.constant.value);
  out.bound = out.tensorization.versus_tv();
  return out;
}

}  // namespace spinlab
