#include "spinlab/dobrushin.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "spinlab/numeric.hpp"
#include "spinlab/samplers.hpp"

namespace spinlab {

namespace {

void check_shapes(const Distribution& p, const Distribution& q,
                  const char* who) {
  if (!p.space().same_shape(q.space())) {
    throw std::invalid_argument(std::string(who) +
                                ": measures live on different spaces");
  }
}

// tv^2 between the site i conditionals of p and q through configuration
// `id`; zero when the p fiber carries no mass.
double site_tv2_at(const Distribution& p, const Distribution& q,
                   std::uint64_t id, std::size_t i) {
  const ConfigSpace& space = p.space();
  const int base = space.alphabet().size();
  const std::uint64_t si = space.stride(i);
  const std::uint64_t root = space.with_symbol(id, i, 0);
  double wp = 0.0, wq = 0.0;
  for (int y = 0; y < base; ++y) {
    const auto fid =
        static_cast<Eigen::Index>(root + static_cast<std::uint64_t>(y) * si);
    wp += p.weights()[fid];
    wq += q.weights()[fid];
  }
  if (wp == 0.0) return 0.0;
  if (wq == 0.0) {
    throw std::domain_error(
        "transport_bound_sweep: reference site conditional undefined on a "
        "p-positive environment");
  }
  double l1 = 0.0;
  for (int y = 0; y < base; ++y) {
    const auto fid =
        static_cast<Eigen::Index>(root + static_cast<std::uint64_t>(y) * si);
    l1 += std::abs(p.weights()[fid] / wp - q.weights()[fid] / wq);
  }
  const double tv = 0.5 * l1;
  return tv * tv;
}

void validate_blocks(const std::vector<IndexSet>& blocks, std::size_t n) {
  for (const IndexSet& block : blocks) {
    if (block.empty()) {
      throw std::invalid_argument("transport_bound_sweep: empty block");
    }
    for (std::size_t t = 0; t < block.size(); ++t) {
      if (block[t] >= n || (t > 0 && block[t] <= block[t - 1])) {
        throw std::invalid_argument(
            "transport_bound_sweep: blocks must be sorted site positions");
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd coupling_matrix(const Distribution& q) {
  const ConfigSpace& space = q.space();
  const std::size_t n = space.num_sites();
  const int base = space.alphabet().size();
  if (space.num_states() > kCouplingEnumCap) {
    throw std::invalid_argument(
        "coupling_matrix: state space too large for exhaustive enumeration");
  }
  if (q.weights().minCoeff() <= 0.0) {
    throw std::domain_error(
        "coupling_matrix: the reference measure must have full support; a "
        "zero weight leaves some single site conditional undefined");
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n));
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < n; ++k) {
    const std::uint64_t sk = space.stride(k);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == k) continue;
      const std::uint64_t si = space.stride(i);
      rest.clear();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != k && j != i) rest.push_back(j);
      }

      double best = 0.0;
      // Environments of site i differing only at k: one digit each for the
      // remaining sites, advanced as a mixed radix odometer.
      std::vector<int> digits(rest.size(), 0);
      std::uint64_t base_id = 0;
      while (true) {
        for (int xa = 0; xa < base; ++xa) {
          const std::uint64_t za = base_id + static_cast<std::uint64_t>(xa) * sk;
          for (int xb = xa + 1; xb < base; ++xb) {
            const std::uint64_t zb =
                base_id + static_cast<std::uint64_t>(xb) * sk;
            double wa = 0.0, wb = 0.0;
            for (int y = 0; y < base; ++y) {
              const std::uint64_t off = static_cast<std::uint64_t>(y) * si;
              wa += q.weights()[static_cast<Eigen::Index>(za + off)];
              wb += q.weights()[static_cast<Eigen::Index>(zb + off)];
            }
            double l1 = 0.0;
            for (int y = 0; y < base; ++y) {
              const std::uint64_t off = static_cast<std::uint64_t>(y) * si;
              l1 += std::abs(
                  q.weights()[static_cast<Eigen::Index>(za + off)] / wa -
                  q.weights()[static_cast<Eigen::Index>(zb + off)] / wb);
            }
            best = std::max(best, 0.5 * l1);
          }
        }

        std::size_t t = 0;
        while (t < rest.size()) {
          if (digits[t] + 1 < base) {
            ++digits[t];
            base_id += space.stride(rest[t]);
            break;
          }
          base_id -= static_cast<std::uint64_t>(digits[t]) * space.stride(rest[t]);
          digits[t] = 0;
          ++t;
        }
        if (t == rest.size()) break;
      }
      a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = best;
    }
  }
  return a;
}

double spectral_norm(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::Index n = gram.rows();

  std::mt19937_64 rng(0x5eed1e55c0ffeeULL);
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  Eigen::VectorXd v(n);
  for (Eigen::Index j = 0; j < n; ++j) v[j] = jitter(rng);
  v.normalize();

  double lambda = 0.0;
  for (long it = 0; it < 500000; ++it) {
    Eigen::VectorXd w = gram * v;
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;
    v = w / wn;
    const double next = v.dot(gram * v);
    const bool settled = std::abs(next - lambda) <= 1e-12 * std::max(next, 1.0e-300);
    lambda = next;
    if (settled) break;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

double induced_l1_norm(const Eigen::MatrixXd& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  return a.cwiseAbs().colwise().sum().maxCoeff();
}

double transport_constant(double spectral_norm_a) {
  if (!(spectral_norm_a >= 0.0)) {
    throw std::invalid_argument(
        "transport_constant: contraction coefficient must be nonnegative");
  }
  if (spectral_norm_a >= 1.0) {
    return std::numeric_limits<double>::infinity();
  }
  const double gap = 1.0 - spectral_norm_a;
  return 1.0 / (gap * gap);
}

DobrushinReport dobrushin_report(const Distribution& q) {
  DobrushinReport report;
  report.matrix = coupling_matrix(q);
  report.norm = spectral_norm(report.matrix);
  report.norm_l1 = induced_l1_norm(report.matrix);
  report.alpha = alpha_constant(q);
  report.satisfied = report.norm < 1.0;
  report.constant = transport_constant(report.norm);
  return report;
}

SweepResult transport_bound_sweep(const Distribution& p,
                                  const Distribution& q, double constant,
                                  const std::vector<IndexSet>& blocks,
                                  const SweepOptions& opts) {
  check_shapes(p, q, "transport_bound_sweep");
  const ConfigSpace& space = p.space();
  const std::size_t n = space.num_sites();
  const int base = space.alphabet().size();
  validate_blocks(blocks, n);

  const bool exhaustive = space.num_states() <= opts.exhaustive_cap;

  // In the exhaustive regime every configuration is touched many times, so
  // the squared site conditional distances are tabulated once.
  Eigen::MatrixXd table;
  if (exhaustive) {
    table.resize(static_cast<Eigen::Index>(space.num_states()),
                 static_cast<Eigen::Index>(n));
    for (std::uint64_t id = 0; id < space.num_states(); ++id) {
      for (std::size_t i = 0; i < n; ++i) {
        table(static_cast<Eigen::Index>(id), static_cast<Eigen::Index>(i)) =
            site_tv2_at(p, q, id, i);
      }
    }
  }
  auto tv2_at = [&](std::uint64_t id, std::size_t i) {
    return table.size() != 0
               ? table(static_cast<Eigen::Index>(id),
                       static_cast<Eigen::Index>(i))
               : site_tv2_at(p, q, id, i);
  };

  W2Options w2 = opts.w2;
  w2.keep_coupling = false;

  SweepResult out;
  auto record = [&](const IndexSet& block, const std::vector<int>& ctx,
                    double lhs, double rhs) {
    ++out.checked;
    const double slack = lhs - rhs;
    if (slack > out.worst_slack) {
      out.worst_slack = slack;
      out.worst = {block, ctx, lhs, rhs};
    }
  };

  // Evaluates one (block, context) pair; false when the context carries no
  // p-mass and is skipped.
  auto evaluate = [&](const IndexSet& block, const std::vector<int>& ctx) {
    const ConditionalSlice ps = conditional(p, block, ctx);
    if (!ps.defined()) return false;
    const ConditionalSlice qs = conditional(q, block, ctx);
    if (!qs.defined()) {
      throw std::domain_error(
          "transport_bound_sweep: context has positive p-mass but no q-mass");
    }

    const double w = w2_distance(*ps.law, *qs.law, w2).value;
    const double lhs = w * w;

    const ConfigSpace& bspace = ps.law->space();
    std::vector<int> sub(block.size(), 0);
    KahanSum acc;
    for (std::uint64_t sid = 0; sid < bspace.num_states(); ++sid) {
      const double mass = (*ps.law)[sid];
      if (mass > 0.0) {
        bspace.decode_into(sid, sub);
        const std::uint64_t full = space.combine(block, sub, ctx);
        double sum = 0.0;
        for (const std::size_t i : block) sum += tv2_at(full, i);
        acc.add(mass * sum);
      }
    }
    record(block, ctx, lhs, constant * acc.value());
    return true;
  };

  if (exhaustive) {
    auto sweep_block = [&](const IndexSet& block) {
      const IndexSet comp = space.sites().complement(block);
      std::vector<int> ctx(comp.size(), 0);
      while (true) {
        evaluate(block, ctx);
        std::size_t t = 0;
        while (t < ctx.size() && ++ctx[t] == base) {
          ctx[t] = 0;
          ++t;
        }
        if (t == ctx.size()) break;
      }
    };
    if (!blocks.empty()) {
      for (const IndexSet& block : blocks) sweep_block(block);
    } else {
      for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
        IndexSet block;
        for (std::size_t j = 0; j < n; ++j) {
          if (mask & (std::uint64_t{1} << j)) block.push_back(j);
        }
        sweep_block(block);
      }
    }
    return out;
  }

  std::mt19937_64 rng(opts.seed);
  std::vector<double> cum(space.num_states());
  double running = 0.0;
  for (std::uint64_t id = 0; id < space.num_states(); ++id) {
    running += p.weights()[static_cast<Eigen::Index>(id)];
    cum[id] = running;
  }

  std::size_t max_size = 1;
  std::uint64_t block_states = static_cast<std::uint64_t>(base);
  while (max_size < n &&
         block_states <= opts.block_state_cap / static_cast<std::uint64_t>(base)) {
    block_states *= static_cast<std::uint64_t>(base);
    ++max_size;
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<int> full(n);

  for (int trial = 0; trial < opts.sampled_pairs; ++trial) {
    IndexSet block;
    if (!blocks.empty()) {
      block = blocks[std::uniform_int_distribution<std::size_t>(
          0, blocks.size() - 1)(rng)];
    } else {
      const std::size_t s =
          std::uniform_int_distribution<std::size_t>(1, max_size)(rng);
      std::sample(all.begin(), all.end(), std::back_inserter(block), s, rng);
    }

    const double u =
        std::uniform_real_distribution<double>(0.0, running)(rng);
    const auto hit = std::upper_bound(cum.begin(), cum.end(), u);
    const std::uint64_t y = std::min<std::uint64_t>(
        static_cast<std::uint64_t>(hit - cum.begin()), space.num_states() - 1);

    space.decode_into(y, full);
    const IndexSet comp = space.sites().complement(block);
    std::vector<int> ctx(comp.size());
    for (std::size_t c = 0; c < comp.size(); ++c) ctx[c] = full[comp[c]];
    evaluate(block, ctx);
  }
  return out;
}

EntropyTensorization entropy_tensorization(const Distribution& p,
                                           const Distribution& q,
                                           double constant) {
  check_shapes(p, q, "entropy_tensorization");
  EntropyTensorization out;
  out.alpha = alpha_constant(q);
  out.divergence = relative_entropy(p, q);
  try {
    out.tv_form = (4.0 * constant / out.alpha) * sum_avg_site_tv_sq(p, q);
  } catch (const std::domain_error&) {
    out.tv_form = std::numeric_limits<double>::quiet_NaN();
  }
  out.divergence_form =
      (2.0 * constant / out.alpha) * sum_avg_site_divergence(p, q);
  return out;
}

double entropy_contraction_rate(double alpha, std::size_t n, double constant) {
  return 1.0 - alpha / (2.0 * static_cast<double>(n) * constant);
}

BoundCheck entropy_contraction_check(const Distribution& p,
                                     const Distribution& q, double constant) {
  check_shapes(p, q, "entropy_contraction_check");
  const auto gamma = random_scan_gibbs(q);
  const Distribution after = gamma->apply(p);
  const double rate = entropy_contraction_rate(alpha_constant(q),
                                               p.space().num_sites(), constant);
  return {relative_entropy(after, q), rate * relative_entropy(p, q)};
}

BoundCheck log_sobolev_check(const Distribution& p, const Distribution& q,
                             double constant) {
  check_shapes(p, q, "log_sobolev_check");
  for (Eigen::Index id = 0; id < p.weights().size(); ++id) {
    if (p.weights()[id] > 0.0 && q.weights()[id] == 0.0) {
      throw std::domain_error(
          "log_sobolev_check: p must be absolutely continuous with respect "
          "to q");
    }
  }
  const auto gamma = random_scan_gibbs(q);
  const double lhs = relative_entropy(gamma->apply(p), q) /
                     static_cast<double>(p.space().num_sites());
  const double rhs =
      (4.0 * constant / alpha_constant(q)) * dirichlet_closed_form(p, q);
  return {lhs, rhs};
}

BoundCheck tv_tensorization_check(const Distribution& p,
                                  const Distribution& q) {
  check_shapes(p, q, "tv_tensorization_check");
  if (q.weights().minCoeff() <= 0.0) {
    throw std::domain_error(
        "tv_tensorization_check: the reference measure must have full "
        "support");
  }
  const auto n = static_cast<double>(p.space().num_sites());
  const double alpha = alpha_constant(q);
  const double unit = static_cast<double>(p.space().alphabet().size()) * alpha;
  const double factor = std::pow(2.0 / (unit * unit), n + std::log2(n));
  const double tv = tv_distance(p, q);
  return {tv * tv, factor * sum_avg_site_tv_sq(p, q)};
}

}  // namespace spinlab
