#include "spinlab/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "spinlab/numeric.hpp"
#include "spinlab/transport.hpp"

namespace spinlab {
namespace {

void normalize_exact(Eigen::VectorXd& w) {
  for (int pass = 0; pass < 2; ++pass) {
    KahanSum total;
    for (Eigen::Index i = 0; i < w.size(); ++i) total.add(w[i]);
    if (!(total.value() > 0.0))
      throw std::invalid_argument("normalize: total mass not positive");
    w /= total.value();
  }
}

void check_target(const ConfigSpace& kernel_space, const Distribution& q) {
  if (!kernel_space.same_shape(q.space()))
    throw std::invalid_argument("kernel: space mismatch");
}

std::shared_ptr<const ConfigSpace> mixture_space(
    const std::vector<std::pair<double, std::shared_ptr<const Kernel>>>&
        parts) {
  if (parts.empty() || parts.front().second == nullptr) return nullptr;
  return parts.front().second->space_ptr();
}

}  // namespace

Kernel::Kernel(std::shared_ptr<const ConfigSpace> space)
    : space_(std::move(space)) {
  if (space_ == nullptr) throw std::invalid_argument("kernel: null space");
}

Kernel::~Kernel() = default;

Distribution Kernel::apply(const Distribution& p) const {
  check_target(*space_, p);
  const auto states = static_cast<std::uint64_t>(space_->num_states());
  std::vector<KahanSum> sums(states);
  for (std::uint64_t id = 0; id < states; ++id) {
    const double mass = p[id];
    if (mass == 0.0) continue;
    for (const auto& [target, prob] : row(id)) sums[target].add(mass * prob);
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(states));
  for (std::uint64_t id = 0; id < states; ++id)
    w[static_cast<Eigen::Index>(id)] = sums[id].value();
  normalize_exact(w);
  return Distribution(p.space_ptr(), std::move(w));
}

Eigen::VectorXd Kernel::apply_to_function(const Eigen::VectorXd& f) const {
  const auto states = static_cast<Eigen::Index>(space_->num_states());
  if (f.size() != states)
    throw std::invalid_argument("kernel: function length mismatch");
  Eigen::VectorXd out(states);
  for (Eigen::Index id = 0; id < states; ++id) {
    KahanSum sum;
    for (const auto& [target, prob] : row(static_cast<std::uint64_t>(id)))
      sum.add(prob * f[static_cast<Eigen::Index>(target)]);
    out[id] = sum.value();
  }
  return out;
}

Eigen::MatrixXd Kernel::dense() const {
  const auto states = space_->num_states();
  if (states > kDenseKernelCap)
    throw std::invalid_argument("kernel: dense form over the state cap");
  const auto n = static_cast<Eigen::Index>(states);
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index id = 0; id < n; ++id) {
    for (const auto& [target, prob] : row(static_cast<std::uint64_t>(id)))
      k(id, static_cast<Eigen::Index>(target)) += prob;
  }
  return k;
}

double Kernel::detailed_balance_residual(const Distribution& q) const {
  check_target(*space_, q);
  const auto states = space_->num_states();
  std::unordered_map<std::uint64_t, double> flux;
  for (std::uint64_t id = 0; id < states; ++id) {
    const double mass = q[id];
    for (const auto& [target, prob] : row(id)) {
      if (target == id) continue;
      flux[id * states + target] += mass * prob;
    }
  }
  double worst = 0.0;
  for (const auto& [key, forward] : flux) {
    const std::uint64_t from = key / states;
    const std::uint64_t to = key % states;
    const auto mirror = flux.find(to * states + from);
    const double backward = mirror == flux.end() ? 0.0 : mirror->second;
    worst = std::max(worst, std::abs(forward - backward));
  }
  return worst;
}

double Kernel::stationarity_residual(const Distribution& q) const {
  const Distribution step = apply(q);
  double worst = 0.0;
  for (std::uint64_t id = 0; id < space_->num_states(); ++id)
    worst = std::max(worst, std::abs(step[id] - q[id]));
  return worst;
}

double Kernel::dirichlet_form(const Eigen::VectorXd& f,
                              const Eigen::VectorXd& g,
                              const Distribution& q) const {
  check_target(*space_, q);
  const auto states = static_cast<Eigen::Index>(space_->num_states());
  if (f.size() != states || g.size() != states)
    throw std::invalid_argument("dirichlet_form: function length mismatch");
  KahanSum acc;
  for (Eigen::Index id = 0; id < states; ++id) {
    const double mass = q[static_cast<std::uint64_t>(id)];
    if (mass == 0.0) continue;
    for (const auto& [target, prob] : row(static_cast<std::uint64_t>(id))) {
      if (target == static_cast<std::uint64_t>(id)) continue;
      const auto t = static_cast<Eigen::Index>(target);
      acc.add(mass * prob * (f[id] - f[t]) * (g[id] - g[t]));
    }
  }
  return 0.5 * acc.value();
}

SiteResampleKernel::SiteResampleKernel(Distribution target, std::size_t site)
    : Kernel(target.space_ptr()), target_(std::move(target)), site_(site) {
  if (site_ >= space().num_sites())
    throw std::invalid_argument("site kernel: site out of range");
}

std::vector<std::pair<std::uint64_t, double>> SiteResampleKernel::row(
    std::uint64_t id) const {
  const int base = space().alphabet().size();
  KahanSum total;
  for (int x = 0; x < base; ++x)
    total.add(target_[space().with_symbol(id, site_, x)]);
  const double mass = total.value();
  if (mass <= 0.0) return {{id, 1.0}};
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(static_cast<std::size_t>(base));
  for (int x = 0; x < base; ++x) {
    const std::uint64_t target = space().with_symbol(id, site_, x);
    const double w = target_[target] / mass;
    if (w > 0.0) out.emplace_back(target, w);
  }
  return out;
}

BlockResampleKernel::BlockResampleKernel(Distribution target, IndexSet block)
    : Kernel(target.space_ptr()),
      target_(std::move(target)),
      block_(std::move(block)) {
  if (block_.empty()) throw std::invalid_argument("block kernel: empty block");
  if (!std::is_sorted(block_.begin(), block_.end()))
    throw std::invalid_argument("block kernel: block not sorted");
  if (block_.back() >= space().num_sites())
    throw std::invalid_argument("block kernel: site out of range");
  if (std::adjacent_find(block_.begin(), block_.end()) != block_.end())
    throw std::invalid_argument("block kernel: repeated site");
}

std::vector<std::pair<std::uint64_t, double>> BlockResampleKernel::row(
    std::uint64_t id) const {
  const int base = space().alphabet().size();
  std::vector<int> symbols = space().decode(id);

  std::vector<std::uint64_t> targets;
  for (auto& pos : block_) symbols[pos] = 0;
  while (true) {
    targets.push_back(space().encode(symbols));
    std::size_t j = 0;
    for (; j < block_.size(); ++j) {
      if (++symbols[block_[j]] < base) break;
      symbols[block_[j]] = 0;
    }
    if (j == block_.size()) break;
  }

  KahanSum total;
  for (const std::uint64_t t : targets) total.add(target_[t]);
  const double mass = total.value();
  if (mass <= 0.0) return {{id, 1.0}};
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(targets.size());
  for (const std::uint64_t t : targets) {
    const double w = target_[t] / mass;
    if (w > 0.0) out.emplace_back(t, w);
  }
  return out;
}

MixtureKernel::MixtureKernel(
    std::vector<std::pair<double, std::shared_ptr<const Kernel>>> parts)
    : Kernel(mixture_space(parts)), parts_(std::move(parts)) {
  KahanSum total;
  for (const auto& [weight, part] : parts_) {
    if (part == nullptr)
      throw std::invalid_argument("mixture kernel: null part");
    if (!space().same_shape(part->space()))
      throw std::invalid_argument("mixture kernel: space mismatch");
    if (weight < 0.0)
      throw std::invalid_argument("mixture kernel: negative weight");
    total.add(weight);
  }
  const double mass = total.value();
  if (std::abs(mass - 1.0) > 1e-9)
    throw std::invalid_argument("mixture kernel: weights must sum to one");
  for (auto& [weight, part] : parts_) weight /= mass;
}

std::vector<std::pair<std::uint64_t, double>> MixtureKernel::row(
    std::uint64_t id) const {
  std::unordered_map<std::uint64_t, double> merged;
  for (const auto& [weight, part] : parts_) {
    if (weight == 0.0) continue;
    for (const auto& [target, prob] : part->row(id))
      merged[target] += weight * prob;
  }
  std::vector<std::pair<std::uint64_t, double>> out(merged.begin(),
                                                    merged.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::shared_ptr<const MixtureKernel> random_scan_gibbs(
    const Distribution& target) {
  const std::size_t n = target.space().num_sites();
  std::vector<std::pair<double, std::shared_ptr<const Kernel>>> parts;
  parts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    parts.emplace_back(1.0 / static_cast<double>(n),
                       std::make_shared<SiteResampleKernel>(target, i));
  }
  return std::make_shared<MixtureKernel>(std::move(parts));
}

double dirichlet_closed_form(const Distribution& p, const Distribution& q) {
  if (!p.space().same_shape(q.space()))
    throw std::invalid_argument("dirichlet_closed_form: space mismatch");
  const ConfigSpace& space = p.space();
  const auto base = static_cast<std::uint64_t>(space.alphabet().size());
  const std::size_t n = space.num_sites();

  KahanSum acc;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t lo_count = space.stride(i);
    const std::uint64_t hi_count = space.num_states() / (lo_count * base);
    for (std::uint64_t hi = 0; hi < hi_count; ++hi) {
      for (std::uint64_t lo = 0; lo < lo_count; ++lo) {
        const std::uint64_t base_id = hi * lo_count * base + lo;
        KahanSum pm_sum;
        KahanSum qm_sum;
        for (std::uint64_t x = 0; x < base; ++x) {
          pm_sum.add(p[base_id + x * lo_count]);
          qm_sum.add(q[base_id + x * lo_count]);
        }
        const double pmass = pm_sum.value();
        if (pmass == 0.0) continue;
        const double qmass = qm_sum.value();
        double affinity = 0.0;
        if (qmass > 0.0) {
          KahanSum a;
          for (std::uint64_t x = 0; x < base; ++x) {
            const std::uint64_t id = base_id + x * lo_count;
            a.add(std::sqrt((p[id] / pmass) * (q[id] / qmass)));
          }
          affinity = a.value();
        }
        acc.add(pmass * (1.0 - affinity * affinity));
      }
    }
  }
  return acc.value() / static_cast<double>(n);
}

double entropy_decay_residual(const Kernel& kernel, const Distribution& p,
                              const Distribution& q) {
  const Distribution stepped = kernel.apply(p);
  return relative_entropy(stepped, q) - relative_entropy(p, q);
}

ContractionSample empirical_w2_contraction(const Kernel& kernel,
                                           const Distribution& p,
                                           const Distribution& r) {
  ContractionSample sample;
  sample.before = w2_distance(p, r).value;
  sample.after = w2_distance(kernel.apply(p), kernel.apply(r)).value;
  sample.ratio = sample.before > 0.0 ? sample.after / sample.before : 0.0;
  return sample;
}

}  // namespace spinlab
