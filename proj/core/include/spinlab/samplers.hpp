#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "spinlab/measures.hpp"
#include "spinlab/state_space.hpp"

namespace spinlab {

inline constexpr std::uint64_t kDenseKernelCap = std::uint64_t{1} << 12;

// Row stochastic Markov kernel on a configuration space. Rows are sparse:
// (target id, probability) pairs with distinct targets summing to one.
class Kernel {
 public:
  explicit Kernel(std::shared_ptr<const ConfigSpace> space);
  virtual ~Kernel();

  const ConfigSpace& space() const { return *space_; }
  const std::shared_ptr<const ConfigSpace>& space_ptr() const {
    return space_;
  }

  virtual std::vector<std::pair<std::uint64_t, double>> row(
      std::uint64_t id) const = 0;

  // Push forward p K of a measure.
  Distribution apply(const Distribution& p) const;
  // Pointwise K f of a function on states.
  Eigen::VectorXd apply_to_function(const Eigen::VectorXd& f) const;
  // Full transition matrix; refused above kDenseKernelCap states.
  Eigen::MatrixXd dense() const;

  // max_{x,y} |q(x) K(x,y) - q(y) K(y,x)|.
  double detailed_balance_residual(const Distribution& q) const;
  // max_y |(qK)(y) - q(y)|.
  double stationarity_residual(const Distribution& q) const;
  // (1/2) sum_{x,y} q(x) K(x,y) (f(x)-f(y)) (g(x)-g(y)).
  double dirichlet_form(const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                        const Distribution& q) const;

 private:
  std::shared_ptr<const ConfigSpace> space_;
};

// Heat bath at one site: replaces the symbol at `site` by a draw from the
// target conditional given the rest. States whose context carries no target
// mass are left in place.
class SiteResampleKernel : public Kernel {
 public:
  SiteResampleKernel(Distribution target, std::size_t site);

  std::size_t site() const { return site_; }
  std::vector<std::pair<std::uint64_t, double>> row(
      std::uint64_t id) const override;

 private:
  Distribution target_;
  std::size_t site_;
};

// Heat bath on a block of sites: redraws the whole block from the target
// conditional given the complement.
class BlockResampleKernel : public Kernel {
 public:
  BlockResampleKernel(Distribution target, IndexSet block);

  const IndexSet& block() const { return block_; }
  std::vector<std::pair<std::uint64_t, double>> row(
      std::uint64_t id) const override;

 private:
  Distribution target_;
  IndexSet block_;
};

// Convex combination of kernels on one space.
class MixtureKernel : public Kernel {
 public:
  explicit MixtureKernel(
      std::vector<std::pair<double, std::shared_ptr<const Kernel>>> parts);

  const std::vector<std::pair<double, std::shared_ptr<const Kernel>>>& parts()
      const {
    return parts_;
  }
  std::vector<std::pair<std::uint64_t, double>> row(
      std::uint64_t id) const override;

 private:
  std::vector<std::pair<double, std::shared_ptr<const Kernel>>> parts_;
};

// The random scan heat bath: pick a site uniformly, resample it from the
// target conditional.
std::shared_ptr<const MixtureKernel> random_scan_gibbs(
    const Distribution& target);

// Dirichlet form of the random scan heat bath at f = sqrt(p/q), evaluated
// without building the kernel:
//   (1/n) sum_i E_{ctx ~ pbar_i} [ 1 - A(p_i(.|ctx), q_i(.|ctx))^2 ].
// Contexts without q mass contribute their full p mass.
double dirichlet_closed_form(const Distribution& p, const Distribution& q);

// D(pK || q) - D(p || q): nonpositive whenever q is stationary for K.
double entropy_decay_residual(const Kernel& kernel, const Distribution& p,
                              const Distribution& q);

struct ContractionSample {
  double before = 0.0;
  double after = 0.0;
  double ratio = 0.0;
};

// Transport distance of a pair before and after one kernel step.
ContractionSample empirical_w2_contraction(const Kernel& kernel,
                                           const Distribution& p,
                                           const Distribution& r);

}  // namespace spinlab
