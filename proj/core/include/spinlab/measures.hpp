#pragma once

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>

#include "spinlab/state_space.hpp"

namespace spinlab {

inline constexpr double kNormalizationTol = 1e-12;

// Probability measure on a ConfigSpace, stored densely by configuration id.
// Immutable after construction; weights are nonnegative and sum to one
// within kNormalizationTol.
class Distribution {
 public:
  Distribution(std::shared_ptr<const ConfigSpace> space, Eigen::VectorXd w);

  static Distribution uniform(std::shared_ptr<const ConfigSpace> space);
  static Distribution point_mass(std::shared_ptr<const ConfigSpace> space,
                                 std::uint64_t id);

  const ConfigSpace& space() const { return *space_; }
  const std::shared_ptr<const ConfigSpace>& space_ptr() const {
    return space_;
  }
  const Eigen::VectorXd& weights() const { return w_; }
  double operator[](std::uint64_t id) const {
    return w_[static_cast<Eigen::Index>(id)];
  }
  std::uint64_t size() const { return space_->num_states(); }

  // Smallest weight over the support.
  double min_positive() const;

 private:
  std::shared_ptr<const ConfigSpace> space_;
  Eigen::VectorXd w_;
};

// Conditional law of the target sites given fixed symbols on the rest.
// Contexts of zero mass leave the law undefined rather than raising.
struct ConditionalSlice {
  IndexSet target;
  std::vector<int> context;
  double context_mass = 0.0;
  std::optional<Distribution> law;

  bool defined() const { return law.has_value(); }
};

// Total variation distance, half the L1 difference.
double tv_distance(const Distribution& r, const Distribution& s);

// Relative entropy D(r||s) in nats; +infinity when r is not absolutely
// continuous with respect to s. Terms with r(x) = 0 contribute zero.
double relative_entropy(const Distribution& r, const Distribution& s);

// Hellinger affinity A = sum sqrt(r s) and distance H = sqrt(sum (sqrt r - sqrt s)^2).
double hellinger_affinity(const Distribution& r, const Distribution& s);
double hellinger_distance(const Distribution& r, const Distribution& s);

// A pair of values meant to satisfy lhs <= rhs.
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return lhs - rhs; }
  bool holds(double tol = 0.0) const { return lhs <= rhs + tol; }
};

// tv^2 against 1 - A^2.
BoundCheck tv_sq_vs_affinity(const Distribution& r, const Distribution& s);
// tv^2 against D/2.
BoundCheck pinsker(const Distribution& r, const Distribution& s);
// D against (4/alpha_s) tv^2 with alpha_s the smallest weight on supp(s).
// Requires r absolutely continuous with respect to s.
BoundCheck reverse_pinsker(const Distribution& r, const Distribution& s);

// Marginal law of the sites at sorted positions I.
Distribution marginal(const Distribution& p, const IndexSet& I);

// Conditional law of sites I given `context` on the complement, ordered
// like the complement positions.
ConditionalSlice conditional(const Distribution& p, const IndexSet& I,
                             const std::vector<int>& context);

// E_p D(p_i(.|ctx) || q_i(.|ctx)) over contexts of the remaining sites;
// +infinity when a p-positive context violates absolute continuity.
double avg_site_divergence(const Distribution& p, const Distribution& q,
                           std::size_t i);
// E_p tv^2(p_i(.|ctx), q_i(.|ctx)) over contexts of the remaining sites.
double avg_site_tv_sq(const Distribution& p, const Distribution& q,
                      std::size_t i);

double sum_avg_site_divergence(const Distribution& p, const Distribution& q);
double sum_avg_site_tv_sq(const Distribution& p, const Distribution& q);

// Residual of the averaged chain rule
//   D(p||q) = (1/n) sum_i D(p_i||q_i)
//           + (1/n) sum_i E_{y~p_i} D(pbar_i(.|y) || qbar_i(.|y)).
double chain_expansion_residual(const Distribution& p, const Distribution& q);

// Smallest single site conditional probability over the support of q:
//   alpha = min over q(x) > 0 and sites i of q_i(x_i | xbar_i).
double alpha_constant(const Distribution& q);

// Conditional kernels q_I(.|context) of one joint measure, for any subset
// I of its sites.
class LocalSpecEnsemble {
 public:
  explicit LocalSpecEnsemble(Distribution joint);

  const Distribution& joint() const { return joint_; }
  const ConfigSpace& space() const { return joint_.space(); }

  ConditionalSlice block_conditional(const IndexSet& I,
                                     const std::vector<int>& context) const;

 private:
  Distribution joint_;
};

// Serialization. JSON files are self describing; binary files hold the raw
// weight array ordered by configuration id and need the space supplied.
void save_json(const Distribution& p, const std::string& path);
Distribution load_json(const std::string& path);
void save_binary(const Distribution& p, const std::string& path);
Distribution load_binary(const std::string& path,
                         std::shared_ptr<const ConfigSpace> space);

}  // namespace spinlab
