#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "spinlab/measures.hpp"
#include "spinlab/state_space.hpp"

namespace spinlab {

// Raised when an iterative solver exhausts its budget or reaches an
// inconsistent state. Distinct from precondition violations.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint64_t kDefaultPairCap = std::uint64_t{1} << 22;

// Joint law of a pair (Z, U) on one configuration space, stored densely:
// weights(z, u). Rows are the Z marginal, columns the U marginal.
class Coupling {
 public:
  Coupling(std::shared_ptr<const ConfigSpace> space, Eigen::MatrixXd w);

  const ConfigSpace& space() const { return *space_; }
  const Eigen::MatrixXd& weights() const { return w_; }

  Eigen::VectorXd left_marginal() const;
  Eigen::VectorXd right_marginal() const;

  // Pr{Z != U}.
  double disagreement_probability() const;
  // Per site Pr{Z_i != U_i}.
  Eigen::VectorXd site_disagreement() const;
  // Largest absolute deviation of either marginal from the given laws.
  double max_marginal_residual(const Distribution& r,
                               const Distribution& s) const;

 private:
  std::shared_ptr<const ConfigSpace> space_;
  Eigen::MatrixXd w_;
};

// Diagonal mass min(r, s); the leftover couples as the product of the
// normalized residuals, which never touches the diagonal. Achieves
// Pr{Z != U} = tv(r, s) exactly.
Coupling maximal_coupling(const Distribution& r, const Distribution& s);

// Exact minimum cost transport between two nonnegative vectors of equal
// total mass, computed by successive shortest paths with potentials.
// Costs must be finite and nonnegative.
struct TransportPlan {
  struct Entry {
    std::uint32_t from;
    std::uint32_t to;
    double mass;
  };
  std::vector<Entry> entries;
  double cost = 0.0;
};

TransportPlan min_cost_transport(
    const Eigen::VectorXd& supply, const Eigen::VectorXd& demand,
    const std::function<double(std::uint32_t, std::uint32_t)>& cost);

struct W2Options {
  // Certified optimality gap demanded of the squared objective.
  double tol = 1e-7;
  long max_iterations = 100000;
  std::uint64_t pair_cap = kDefaultPairCap;
  bool keep_coupling = true;
};

struct W2Result {
  // sqrt of the squared transport objective of the returned coupling; an
  // upper bound on the true distance.
  double value = 0.0;
  // Certified bound on F(coupling) - min F, in squared units.
  double gap = 0.0;
  // sqrt(sum_i tv(r_i, s_i)^2) from the site marginals; a lower bound.
  double lower_bound = 0.0;
  long iterations = 0;
  Eigen::VectorXd site_disagreement;
  std::optional<Coupling> coupling;
};

// Minimizes F(pi) = sum_i Pr_pi{Z_i != U_i}^2 over couplings of r and s by
// conditional gradient steps. Each descent direction comes from an exact
// transport solve, and the reported gap certifies the objective.
W2Result w2_distance(const Distribution& r, const Distribution& s,
                     const W2Options& options = {});

// sqrt(sum_i tv(r_i, s_i)^2): no coupling can disagree less at any site
// than the site marginals force.
double w2_lower_bound(const Distribution& r, const Distribution& s);

// {W2^2, n tv^2}: the crude bound from a maximal coupling.
BoundCheck w2_vs_tv_bound(const Distribution& r, const Distribution& s,
                          const W2Options& options = {});

// Independent check of w2_distance: plain conditional gradient with exact
// line search from a seeded random feasible start. Returns the best value
// found; it can never drop below the true distance.
double w2_secondary_estimate(const Distribution& r, const Distribution& s,
                             std::uint64_t seed, long iterations = 4000);

// Coupling of two block laws that is maximal simultaneously at every level
// of the nested family J(k, M, i). Greedy construction first; if any level
// misses its total variation target, an exact feasibility program repairs
// it.
struct GoldsteinLevel {
  IndexSet set;
  double tv = 0.0;
  double disagreement = 0.0;
};

struct GoldsteinResult {
  Coupling coupling;
  std::vector<GoldsteinLevel> levels;
  Eigen::VectorXd site_disagreement;
  bool used_lp = false;
};

GoldsteinResult goldstein_coupling(const Distribution& mu,
                                   const Distribution& nu, const Site& k);

// Convenience wrapper: conditions the ensemble on two contexts that differ
// at exactly one site outside M and couples the two block laws.
GoldsteinResult goldstein_coupling(const LocalSpecEnsemble& spec,
                                   const IndexSet& M,
                                   const std::vector<int>& ctx_y,
                                   const std::vector<int>& ctx_z);

}  // namespace spinlab
