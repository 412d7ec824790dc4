#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "spinlab/measures.hpp"
#include "spinlab/transport.hpp"

namespace spinlab {

// Enumeration budget for the influence matrix; spaces with more states are
// rejected up front.
inline constexpr std::uint64_t kCouplingEnumCap = std::uint64_t{1} << 20;

// Site influence matrix of a fully supported measure q: entry (k, i) is the
// largest total variation distance between the conditional laws at site i
// under two environments differing only at site k, and the diagonal is zero.
// Exact maxima by exhaustive enumeration of environment pairs. Measures with
// zero weights are rejected: their single site conditionals are not defined
// for every environment, so the maxima would depend on an arbitrary
// completion.
Eigen::MatrixXd coupling_matrix(const Distribution& q);

// Largest singular value, by power iteration on A^T A driven to relative
// tolerance 1e-10 of the Rayleigh quotient.
double spectral_norm(const Eigen::MatrixXd& a);

// Induced l1 operator norm (maximum absolute column sum). Reported for
// comparison only; no bound here consumes it.
double induced_l1_norm(const Eigen::MatrixXd& a);

// Transport constant C = 1 / (1 - s)^2 for a contraction coefficient
// s = ||A||_2 < 1; +infinity when s >= 1, where no constant applies.
double transport_constant(double spectral_norm_a);

// Contraction summary of a reference measure: its influence matrix, the
// matrix norms, the smallest conditional single site weight, and the
// transport constant. `satisfied` records ||A||_2 < 1; `constant` is
// +infinity when that fails.
struct DobrushinReport {
  Eigen::MatrixXd matrix;
  double norm = 0.0;
  double norm_l1 = 0.0;
  double alpha = 0.0;
  double constant = std::numeric_limits<double>::infinity();
  bool satisfied = false;
};

DobrushinReport dobrushin_report(const Distribution& q);

struct SweepOptions {
  // Exhaustive enumeration of blocks and contexts up to this many joint
  // states; larger spaces fall back to seeded sampling.
  std::uint64_t exhaustive_cap = std::uint64_t{1} << 12;
  int sampled_pairs = 256;
  std::uint64_t seed = 2025;
  // Sampled blocks are kept small enough that each conditional law stays
  // below this many states.
  std::uint64_t block_state_cap = std::uint64_t{1} << 12;
  W2Options w2;
};

// The block and context with the largest slack seen during a sweep.
struct SweepWorstCase {
  IndexSet block;
  std::vector<int> context;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct SweepResult {
  double worst_slack = -std::numeric_limits<double>::infinity();
  std::uint64_t checked = 0;
  SweepWorstCase worst;
};

// Checks the blockwise transport inequality
//   W2^2(p_I(.|y), q_I(.|y)) <= C * E[ sum_{i in I} tv^2(p_i, q_i | env) | y ]
// over blocks I and contexts y on the complement, where the right hand side
// averages the squared site conditional distances of full configurations
// drawn from p given the context. Blocks default to every nonempty subset
// and contexts to every one with positive p-mass when the space has at most
// `exhaustive_cap` states; otherwise `sampled_pairs` seeded (block, context)
// pairs are tested, contexts drawn from p. An explicit `blocks` list
// restricts the sweep to those blocks. Returns the worst slack over all
// tested pairs; the left hand side carries the transport solver tolerance,
// so slacks up to opts.w2.tol count as passing. Throws on a p-positive
// context without q-mass.
SweepResult transport_bound_sweep(const Distribution& p,
                                  const Distribution& q, double constant,
                                  const std::vector<IndexSet>& blocks = {},
                                  const SweepOptions& opts = {});

// The two entropy tensorization bounds:
//   D(p||q) <= (4C/alpha) * sum_i E tv^2(p_i, q_i | env)
//           <= ...  and  D(p||q) <= (2C/alpha) * sum_i E D(p_i || q_i | env).
// `tv_form` is NaN when some reference conditional needed by the tv path is
// undefined on a p-positive context; the divergence form is still evaluated
// and is +infinity whenever absolute continuity fails.
struct EntropyTensorization {
  double divergence = 0.0;
  double tv_form = 0.0;
  double divergence_form = 0.0;
  double alpha = 0.0;

  BoundCheck versus_tv() const { return {divergence, tv_form}; }
  BoundCheck versus_divergence() const { return {divergence, divergence_form}; }
};

EntropyTensorization entropy_tensorization(const Distribution& p,
                                           const Distribution& q,
                                           double constant);

// Entropy decay rate of one random scan heat bath sweep.
double entropy_contraction_rate(double alpha, std::size_t n, double constant);

// D(p Gamma || q) against (1 - alpha/(2nC)) * D(p || q) for the random scan
// heat bath Gamma with target q.
BoundCheck entropy_contraction_check(const Distribution& p,
                                     const Distribution& q, double constant);

// (1/n) * D(p Gamma || q) against (4C/alpha) * E(sqrt(p/q), sqrt(p/q)) with
// the closed form Dirichlet energy of the random scan heat bath. Requires p
// absolutely continuous with respect to q.
BoundCheck log_sobolev_check(const Distribution& p, const Distribution& q,
                             double constant);

// tv^2(p, q) against (2/(|X| alpha)^2)^(n + log2 n) * sum_i E tv^2. Requires
// a fully supported q.
BoundCheck tv_tensorization_check(const Distribution& p,
                                  const Distribution& q);

}  // namespace spinlab
