#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "spinlab/dobrushin.hpp"
#include "spinlab/measures.hpp"
#include "spinlab/models.hpp"
#include "spinlab/samplers.hpp"
#include "spinlab/state_space.hpp"
#include "spinlab/transport.hpp"

namespace spinlab {

// Decay profile of boundary influence. phi(r) bounds the total variation
// shift of any block conditional when a single site at Chebyshev distance r
// outside the conditioning window changes its symbol.
struct MixingProfile {
  // Largest observed shift at each distance.
  std::map<int, double> empirical;
  // Optional closed form amplitude * exp(-decay * r). The profile evaluates
  // to the max of both branches, so a fitted form can only loosen bounds,
  // never tighten them below the data.
  std::optional<std::pair<double, double>> analytic;
  // True when every block/outside-site/context triple of the source model
  // was scanned. A sampled profile may understate phi.
  bool exhaustive = false;
  std::uint64_t evaluations = 0;

  // Profile value at distance r >= 1, clamped to [0, 1]. Distances beyond
  // the recorded range fall back to the analytic branch alone (or to zero),
  // which is optimistic for sampled profiles.
  double operator()(int r) const;
  int max_observed() const;
};

MixingProfile exponential_profile(double amplitude, double decay);

struct PhiEstimateOptions {
  int budget = 256;
  std::uint64_t seed = 7;
};

// Measures the decay profile of a lattice model: for block/outside-site/
// context triples, records the total variation between the two block laws
// obtained by flipping one collar symbol, binned by the distance from the
// flipped site to the block. Scans exhaustively over all nonempty blocks,
// collar sites, and collar contexts when the box has at most 9 sites, the
// alphabet is binary, and the context count per collar site fits 2^11;
// otherwise draws `budget` seeded triples. A model without a collar yields
// the empty (identically zero) profile.
MixingProfile estimate_phi(const LatticeModel& model,
                           const PhiEstimateOptions& opts = {});

struct PhiNorm {
  double value = 0.0;     // explicit sum plus tail
  int radius = 0;         // last distance summed explicitly
  double tail = 0.0;      // analytic remainder beyond the radius
  bool truncated = false; // true when no analytic branch covers the rest
};

// Row sum of the influence kernel phi(rho(k, i)) over all other sites of
// the ambient lattice: sum_{r >= 1} ((2r+1)^dim - (2r-1)^dim) phi(r).
// The explicit sum runs to max(radius, last observed bin); a convergent
// analytic branch supplies the remainder, a nonpositive decay rate with
// positive amplitude throws.
PhiNorm phi_norm(const MixingProfile& profile, int dim, int radius);

struct ThetaParams {
  int m = 1;
  int r_star = 1;       // cut radius attaining the minimum
  double theta = 0.0;
  double norm = 0.0;    // phi norm feeding the linear term
  bool usable = false;  // theta < 1
};

// theta(m) = min over cut radii R in [1, r_cap] of
//   norm * dim * R / m + 2 dim * sum_{r >= R} (2r+1)^(dim-1) phi(r).
// Nonincreasing in m; the block decomposition bounds need theta < 1.
ThetaParams theta_m(const MixingProfile& profile, int dim, int m,
                    int r_cap = 64);

// Linear term alone, valid in place of theta(m) when the profile vanishes
// beyond the interaction range: norm * dim * range / m.
double theta_finite_range(const MixingProfile& profile, int dim, int m,
                          int range);

struct CubeInfluence {
  // matrix(k, i) = phi(rho(k, i)) * #{cubes covering i but not k}.
  Eigen::MatrixXd matrix;
  // Raw separating-cube counts, same indexing.
  Eigen::MatrixXd counts;
  double norm = 0.0;        // largest singular value of the matrix
  double norm_bound = 0.0;  // m^dim * theta
  // Largest violation of the per-entry bound
  //   matrix(k, i) <= m^dim * phi(rho) * min(dim * rho / m, 1);
  // nonpositive when the counting geometry is right.
  double entry_slack = 0.0;
  // Same for the pure counts against min(dim * m^(dim-1) * rho, m^dim).
  double count_slack = 0.0;
  ThetaParams theta;
};

// Influence matrix of the cube sweep on the given sites, built by exact
// enumeration of the m-cubes meeting the set.
CubeInfluence cube_influence(const MixingProfile& profile, int m,
                             const SiteSet& lambda, int r_cap = 64);

struct BlockDecomposition {
  double lhs = 0.0;  // squared transport distance to the reference
  // (1 / m^dim) / (1 - theta)^2 * sum over cubes of E W2^2 of cube laws.
  double mid = 0.0;
  // 1 / (1 - theta)^2 * sum over cubes of E tv^2 of cube laws.
  double rhs = 0.0;
  double sum_w2 = 0.0;  // raw cube sum, no prefactor
  double sum_tv = 0.0;
  ThetaParams theta;
  double theta_used = 0.0;  // override-aware value in the prefactors
  std::size_t cubes = 0;
  bool applicable = false;  // theta_used < 1; mid and rhs are NaN otherwise

  BoundCheck first() const { return {lhs, mid}; }
  BoundCheck second() const { return {mid, rhs}; }
};

// Two-step transport bound through the cube decomposition: compares the
// squared distance between p and the reference with the expected squared
// distances and total variations of the cube conditionals, expectations
// over contexts drawn from p. Duplicate cube intersections count once per
// translate. theta_override substitutes the finite range linear term.
BlockDecomposition block_decomposition_check(
    const Distribution& p, const Distribution& q, const MixingProfile& profile,
    int m, const W2Options& w2 = {},
    std::optional<double> theta_override = {});

// Uniform mixture of block refresh kernels, one per m-cube meeting the
// support sites of q. Reversible with respect to q.
std::shared_ptr<const MixtureKernel> cube_sweep_kernel(const Distribution& q,
                                                       int m);

struct BlockContraction {
  double worst_ratio = 0.0;
  double rate = 1.0;  // 1 - (m^dim / cubes) * (1 - theta)
  ThetaParams theta;
  std::size_t cubes = 0;
  std::size_t tested = 0;
  std::size_t skipped = 0;  // degenerate pairs with zero distance
};

// Empirical contraction factor of the cube sweep kernel over seeded random
// measure pairs, reported against the decomposition rate.
BlockContraction block_contraction_sweep(const Distribution& q,
                                         const MixingProfile& profile, int m,
                                         int pairs, std::uint64_t seed = 11,
                                         const W2Options& w2 = {});

struct MixingConstant {
  int m = 1;      // block side used by the constant
  int m_min = 1;  // smallest usable side found by the scan
  ThetaParams theta;
  double value = std::numeric_limits<double>::infinity();
};

// Transport constant of a mixing profile:
//   C(m) = m^dim / (1 - theta(m))^2 * (2 / (|X| alpha)^2)^(m + log2 m).
// m = 0 picks the smallest side with theta < 1; the scan over sides up to
// m_cap throws when none is usable.
MixingConstant mixing_constant(const MixingProfile& profile, int dim, int m,
                               double alpha, int alphabet_size,
                               int m_cap = 16);

struct MixingEntropyBound {
  MixingConstant constant;
  EntropyTensorization tensorization;
  BoundCheck bound;  // divergence vs (4 C / alpha) * sum of site tv^2
};

// End to end entropy bound with the mixing constant: divergence of p from
// the reference against the tv tensorization form at C = C(m).
MixingEntropyBound mixing_entropy_check(const Distribution& p,
                                        const Distribution& q,
                                        const MixingProfile& profile, int m = 0,
                                        int m_cap = 16);

}  // namespace spinlab
