#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "spinlab/measures.hpp"
#include "spinlab/state_space.hpp"

namespace spinlab {

// Translation invariant pair interaction with finite range in the
// Chebyshev metric. Weights are exp(-beta H) with
//   ising:  H = -J sum_pairs s_k s_i - h sum_i s_i,   s = 2x - 1, |X| = 2
//   potts:  H = -J sum_pairs delta(x_k, x_i) - h sum_i delta(x_i, 0).
// Interacting pairs lie within `range` in the adjacency metric (L1 by
// default, so range 1 on Z^2 means the four axis neighbours).
struct PairPotential {
  enum class Kind { ising, potts };
  enum class Adjacency { l1, chebyshev };

  Kind kind = Kind::ising;
  Adjacency adjacency = Adjacency::l1;
  int range = 1;
  double beta = 0.0;
  double coupling = 1.0;
  double field = 0.0;
};

// Finite box with a fixed collar: the exact conditional law of the box
// given the collar symbols, and block conditionals inside it.
class LatticeModel {
 public:
  // collar_width 0 gives a free boundary (empty collar). A fixed boundary
  // pins every collar site to boundary_symbol; the collar must be at least
  // as wide as the interaction range to screen everything farther away.
  LatticeModel(Alphabet alphabet, SiteSet box, PairPotential potential,
               int collar_width = 0, std::optional<int> boundary_symbol = {});

  const Alphabet& alphabet() const { return alphabet_; }
  const SiteSet& box() const { return box_; }
  const SiteSet* collar() const { return collar_ ? &*collar_ : nullptr; }
  const PairPotential& potential() const { return potential_; }
  const std::vector<int>& boundary() const { return boundary_; }
  std::shared_ptr<const ConfigSpace> box_space() const { return space_; }

  // q_box(.|boundary collar symbols).
  Distribution joint() const;
  Distribution joint(const std::vector<int>& collar_symbols) const;

  // Gibbs conditional of the box positions M given symbols on the other
  // box sites (ordered like the complement) and the stored boundary.
  Distribution block_conditional(const IndexSet& M,
                                 const std::vector<int>& rest) const;
  Distribution block_conditional(const IndexSet& M,
                                 const std::vector<int>& rest,
                                 const std::vector<int>& collar_symbols) const;

 private:
  double energy(const std::vector<int>& box_symbols,
                const std::vector<int>& collar_symbols) const;

  Alphabet alphabet_;
  SiteSet box_;
  PairPotential potential_;
  std::optional<SiteSet> collar_;
  std::vector<int> boundary_;
  std::shared_ptr<const ConfigSpace> space_;
  // Precomputed interacting pairs as position lists; collar positions are
  // offset by the box size.
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

// Seeded measure with full support: min_mass/|states| floor plus a random
// bulk. min_mass = 1 gives the uniform measure.
Distribution random_spec(std::uint64_t seed,
                         std::shared_ptr<const ConfigSpace> space,
                         double min_mass);

// Product of seeded site marginals, each with the min_mass floor.
Distribution product_spec(std::uint64_t seed,
                          std::shared_ptr<const ConfigSpace> space,
                          double min_mass);

// p = (1 - eps) q + eps r with r a seeded measure supported inside
// supp(q). eps = 0 returns q itself.
Distribution perturb(const Distribution& q, double eps, std::uint64_t seed);

}  // namespace spinlab
