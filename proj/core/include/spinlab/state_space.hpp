#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace spinlab {

// A lattice site: an integer tuple of the ambient dimension.
using Site = std::vector<int>;

// Sorted positions into a SiteSet, used to address subsets of sites.
using IndexSet = std::vector<std::size_t>;

// Chebyshev distance max_nu |k_nu - i_nu|.
int rho(const Site& k, const Site& i);

// Finite symbol alphabet {0, 1, ..., size-1}.
class Alphabet {
 public:
  explicit Alphabet(int size);
  int size() const { return size_; }
  bool operator==(const Alphabet& other) const { return size_ == other.size_; }

 private:
  int size_;
};

// Ordered list of distinct sites sharing one dimension. The order fixes the
// digit significance of configuration ids and breaks all geometric ties.
class SiteSet {
 public:
  SiteSet(int dim, std::vector<Site> sites);

  // Sites (1), (2), ..., (n) on the one dimensional lattice.
  static SiteSet chain(int n);
  // All integer tuples of the inclusive box [lo_1,hi_1] x ... x [lo_d,hi_d],
  // ordered lexicographically with the first coordinate fastest.
  static SiteSet box(const std::vector<std::pair<int, int>>& ranges);

  int dim() const { return dim_; }
  std::size_t size() const { return sites_.size(); }
  const Site& site(std::size_t j) const { return sites_[j]; }
  const std::vector<Site>& sites() const { return sites_; }

  std::optional<std::size_t> index_of(const Site& s) const;
  bool contains(const Site& s) const { return index_of(s).has_value(); }

  // New SiteSet holding the selected sites, order preserved.
  SiteSet subset(const IndexSet& indices) const;
  // Positions not listed in `indices` (which must be sorted).
  IndexSet complement(const IndexSet& indices) const;

  bool operator==(const SiteSet& other) const;

 private:
  int dim_;
  std::vector<Site> sites_;
};

inline constexpr std::uint64_t kDefaultStateCap = std::uint64_t{1} << 24;

// Product space X^Lambda with mixed radix configuration ids. The first site
// is the least significant digit: id = sum_j x_j * |X|^j.
class ConfigSpace {
 public:
  ConfigSpace(Alphabet alphabet, SiteSet sites,
              std::uint64_t state_cap = kDefaultStateCap);

  const Alphabet& alphabet() const { return alphabet_; }
  const SiteSet& sites() const { return sites_; }
  std::size_t num_sites() const { return sites_.size(); }
  std::uint64_t num_states() const { return num_states_; }
  std::uint64_t stride(std::size_t j) const { return strides_[j]; }

  std::uint64_t encode(std::span<const int> symbols) const;
  std::vector<int> decode(std::uint64_t id) const;
  void decode_into(std::uint64_t id, std::vector<int>& out) const;

  int symbol_at(std::uint64_t id, std::size_t j) const;
  std::uint64_t with_symbol(std::uint64_t id, std::size_t j, int x) const;

  // Combines symbols on the subset I (sorted positions) with symbols on its
  // complement into a full configuration id. `sub` is ordered like I and
  // `ctx` like the complement.
  std::uint64_t combine(const IndexSet& I, std::span<const int> sub,
                        std::span<const int> ctx) const;

  bool same_shape(const ConfigSpace& other) const {
    return alphabet_ == other.alphabet_ && sites_ == other.sites_;
  }

 private:
  Alphabet alphabet_;
  SiteSet sites_;
  std::uint64_t num_states_;
  std::vector<std::uint64_t> strides_;
};

// All m-sided lattice cubes (every integer translate) meeting a site set,
// each stored as the positions of the covered sites. Translates with equal
// intersections are kept as separate entries; the contraction rates divide
// by the translate count.
struct CubeFamily {
  int m = 1;
  std::vector<Site> corners;
  std::vector<IndexSet> cubes;

  std::size_t size() const { return cubes.size(); }
};

CubeFamily cubes_intersecting(const SiteSet& lambda, int m);

// J(k, M, i) = { positions j in M : rho(k, site_j) >= rho(k, site_i) }.
// Growing rho(k, i) shrinks the set, so the family is nested.
IndexSet j_set(const Site& k, const SiteSet& M, std::size_t i);

}  // namespace spinlab
