#include "spinlab/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>

namespace spinlab {

int rho(const Site& k, const Site& i) {
  if (k.size() != i.size()) {
    throw std::invalid_argument("rho: dimension mismatch");
  }
  int d = 0;
  for (std::size_t nu = 0; nu < k.size(); ++nu) {
    d = std::max(d, std::abs(k[nu] - i[nu]));
  }
  return d;
}

Alphabet::Alphabet(int size) : size_(size) {
  if (size < 2) {
    throw std::invalid_argument("Alphabet: need at least two symbols");
  }
}

SiteSet::SiteSet(int dim, std::vector<Site> sites)
    : dim_(dim), sites_(std::move(sites)) {
  if (dim < 1) {
    throw std::invalid_argument("SiteSet: dimension must be positive");
  }
  if (sites_.empty()) {
    throw std::invalid_argument("SiteSet: empty site list");
  }
  std::set<Site> seen;
  for (const Site& s : sites_) {
    if (static_cast<int>(s.size()) != dim) {
      throw std::invalid_argument("SiteSet: site dimension mismatch");
    }
    if (!seen.insert(s).second) {
      throw std::invalid_argument("SiteSet: duplicate site");
    }
  }
}

SiteSet SiteSet::chain(int n) {
  if (n < 1) {
    throw std::invalid_argument("SiteSet::chain: need n >= 1");
  }
  std::vector<Site> sites;
  sites.reserve(static_cast<std::size_t>(n));
  for (int i = 1; i <= n; ++i) {
    sites.push_back({i});
  }
  return SiteSet(1, std::move(sites));
}

SiteSet SiteSet::box(const std::vector<std::pair<int, int>>& ranges) {
  if (ranges.empty()) {
    throw std::invalid_argument("SiteSet::box: empty range list");
  }
  for (const auto& [lo, hi] : ranges) {
    if (lo > hi) {
      throw std::invalid_argument("SiteSet::box: empty coordinate range");
    }
  }
  const int d = static_cast<int>(ranges.size());
  std::vector<Site> sites;
  Site cur(ranges.size());
  for (std::size_t nu = 0; nu < ranges.size(); ++nu) {
    cur[nu] = ranges[nu].first;
  }
  while (true) {
    sites.push_back(cur);
    std::size_t nu = 0;
    while (nu < ranges.size()) {
      if (cur[nu] < ranges[nu].second) {
        ++cur[nu];
        break;
      }
      cur[nu] = ranges[nu].first;
      ++nu;
    }
    if (nu == ranges.size()) break;
  }
  return SiteSet(d, std::move(sites));
}

std::optional<std::size_t> SiteSet::index_of(const Site& s) const {
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    if (sites_[j] == s) return j;
  }
  return std::nullopt;
}

SiteSet SiteSet::subset(const IndexSet& indices) const {
  std::vector<Site> picked;
  picked.reserve(indices.size());
  for (std::size_t j : indices) {
    if (j >= sites_.size()) {
      throw std::out_of_range("SiteSet::subset: index out of range");
    }
    picked.push_back(sites_[j]);
  }
  return SiteSet(dim_, std::move(picked));
}

IndexSet SiteSet::complement(const IndexSet& indices) const {
  IndexSet out;
  out.reserve(sites_.size() - indices.size());
  std::size_t next = 0;
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    if (next < indices.size() && indices[next] == j) {
      ++next;
      continue;
    }
    out.push_back(j);
  }
  if (next != indices.size()) {
    throw std::invalid_argument("SiteSet::complement: indices not sorted");
  }
  return out;
}

bool SiteSet::operator==(const SiteSet& other) const {
  return dim_ == other.dim_ && sites_ == other.sites_;
}

ConfigSpace::ConfigSpace(Alphabet alphabet, SiteSet sites,
                         std::uint64_t state_cap)
    : alphabet_(alphabet), sites_(std::move(sites)) {
  const auto base = static_cast<std::uint64_t>(alphabet_.size());
  std::uint64_t n = 1;
  strides_.reserve(sites_.size());
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    strides_.push_back(n);
    if (n > state_cap / base) {
      throw std::invalid_argument("ConfigSpace: state count exceeds cap");
    }
    n *= base;
  }
  if (n > state_cap) {
    throw std::invalid_argument("ConfigSpace: state count exceeds cap");
  }
  num_states_ = n;
}

std::uint64_t ConfigSpace::encode(std::span<const int> symbols) const {
  if (symbols.size() != sites_.size()) {
    throw std::invalid_argument("ConfigSpace::encode: wrong symbol count");
  }
  std::uint64_t id = 0;
  for (std::size_t j = 0; j < symbols.size(); ++j) {
    const int x = symbols[j];
    if (x < 0 || x >= alphabet_.size()) {
      throw std::invalid_argument("ConfigSpace::encode: symbol out of range");
    }
    id += static_cast<std::uint64_t>(x) * strides_[j];
  }
  return id;
}

std::vector<int> ConfigSpace::decode(std::uint64_t id) const {
  std::vector<int> out(sites_.size());
  decode_into(id, out);
  return out;
}

void ConfigSpace::decode_into(std::uint64_t id, std::vector<int>& out) const {
  if (id >= num_states_) {
    throw std::out_of_range("ConfigSpace::decode: id out of range");
  }
  out.resize(sites_.size());
  const auto base = static_cast<std::uint64_t>(alphabet_.size());
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    out[j] = static_cast<int>(id % base);
    id /= base;
  }
}

int ConfigSpace::symbol_at(std::uint64_t id, std::size_t j) const {
  const auto base = static_cast<std::uint64_t>(alphabet_.size());
  return static_cast<int>((id / strides_[j]) % base);
}

std::uint64_t ConfigSpace::with_symbol(std::uint64_t id, std::size_t j,
                                       int x) const {
  const int old = symbol_at(id, j);
  return id + (static_cast<std::int64_t>(x) - old) *
                  static_cast<std::int64_t>(strides_[j]);
}

std::uint64_t ConfigSpace::combine(const IndexSet& I, std::span<const int> sub,
                                   std::span<const int> ctx) const {
  if (sub.size() != I.size() || sub.size() + ctx.size() != sites_.size()) {
    throw std::invalid_argument("ConfigSpace::combine: size mismatch");
  }
  std::uint64_t id = 0;
  std::size_t next = 0;
  std::size_t c = 0;
  for (std::size_t j = 0; j < sites_.size(); ++j) {
    int x;
    if (next < I.size() && I[next] == j) {
      x = sub[next];
      ++next;
    } else {
      x = ctx[c++];
    }
    if (x < 0 || x >= alphabet_.size()) {
      throw std::invalid_argument("ConfigSpace::combine: symbol out of range");
    }
    id += static_cast<std::uint64_t>(x) * strides_[j];
  }
  return id;
}

CubeFamily cubes_intersecting(const SiteSet& lambda, int m) {
  if (m < 1) {
    throw std::invalid_argument("cubes_intersecting: need m >= 1");
  }
  const int d = lambda.dim();
  std::vector<int> lo(d), hi(d);
  for (int nu = 0; nu < d; ++nu) {
    lo[nu] = hi[nu] = lambda.site(0)[nu];
  }
  for (const Site& s : lambda.sites()) {
    for (int nu = 0; nu < d; ++nu) {
      lo[nu] = std::min(lo[nu], s[nu]);
      hi[nu] = std::max(hi[nu], s[nu]);
    }
  }

  CubeFamily family;
  family.m = m;
  Site corner(d);
  for (int nu = 0; nu < d; ++nu) {
    corner[nu] = lo[nu] - (m - 1);
  }
  while (true) {
    IndexSet hit;
    for (std::size_t j = 0; j < lambda.size(); ++j) {
      const Site& s = lambda.site(j);
      bool inside = true;
      for (int nu = 0; nu < d; ++nu) {
        if (s[nu] < corner[nu] || s[nu] > corner[nu] + (m - 1)) {
          inside = false;
          break;
        }
      }
      if (inside) hit.push_back(j);
    }
    if (!hit.empty()) {
      family.corners.push_back(corner);
      family.cubes.push_back(std::move(hit));
    }

    int nu = 0;
    while (nu < d) {
      if (corner[nu] < hi[nu]) {
        ++corner[nu];
        break;
      }
      corner[nu] = lo[nu] - (m - 1);
      ++nu;
    }
    if (nu == d) break;
  }
  return family;
}

IndexSet j_set(const Site& k, const SiteSet& M, std::size_t i) {
  if (i >= M.size()) {
    throw std::out_of_range("j_set: index out of range");
  }
  if (M.contains(k)) {
    throw std::invalid_argument("j_set: k must lie outside M");
  }
  const int r = rho(k, M.site(i));
  IndexSet out;
  for (std::size_t j = 0; j < M.size(); ++j) {
    if (rho(k, M.site(j)) >= r) out.push_back(j);
  }
  return out;
}

}  // namespace spinlab
