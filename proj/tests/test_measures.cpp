#include <doctest.h>

#include <cmath>
#include <limits>
#include <memory>

#include "spinlab/measures.hpp"
#include "spinlab/state_space.hpp"

using namespace spinlab;

namespace {

std::shared_ptr<const ConfigSpace> chain_space(int alphabet, int n) {
  return std::make_shared<const ConfigSpace>(Alphabet(alphabet),
                                             SiteSet::chain(n));
}

Distribution make(std::shared_ptr<const ConfigSpace> space,
                  std::vector<double> w) {
  Eigen::VectorXd v =
      Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  return Distribution(std::move(space), std::move(v));
}

}  // namespace

TEST_CASE("distribution validates weights") {
  auto space = chain_space(2, 1);
  CHECK_THROWS_AS(make(space, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(make(space, {-0.1, 1.1}), std::invalid_argument);
  CHECK_NOTHROW(make(space, {0.25, 0.75}));
  CHECK(Distribution::uniform(space)[0] == doctest::Approx(0.5));
  CHECK(Distribution::point_mass(space, 1)[1] == 1.0);
}

TEST_CASE("total variation and entropies on one site") {
  auto space = chain_space(2, 1);
  const Distribution u = make(space, {0.5, 0.5});
  const Distribution v = make(space, {0.25, 0.75});
  const Distribution d = make(space, {1.0, 0.0});

  CHECK(tv_distance(u, v) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(relative_entropy(d, u) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(relative_entropy(u, d) == std::numeric_limits<double>::infinity());
  CHECK(relative_entropy(u, u) == 0.0);

  const double affinity = std::sqrt(0.125) + std::sqrt(0.375);
  CHECK(hellinger_affinity(u, v) == doctest::Approx(affinity).epsilon(1e-14));

  const double h = hellinger_distance(u, v);
  CHECK(h * h ==
        doctest::Approx(2.0 * (1.0 - hellinger_affinity(u, v))).epsilon(1e-12));
}

TEST_CASE("two point inequalities hold with frozen values") {
  auto space = chain_space(2, 1);
  const Distribution u = make(space, {0.5, 0.5});
  const Distribution r = make(space, {0.75, 0.25});
  const Distribution d = make(space, {1.0, 0.0});

  SUBCASE("tv^2 against 1 - A^2") {
    const BoundCheck b = tv_sq_vs_affinity(d, u);
    CHECK(b.lhs == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b.rhs == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b.holds());
  }
  SUBCASE("pinsker") {
    const BoundCheck b = pinsker(d, u);
    CHECK(b.lhs == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(b.rhs == doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-14));
    CHECK(b.holds());
  }
  SUBCASE("reverse pinsker with alpha_s = 1/2") {
    const BoundCheck b = reverse_pinsker(r, u);
    CHECK(b.lhs == doctest::Approx(0.13081203594113668).epsilon(1e-12));
    CHECK(b.rhs == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(b.holds());
    CHECK_THROWS_AS(reverse_pinsker(u, d), std::domain_error);
  }
}

TEST_CASE("marginals and conditionals use strides correctly") {
  auto space = chain_space(2, 2);
  const Distribution p = make(space, {0.1, 0.2, 0.3, 0.4});

  const Distribution m0 = marginal(p, {0});
  CHECK(m0[0] == doctest::Approx(0.4).epsilon(1e-14));
  CHECK(m0[1] == doctest::Approx(0.6).epsilon(1e-14));

  const Distribution m1 = marginal(p, {1});
  CHECK(m1[0] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(m1[1] == doctest::Approx(0.7).epsilon(1e-14));

  const ConditionalSlice c = conditional(p, {1}, {0});
  REQUIRE(c.defined());
  CHECK(c.context_mass == doctest::Approx(0.4).epsilon(1e-14));
  CHECK((*c.law)[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK((*c.law)[1] == doctest::Approx(0.75).epsilon(1e-14));

  SUBCASE("zero mass context is flagged undefined") {
    const Distribution z = make(space, {0.0, 0.0, 0.6, 0.4});
    const ConditionalSlice bad = conditional(z, {0}, {0});
    CHECK_FALSE(bad.defined());
    CHECK(bad.context_mass == 0.0);
  }
  SUBCASE("marginal of marginal equals direct marginal") {
    auto big = chain_space(3, 4);
    Eigen::VectorXd w(big->num_states());
    double t = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w[i] = 1.0 + std::sin(0.37 * static_cast<double>(i) + 0.2);
      t += w[i];
    }
    w /= t;
    const Distribution q(big, w);
    const Distribution direct = marginal(q, {1, 3});
    const Distribution nested = marginal(marginal(q, {0, 1, 3}), {1, 2});
    for (std::uint64_t id = 0; id < direct.size(); ++id) {
      CHECK(direct[id] == doctest::Approx(nested[id]).epsilon(1e-12));
    }
  }
}

TEST_CASE("site averaged divergences match a direct oracle") {
  auto space = chain_space(2, 2);
  const Distribution p = make(space, {0.1, 0.2, 0.3, 0.4});
  const Distribution q = make(space, {0.25, 0.25, 0.25, 0.25});

  // Site 0 conditionals given the symbol at site 1.
  double expected_d = 0.0;
  double expected_t = 0.0;
  for (int ctx = 0; ctx < 2; ++ctx) {
    const double p0 = p[static_cast<std::uint64_t>(2 * ctx)];
    const double p1 = p[static_cast<std::uint64_t>(2 * ctx + 1)];
    const double wp = p0 + p1;
    const double a0 = p0 / wp, a1 = p1 / wp;
    expected_d += wp * (a0 * std::log(a0 / 0.5) + a1 * std::log(a1 / 0.5));
    const double tv = 0.5 * (std::abs(a0 - 0.5) + std::abs(a1 - 0.5));
    expected_t += wp * tv * tv;
  }
  CHECK(avg_site_divergence(p, q, 0) ==
        doctest::Approx(expected_d).epsilon(1e-13));
  CHECK(avg_site_tv_sq(p, q, 0) == doctest::Approx(expected_t).epsilon(1e-13));

  SUBCASE("absolute continuity violations surface") {
    const Distribution bad = make(space, {0.0, 0.5, 0.25, 0.25});
    CHECK(avg_site_divergence(p, bad, 0) ==
          std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("averaged chain rule is an identity") {
  SUBCASE("generic full support measures") {
    auto space = chain_space(2, 3);
    const Distribution p =
        make(space, {0.05, 0.1, 0.15, 0.2, 0.05, 0.15, 0.1, 0.2});
    const Distribution q =
        make(space, {0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125, 0.125});
    CHECK(chain_expansion_residual(p, q) < 1e-12);
  }
  SUBCASE("single site") {
    auto space = chain_space(3, 1);
    const Distribution p = make(space, {0.2, 0.3, 0.5});
    const Distribution q = make(space, {0.5, 0.25, 0.25});
    CHECK(chain_expansion_residual(p, q) < 1e-15);
  }
  SUBCASE("product measures split site by site") {
    auto space = chain_space(2, 2);
    // p = (0.3, 0.7) x (0.6, 0.4), q uniform.
    const Distribution p =
        make(space, {0.18, 0.42, 0.12, 0.28});
    const Distribution q = make(space, {0.25, 0.25, 0.25, 0.25});
    CHECK(chain_expansion_residual(p, q) < 1e-13);
  }
}

TEST_CASE("alpha constant") {
  SUBCASE("uniform gives 1/|X|") {
    auto space = chain_space(3, 2);
    CHECK(alpha_constant(Distribution::uniform(space)) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("single site gives the smallest mass") {
    auto space = chain_space(2, 1);
    CHECK(alpha_constant(make(space, {0.3, 0.7})) ==
          doctest::Approx(0.3).epsilon(1e-14));
  }
  SUBCASE("zero weight configurations are skipped") {
    auto space = chain_space(2, 1);
    CHECK(alpha_constant(make(space, {0.0, 1.0})) == doctest::Approx(1.0));
  }
}

TEST_CASE("ensemble conditionals agree with direct slices") {
  auto space = chain_space(2, 3);
  const Distribution q =
      make(space, {0.05, 0.1, 0.15, 0.2, 0.05, 0.15, 0.1, 0.2});
  const LocalSpecEnsemble ensemble(q);
  const ConditionalSlice a = ensemble.block_conditional({0, 2}, {1});
  const ConditionalSlice b = conditional(q, {0, 2}, {1});
  REQUIRE(a.defined());
  REQUIRE(b.defined());
  for (std::uint64_t id = 0; id < a.law->size(); ++id) {
    CHECK((*a.law)[id] == doctest::Approx((*b.law)[id]).epsilon(1e-15));
  }
}

TEST_CASE("json and binary round trips") {
  auto space = chain_space(2, 2);
  const Distribution p = make(space, {0.1, 0.2, 0.3, 0.4});

  save_json(p, "measure_roundtrip.json");
  const Distribution pj = load_json("measure_roundtrip.json");
  CHECK(pj.space().same_shape(p.space()));
  for (std::uint64_t id = 0; id < p.size(); ++id) {
    CHECK(pj[id] == doctest::Approx(p[id]).epsilon(1e-15));
  }

  save_binary(p, "measure_roundtrip.bin");
  const Distribution pb = load_binary("measure_roundtrip.bin", space);
  for (std::uint64_t id = 0; id < p.size(); ++id) {
    CHECK(pb[id] == p[id]);
  }
}
