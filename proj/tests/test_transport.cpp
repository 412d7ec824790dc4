#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "spinlab/linprog.hpp"
#include "spinlab/measures.hpp"
#include "spinlab/models.hpp"
#include "spinlab/numeric.hpp"
#include "spinlab/state_space.hpp"
#include "spinlab/transport.hpp"

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

double simplex_transport_cost(const Eigen::VectorXd& supply,
                              const Eigen::VectorXd& demand,
                              const Eigen::MatrixXd& cost) {
  const Eigen::Index ns = supply.size();
  const Eigen::Index nd = demand.size();
  LinearProgram lp;
  lp.A = Eigen::MatrixXd::Zero(ns + nd, ns * nd);
  lp.b = Eigen::VectorXd(ns + nd);
  lp.c = Eigen::VectorXd(ns * nd);
  for (Eigen::Index i = 0; i < ns; ++i) {
    for (Eigen::Index j = 0; j < nd; ++j) {
      lp.A(i, i * nd + j) = 1.0;
      lp.A(ns + j, i * nd + j) = 1.0;
      lp.c[i * nd + j] = cost(i, j);
    }
  }
  lp.b.head(ns) = supply;
  lp.b.tail(nd) = demand;
  const LpResult res = solve_lp(lp);
  REQUIRE(res.status == LpStatus::optimal);
  return res.objective;
}

}  // namespace

TEST_CASE("maximal coupling attains the total variation") {
  auto space = chain_space(3, 1);
  const Distribution r = make(space, {0.5, 0.3, 0.2});
  const Distribution s = make(space, {0.2, 0.5, 0.3});

  const Coupling c = maximal_coupling(r, s);
  CHECK(c.weights()(0, 0) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(c.weights()(1, 1) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(c.weights()(2, 2) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(c.weights()(0, 1) == doctest::Approx(0.2).epsilon(1e-13));
  CHECK(c.weights()(0, 2) == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(c.weights()(1, 0) == 0.0);

  CHECK(c.disagreement_probability() ==
        doctest::Approx(tv_distance(r, s)).epsilon(1e-13));
  CHECK(c.max_marginal_residual(r, s) <= 1e-13);
  CHECK(c.site_disagreement()[0] ==
        doctest::Approx(tv_distance(r, s)).epsilon(1e-13));
}

TEST_CASE("maximal coupling of a measure with itself is diagonal") {
  auto space = chain_space(2, 2);
  const Distribution r = make(space, {0.1, 0.2, 0.3, 0.4});
  const Coupling c = maximal_coupling(r, r);
  CHECK(c.disagreement_probability() == 0.0);
  CHECK(c.max_marginal_residual(r, r) <= 1e-15);
}

TEST_CASE("coupling rejects negative weights") {
  auto space = chain_space(2, 1);
  Eigen::MatrixXd w(2, 2);
  w << 0.6, -0.1, 0.1, 0.4;
  CHECK_THROWS_AS(Coupling(space, w), std::invalid_argument);
}

TEST_CASE("exact transport matches the simplex oracle") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const Eigen::Index ns = 6;
    const Eigen::Index nd = 7;
    Eigen::VectorXd supply(ns);
    Eigen::VectorXd demand(nd);
    for (Eigen::Index i = 0; i < ns; ++i) supply[i] = rng.uniform(0.01, 1.0);
    for (Eigen::Index j = 0; j < nd; ++j) demand[j] = rng.uniform(0.01, 1.0);
    supply /= supply.sum();
    demand /= demand.sum();
    Eigen::MatrixXd cost(ns, nd);
    for (Eigen::Index i = 0; i < ns; ++i)
      for (Eigen::Index j = 0; j < nd; ++j)
        cost(i, j) = std::round(rng.uniform(0.0, 10.0)) / 10.0;

    const TransportPlan plan = min_cost_transport(
        supply, demand,
        [&](std::uint32_t a, std::uint32_t b) { return cost(a, b); });

    CHECK(plan.cost ==
          doctest::Approx(simplex_transport_cost(supply, demand, cost))
              .epsilon(1e-10));

    Eigen::VectorXd row = Eigen::VectorXd::Zero(ns);
    Eigen::VectorXd col = Eigen::VectorXd::Zero(nd);
    for (const auto& e : plan.entries) {
      row[e.from] += e.mass;
      col[e.to] += e.mass;
      CHECK(e.mass > 0.0);
    }
    CHECK((row - supply).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK((col - demand).lpNorm<Eigen::Infinity>() <= 1e-12);
    CHECK(plan.entries.size() <=
          static_cast<std::size_t>(ns + nd));
  }
}

TEST_CASE("exact transport moves point mass along the line") {
  Eigen::VectorXd supply(3);
  supply << 1.0, 0.0, 0.0;
  Eigen::VectorXd demand(3);
  demand << 0.0, 0.0, 1.0;
  const TransportPlan plan = min_cost_transport(
      supply, demand, [](std::uint32_t a, std::uint32_t b) {
        return std::abs(static_cast<double>(a) - static_cast<double>(b));
      });
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0].from == 0);
  CHECK(plan.entries[0].to == 2);
  CHECK(plan.cost == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("w2 equals total variation on a single site") {
  auto space = chain_space(4, 1);
  const Distribution r = make(space, {0.4, 0.3, 0.2, 0.1});
  const Distribution s = make(space, {0.1, 0.2, 0.3, 0.4});
  W2Options opts;
  opts.tol = 1e-12;
  const W2Result res = w2_distance(r, s, opts);
  CHECK(res.value == doctest::Approx(tv_distance(r, s)).epsilon(1e-10));
  CHECK(res.gap <= opts.tol);
}

TEST_CASE("w2 reaches the site bound on product measures") {
  W2Options opts;
  opts.tol = 1e-10;
  for (std::uint64_t seed : {3u, 17u}) {
    auto space = chain_space(2, 4);
    const Distribution r = product_spec(seed, space, 0.2);
    const Distribution s = product_spec(seed + 100, space, 0.2);
    const W2Result res = w2_distance(r, s, opts);
    CHECK(res.value >= res.lower_bound - 1e-12);
    CHECK(res.value - res.lower_bound <= 1e-8);
  }
  auto space3 = chain_space(3, 3);
  const Distribution r = product_spec(23, space3, 0.3);
  const Distribution s = product_spec(24, space3, 0.3);
  const W2Result res = w2_distance(r, s, opts);
  CHECK(res.value >= res.lower_bound - 1e-12);
  CHECK(res.value - res.lower_bound <= 1e-8);
}

TEST_CASE("w2 coupling reproduces its marginals") {
  auto space = chain_space(3, 3);
  const Distribution r = random_spec(5, space, 0.2);
  const Distribution s = random_spec(6, space, 0.2);
  const W2Result res = w2_distance(r, s);

  REQUIRE(res.coupling.has_value());
  CHECK(res.coupling->max_marginal_residual(r, s) <= 1e-10);
  CHECK((res.coupling->site_disagreement() - res.site_disagreement)
            .lpNorm<Eigen::Infinity>() <= 1e-10);
  CHECK(res.gap <= 1e-7);
  CHECK(res.value >= res.lower_bound - 1e-12);
  CHECK(res.value * res.value ==
        doctest::Approx(res.site_disagreement.squaredNorm()).epsilon(1e-12));

  const BoundCheck crude = w2_vs_tv_bound(r, s);
  CHECK(crude.holds(2e-7));
}

TEST_CASE("w2 respects the triangle inequality") {
  auto space = chain_space(2, 3);
  const Distribution a = random_spec(31, space, 0.15);
  const Distribution b = random_spec(32, space, 0.15);
  const Distribution c = random_spec(33, space, 0.15);
  const double ab = w2_distance(a, b).value;
  const double bc = w2_distance(b, c).value;
  const double ac = w2_distance(a, c).value;
  CHECK(ac <= ab + bc + 1e-5);
}

TEST_CASE("secondary estimate never improves on the solver") {
  auto space = chain_space(3, 3);
  for (std::uint64_t seed : {41u, 42u}) {
    const Distribution r = random_spec(seed, space, 0.2);
    const Distribution s = random_spec(seed + 50, space, 0.2);
    const double main_value = w2_distance(r, s).value;
    const double second = w2_secondary_estimate(r, s, seed, 400);
    CHECK(second >= main_value - 1e-7);
  }
}

TEST_CASE("w2 refuses oversized pair spaces") {
  auto space = chain_space(3, 3);
  const Distribution r = random_spec(7, space, 0.5);
  const Distribution s = random_spec(8, space, 0.5);
  W2Options opts;
  opts.pair_cap = 16;
  CHECK_THROWS_AS(w2_distance(r, s, opts), SolverError);
}

TEST_CASE("goldstein levels are simultaneously maximal") {
  auto space = chain_space(2, 3);
  const Distribution mu = random_spec(11, space, 0.3);
  const Distribution nu = random_spec(12, space, 0.3);
  const Site k = {0};

  const GoldsteinResult res = goldstein_coupling(mu, nu, k);
  REQUIRE(res.levels.size() == 3);
  CHECK(res.levels[0].set == IndexSet{0, 1, 2});
  CHECK(res.levels[1].set == IndexSet{1, 2});
  CHECK(res.levels[2].set == IndexSet{2});
  for (const auto& level : res.levels)
    CHECK(std::abs(level.disagreement - level.tv) <= 1e-9);
  CHECK(res.coupling.max_marginal_residual(mu, nu) <= 1e-10);
  CHECK(res.levels[0].disagreement ==
        doctest::Approx(res.coupling.disagreement_probability())
            .epsilon(1e-12));
}

TEST_CASE("goldstein repairs a greedy miss through the exact program") {
  auto space = chain_space(2, 2);
  const Distribution mu = make(space, {0.3, 0.3, 0.2, 0.2});
  const Distribution nu = make(space, {0.16, 0.24, 0.3, 0.3});
  const Site k = {0};

  const GoldsteinResult res = goldstein_coupling(mu, nu, k);
  CHECK(res.used_lp);
  REQUIRE(res.levels.size() == 2);
  for (const auto& level : res.levels)
    CHECK(std::abs(level.disagreement - level.tv) <= 1e-9);
  CHECK(res.coupling.max_marginal_residual(mu, nu) <= 1e-9);
}

TEST_CASE("goldstein couples conditional block laws of an ensemble") {
  auto space = chain_space(2, 4);
  const LocalSpecEnsemble spec(random_spec(19, space, 0.25));
  const IndexSet block = {1, 2};

  const GoldsteinResult res =
      goldstein_coupling(spec, block, {0, 0}, {1, 0});
  REQUIRE(res.levels.size() == 2);
  for (const auto& level : res.levels)
    CHECK(std::abs(level.disagreement - level.tv) <= 1e-9);

  CHECK_THROWS_AS(goldstein_coupling(spec, block, {0, 0}, {0, 0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(goldstein_coupling(spec, block, {0, 0}, {1, 1}),
                  std::invalid_argument);
}

TEST_CASE("goldstein handles two dimensional separations") {
  auto space = std::make_shared<const ConfigSpace>(
      Alphabet(2), SiteSet::box({{0, 1}, {0, 0}}));
  const Distribution mu = random_spec(51, space, 0.2);
  const Distribution nu = random_spec(52, space, 0.2);
  const Site k = {3, 0};

  const GoldsteinResult res = goldstein_coupling(mu, nu, k);
  REQUIRE(res.levels.size() == 2);
  CHECK(res.levels[1].set == IndexSet{0});
  for (const auto& level : res.levels)
    CHECK(std::abs(level.disagreement - level.tv) <= 1e-9);
  CHECK_THROWS_AS(goldstein_coupling(mu, nu, Site{0, 0}),
                  std::invalid_argument);
}
