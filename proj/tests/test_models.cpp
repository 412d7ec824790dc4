#include <doctest.h>

#include <cmath>
#include <vector>

#include "spinlab/measures.hpp"
#include "spinlab/models.hpp"

using namespace spinlab;

namespace {

double spin(int x) { return 2.0 * x - 1.0; }

}  // namespace

TEST_CASE("single site field weights") {
  PairPotential pot;
  pot.beta = 0.7;
  pot.field = 0.4;
  const LatticeModel model(Alphabet(2), SiteSet::chain(1), pot);
  const Distribution q = model.joint();
  const double bh = pot.beta * pot.field;
  const double z = std::exp(bh) + std::exp(-bh);
  CHECK(q[0] == doctest::Approx(std::exp(-bh) / z).epsilon(1e-14));
  CHECK(q[1] == doctest::Approx(std::exp(bh) / z).epsilon(1e-14));
}

TEST_CASE("free boundary chain matches an explicit spin sum") {
  PairPotential pot;
  pot.beta = 0.45;
  pot.coupling = 1.0;
  pot.field = 0.2;
  const LatticeModel model(Alphabet(2), SiteSet::chain(3), pot);
  const Distribution q = model.joint();

  // Independent evaluation: direct Boltzmann weights over all spin triples.
  std::vector<double> w(8);
  double z = 0.0;
  for (int x0 = 0; x0 < 2; ++x0) {
    for (int x1 = 0; x1 < 2; ++x1) {
      for (int x2 = 0; x2 < 2; ++x2) {
        const double s0 = spin(x0), s1 = spin(x1), s2 = spin(x2);
        const double e = pot.coupling * (s0 * s1 + s1 * s2) +
                         pot.field * (s0 + s1 + s2);
        const double weight = std::exp(pot.beta * e);
        w[static_cast<std::size_t>(x0 + 2 * x1 + 4 * x2)] = weight;
        z += weight;
      }
    }
  }
  for (std::uint64_t id = 0; id < 8; ++id) {
    CHECK(q[id] == doctest::Approx(w[id] / z).epsilon(1e-13));
  }
}

TEST_CASE("fixed boundary adds collar bonds") {
  PairPotential pot;
  pot.beta = 0.5;
  const LatticeModel model(Alphabet(2), SiteSet::chain(2), pot, 1, 1);
  REQUIRE(model.collar() != nullptr);
  CHECK(model.collar()->size() == 2);

  const Distribution q = model.joint();
  // Boundary (0) and (3) are pinned to symbol 1 (spin +1).
  double z = 0.0;
  std::vector<double> w(4);
  for (int x0 = 0; x0 < 2; ++x0) {
    for (int x1 = 0; x1 < 2; ++x1) {
      const double s0 = spin(x0), s1 = spin(x1);
      const double e = s0 * s1 + 1.0 * s0 + s1 * 1.0;
      const double weight = std::exp(pot.beta * e);
      w[static_cast<std::size_t>(x0 + 2 * x1)] = weight;
      z += weight;
    }
  }
  for (std::uint64_t id = 0; id < 4; ++id) {
    CHECK(q[id] == doctest::Approx(w[id] / z).epsilon(1e-14));
  }

  SUBCASE("collar override changes the law") {
    const Distribution flipped = model.joint({0, 0});
    CHECK(flipped[0] == doctest::Approx(q[3]).epsilon(1e-13));
  }
}

TEST_CASE("two dimensional adjacency uses axis neighbours by default") {
  PairPotential pot;
  pot.beta = 0.3;
  const LatticeModel model(Alphabet(2), SiteSet::box({{0, 1}, {0, 1}}), pot);
  const Distribution q = model.joint();

  double z = 0.0;
  std::vector<double> w(16);
  for (int id = 0; id < 16; ++id) {
    const int x00 = id & 1, x10 = (id >> 1) & 1;
    const int x01 = (id >> 2) & 1, x11 = (id >> 3) & 1;
    const double e = spin(x00) * spin(x10) + spin(x01) * spin(x11) +
                     spin(x00) * spin(x01) + spin(x10) * spin(x11);
    w[static_cast<std::size_t>(id)] = std::exp(pot.beta * e);
    z += w[static_cast<std::size_t>(id)];
  }
  for (std::uint64_t id = 0; id < 16; ++id) {
    CHECK(q[id] == doctest::Approx(w[id] / z).epsilon(1e-13));
  }
}

TEST_CASE("potts conditional follows the delta interaction") {
  PairPotential pot;
  pot.kind = PairPotential::Kind::potts;
  pot.beta = 0.6;
  pot.coupling = 0.8;
  const LatticeModel model(Alphabet(3), SiteSet::chain(2), pot);
  const Distribution q = model.joint();

  const ConditionalSlice c = conditional(q, {1}, {2});
  REQUIRE(c.defined());
  const double match = std::exp(pot.beta * pot.coupling);
  const double z = match + 2.0;
  CHECK((*c.law)[2] == doctest::Approx(match / z).epsilon(1e-13));
  CHECK((*c.law)[0] == doctest::Approx(1.0 / z).epsilon(1e-13));
}

TEST_CASE("block conditionals agree with slices of the joint") {
  PairPotential pot;
  pot.beta = 0.4;
  const LatticeModel model(Alphabet(2), SiteSet::chain(4), pot, 1, 0);
  const Distribution q = model.joint();

  const IndexSet M{1, 2};
  const std::vector<int> rest{1, 0};
  const Distribution direct = model.block_conditional(M, rest);
  const ConditionalSlice sliced = conditional(q, M, rest);
  REQUIRE(sliced.defined());
  for (std::uint64_t id = 0; id < direct.size(); ++id) {
    CHECK(direct[id] == doctest::Approx((*sliced.law)[id]).epsilon(1e-12));
  }
}

TEST_CASE("seeded specs are deterministic and floored") {
  auto space = std::make_shared<const ConfigSpace>(Alphabet(2),
                                                   SiteSet::chain(3));
  const Distribution a = random_spec(42, space, 0.2);
  const Distribution b = random_spec(42, space, 0.2);
  const Distribution c = random_spec(43, space, 0.2);
  CHECK((a.weights() - b.weights()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.weights() - c.weights()).cwiseAbs().maxCoeff() > 0.0);

  const double floor = 0.2 / static_cast<double>(space->num_states());
  CHECK(a.weights().minCoeff() >= floor * (1.0 - 1e-12));

  SUBCASE("min_mass one gives the uniform measure") {
    const Distribution u = random_spec(7, space, 1.0);
    for (std::uint64_t id = 0; id < u.size(); ++id) {
      CHECK(u[id] == doctest::Approx(0.125).epsilon(1e-14));
    }
  }
  SUBCASE("product spec factorizes") {
    const Distribution p = product_spec(11, space, 0.1);
    const Distribution m0 = marginal(p, {0});
    const Distribution m1 = marginal(p, {1});
    const Distribution m2 = marginal(p, {2});
    for (std::uint64_t id = 0; id < p.size(); ++id) {
      const auto sym = space->decode(id);
      const double prod = m0[static_cast<std::uint64_t>(sym[0])] *
                          m1[static_cast<std::uint64_t>(sym[1])] *
                          m2[static_cast<std::uint64_t>(sym[2])];
      CHECK(p[id] == doctest::Approx(prod).epsilon(1e-12));
    }
  }
}

TEST_CASE("perturbations stay inside the support and near q") {
  auto space = std::make_shared<const ConfigSpace>(Alphabet(2),
                                                   SiteSet::chain(2));
  Eigen::VectorXd w(4);
  w << 0.5, 0.5, 0.0, 0.0;
  const Distribution q(space, w);

  const Distribution p = perturb(q, 0.3, 5);
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.0);
  CHECK(tv_distance(p, q) <= 0.3 + 1e-12);

  const Distribution same = perturb(q, 0.0, 5);
  CHECK((same.weights() - q.weights()).cwiseAbs().maxCoeff() == 0.0);
}
