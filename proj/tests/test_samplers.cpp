#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <vector>

#include "spinlab/measures.hpp"
#include "spinlab/models.hpp"
#include "spinlab/numeric.hpp"
#include "spinlab/samplers.hpp"
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

Eigen::VectorXd sqrt_ratio(const Distribution& p, const Distribution& q) {
  Eigen::VectorXd f(static_cast<Eigen::Index>(p.size()));
  for (std::uint64_t id = 0; id < p.size(); ++id)
    f[static_cast<Eigen::Index>(id)] = std::sqrt(p[id] / q[id]);
  return f;
}

}  // namespace

TEST_CASE("site kernel resamples one coordinate from the conditional") {
  auto space = chain_space(2, 2);
  const Distribution q = make(space, {0.1, 0.2, 0.3, 0.4});
  const SiteResampleKernel k(q, 0);

  const Eigen::MatrixXd m = k.dense();
  CHECK(m(0, 0) == doctest::Approx(0.1 / 0.3).epsilon(1e-14));
  CHECK(m(0, 1) == doctest::Approx(0.2 / 0.3).epsilon(1e-14));
  CHECK(m(1, 0) == doctest::Approx(0.1 / 0.3).epsilon(1e-14));
  CHECK(m(2, 2) == doctest::Approx(0.3 / 0.7).epsilon(1e-14));
  CHECK(m(3, 2) == doctest::Approx(0.3 / 0.7).epsilon(1e-14));
  CHECK(m(0, 2) == 0.0);
  CHECK(m(0, 3) == 0.0);
  for (Eigen::Index row = 0; row < m.rows(); ++row)
    CHECK(m.row(row).sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("heat bath kernels leave the target stationary and reversible") {
  auto space = chain_space(3, 3);
  const Distribution q = random_spec(71, space, 0.2);

  const SiteResampleKernel site(q, 1);
  CHECK(site.stationarity_residual(q) <= 1e-13);
  CHECK(site.detailed_balance_residual(q) <= 1e-13);

  const BlockResampleKernel block(q, {0, 2});
  CHECK(block.stationarity_residual(q) <= 1e-13);
  CHECK(block.detailed_balance_residual(q) <= 1e-13);

  const auto gibbs = random_scan_gibbs(q);
  CHECK(gibbs->stationarity_residual(q) <= 1e-13);
  CHECK(gibbs->detailed_balance_residual(q) <= 1e-13);
}

TEST_CASE("kernel application matches the dense matrix") {
  auto space = chain_space(2, 3);
  const Distribution q = random_spec(5, space, 0.3);
  const Distribution p = random_spec(6, space, 0.3);
  const auto gibbs = random_scan_gibbs(q);

  const Eigen::MatrixXd m = gibbs->dense();
  const Eigen::VectorXd pushed = m.transpose() * p.weights();
  CHECK((gibbs->apply(p).weights() - pushed).lpNorm<Eigen::Infinity>() <=
        1e-13);

  Eigen::VectorXd f(8);
  f << 0.5, -1.0, 2.0, 0.0, 1.5, -0.25, 3.0, 0.75;
  CHECK((gibbs->apply_to_function(f) - m * f).lpNorm<Eigen::Infinity>() <=
        1e-13);
}

TEST_CASE("zero mass contexts hold the chain in place") {
  auto space = chain_space(2, 2);
  const Distribution q = make(space, {0.5, 0.5, 0.0, 0.0});
  const SiteResampleKernel k(q, 0);
  const Eigen::MatrixXd m = k.dense();
  CHECK(m(2, 2) == 1.0);
  CHECK(m(3, 3) == 1.0);
}

TEST_CASE("mixture kernel validates and merges rows") {
  auto space = chain_space(2, 2);
  const Distribution q = random_spec(9, space, 0.4);
  auto a = std::make_shared<SiteResampleKernel>(q, 0);
  auto b = std::make_shared<SiteResampleKernel>(q, 1);

  CHECK_THROWS_AS(
      MixtureKernel({{0.6, a}, {0.6, b}}),
      std::invalid_argument);
  const MixtureKernel mix({{0.25, a}, {0.75, b}});
  const Eigen::MatrixXd expect = 0.25 * a->dense() + 0.75 * b->dense();
  CHECK((mix.dense() - expect).lpNorm<Eigen::Infinity>() <= 1e-14);
}

TEST_CASE("dirichlet form matches its closed form at sqrt ratios") {
  auto space = chain_space(3, 3);
  const Distribution q = random_spec(13, space, 0.2);
  const Distribution p = perturb(q, 0.45, 14);
  const auto gibbs = random_scan_gibbs(q);

  const double direct = gibbs->dirichlet_form(sqrt_ratio(p, q),
                                              sqrt_ratio(p, q), q);
  const double closed = dirichlet_closed_form(p, q);
  CHECK(direct == doctest::Approx(closed).epsilon(1e-12));

  auto space2 = chain_space(2, 4);
  const Distribution q2 = random_spec(15, space2, 0.35);
  const Distribution p2 = perturb(q2, 0.6, 16);
  const double direct2 = random_scan_gibbs(q2)->dirichlet_form(
      sqrt_ratio(p2, q2), sqrt_ratio(p2, q2), q2);
  CHECK(direct2 == doctest::Approx(dirichlet_closed_form(p2, q2))
                       .epsilon(1e-12));
}

TEST_CASE("dirichlet form is a symmetric positive form") {
  auto space = chain_space(2, 3);
  const Distribution q = random_spec(21, space, 0.3);
  const auto gibbs = random_scan_gibbs(q);

  Eigen::VectorXd f(8);
  f << 1.0, -2.0, 0.5, 3.0, -1.5, 0.25, 2.0, -0.75;
  Eigen::VectorXd g(8);
  g << 0.5, 1.0, -1.0, 2.0, 0.0, -2.5, 1.5, 0.25;

  CHECK(gibbs->dirichlet_form(f, g, q) ==
        doctest::Approx(gibbs->dirichlet_form(g, f, q)).epsilon(1e-13));
  CHECK(gibbs->dirichlet_form(f, f, q) >= 0.0);
  CHECK(std::abs(gibbs->dirichlet_form(Eigen::VectorXd::Ones(8),
                                       Eigen::VectorXd::Ones(8), q)) <=
        1e-15);

  // For a reversible kernel the form equals <f, (I - K) g>_q.
  const Eigen::VectorXd kg = gibbs->apply_to_function(g);
  KahanSum inner;
  for (std::uint64_t id = 0; id < q.size(); ++id) {
    const auto i = static_cast<Eigen::Index>(id);
    inner.add(q[id] * f[i] * (g[i] - kg[i]));
  }
  CHECK(gibbs->dirichlet_form(f, g, q) ==
        doctest::Approx(inner.value()).epsilon(1e-12));
}

TEST_CASE("relative entropy never grows along the chain") {
  auto space = chain_space(2, 3);
  const Distribution q = random_spec(33, space, 0.25);
  const Distribution p = perturb(q, 0.7, 34);
  const auto gibbs = random_scan_gibbs(q);

  const double residual = entropy_decay_residual(*gibbs, p, q);
  CHECK(residual <= 1e-13);
  CHECK(residual < -1e-6);

  const BlockResampleKernel all(q, {0, 1, 2});
  CHECK(entropy_decay_residual(all, p, q) <= 1e-13);
}

TEST_CASE("one block step sends every start to the target") {
  auto space = chain_space(2, 3);
  const Distribution q = random_spec(43, space, 0.3);
  const Distribution p = random_spec(44, space, 0.3);
  const Distribution r = random_spec(45, space, 0.3);
  const BlockResampleKernel all(q, {0, 1, 2});

  const ContractionSample sample = empirical_w2_contraction(all, p, r);
  CHECK(sample.before > 0.0);
  CHECK(sample.after <= 1e-7);
  CHECK(sample.ratio == doctest::Approx(sample.after / sample.before)
                            .epsilon(1e-12));
}
