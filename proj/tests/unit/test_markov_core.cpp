#include <doctest.h>

#include <cmath>
#include <random>

#include "chainmetric/errors.hpp"
#include "chainmetric/markov_chain.hpp"
#include "chainmetric/two_point.hpp"
#include "oracles.hpp"

using namespace chainmetric;

namespace {

Matrix triangle_kernel() {
  Matrix k(3, 3);
  k << 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0;
  return k;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no chainmetric::Error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("two-point stationary law is (q, p) / (p + q)") {
  const MarkovChain c = TwoPointChain(0.3, 0.7).chain();
  CHECK(c.pi()[0] == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(c.pi()[1] == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(c.detailed_balance_residual() < 1e-15);
}

TEST_CASE("validation names the failing row or pair") {
  Matrix k = triangle_kernel();
  k(1, 2) = 0.6;
  try {
    build_chain(k, {"x", "y", "z"});
    FAIL("expected NotStochastic");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotStochastic);
    CHECK(std::string(e.what()).find('y') != std::string::npos);
  }

  Matrix split = Matrix::Zero(4, 4);
  split << 0.5, 0.5, 0, 0, 0.5, 0.5, 0, 0, 0, 0, 0.5, 0.5, 0, 0, 0.5, 0.5;
  CHECK(kind_of([&] { build_chain(split); }) == ErrorKind::NotIrreducible);

  Matrix cycle(3, 3);
  cycle << 0, 0.9, 0.1, 0.1, 0, 0.9, 0.9, 0.1, 0;
  CHECK(kind_of([&] { build_chain(cycle); }) == ErrorKind::NotReversible);

  Matrix neg = triangle_kernel();
  neg(0, 1) = -0.1;
  neg(0, 2) = 1.1;
  CHECK(kind_of([&] { build_chain(neg); }) == ErrorKind::NotStochastic);

  Vector wrong_pi = Vector::Constant(3, 1.0 / 3.0);
  wrong_pi[0] += 1e-3;
  wrong_pi[1] -= 1e-3;
  CHECK(kind_of([&] { build_chain(triangle_kernel(), wrong_pi); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("densities are validated against pi") {
  const MarkovChain c = build_chain(triangle_kernel());
  CHECK_NOTHROW(Density(c, Vector::Constant(3, 1.0)));
  CHECK(kind_of([&] { Density(c, Vector::Constant(3, 1.1)); }) == ErrorKind::InvalidDensity);
  Vector neg(3);
  neg << 2.0, 1.5, -0.5;
  CHECK(kind_of([&] { Density(c, neg); }) == ErrorKind::InvalidDensity);
  Vector mu(3);
  mu << 0.5, 0.25, 0.25;
  const Density d = Density::from_measure(c, mu);
  CHECK(d[0] == doctest::Approx(1.5));
  CHECK(Density::dirac(c, 2)[2] == doctest::Approx(3.0));
}

TEST_CASE("entropy and total variation on the two-point space") {
  const MarkovChain c = TwoPointChain(0.5, 0.5).chain();
  Vector dirac_b(2);
  dirac_b << 0.0, 2.0;
  CHECK(entropy(c, dirac_b) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  Vector r(2);
  r << 0.5, 1.5;
  CHECK(entropy(c, r) == doctest::Approx(0.5 * (0.5 * std::log(0.5) + 1.5 * std::log(1.5))).epsilon(1e-14));
  CHECK(entropy(c, Vector::Constant(2, 1.0)) == 0.0);

  const TwoPointChain tp(0.5, 0.5);
  CHECK(total_variation(c, BetaDensity(-0.3).values(tp), BetaDensity(0.4).values(tp)) ==
        doctest::Approx(0.7).epsilon(1e-14));
  Vector dirac_a(2);
  dirac_a << 2.0, 0.0;
  CHECK(total_variation(c, dirac_a, dirac_b) == doctest::Approx(2.0));
}

TEST_CASE("two-point heat flow follows the closed form") {
  const double p = 0.3;
  const double q = 0.7;
  const TwoPointChain tp(p, q);
  const MarkovChain c = tp.chain();
  for (double beta0 : {-0.9, 0.0, 0.6}) {
    for (double t : {0.1, 1.0, 4.0}) {
      const double bt = (p - q) / (p + q) * (1.0 - std::exp(-(p + q) * t)) + beta0 * std::exp(-(p + q) * t);
      const Vector rho = heat_flow(c, BetaDensity(beta0).values(tp), t);
      const Vector expect = BetaDensity(bt).values(tp);
      CHECK((rho - expect).cwiseAbs().maxCoeff() < 1e-13);
    }
  }
}

TEST_CASE("property: random reversible chains") {
  std::mt19937 rng(20240611);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + trial % 9;
    const auto rc = oracle::random_reversible_chain(rng, n, 0.4);
    const MarkovChain c = build_chain(rc.kernel);
    CAPTURE(trial);

    // stationary law against the construction and against power iteration
    CHECK((c.pi() - rc.pi).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((oracle::power_iteration_pi(rc.kernel) - rc.pi).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(c.stationarity_residual() < 1e-13);
    CHECK(c.detailed_balance_residual() < 1e-13);
    CHECK((c.edge_weight() - c.edge_weight().transpose()).cwiseAbs().maxCoeff() == 0.0);

    const Vector rho0 = oracle::random_density(rng, rc.pi, 0.0);
    double last_entropy = entropy(c, rho0);
    for (double t : {0.05, 0.5, 2.0, 10.0}) {
      const Vector rho = heat_flow(c, rho0, t);
      // mass, positivity, agreement with two independent integrators
      CHECK(c.pi().dot(rho) == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(rho.minCoeff() > 0.0);
      CHECK((rho - oracle::heat_flow_symmetric(rc.kernel, rc.pi, rho0, t)).cwiseAbs().maxCoeff() < 1e-11);
      CHECK((rho - heat_flow_rk4(c, rho0, t, 2000)).cwiseAbs().maxCoeff() < 1e-10);
      const double h = entropy(c, rho);
      CHECK(h <= last_entropy + 1e-14);
      last_entropy = h;
    }
  }
}

TEST_CASE("heat flow at t = 0 is the identity and rejects negative times") {
  const MarkovChain c = build_chain(triangle_kernel());
  Vector r(3);
  r << 2.0, 0.5, 0.5;
  CHECK((heat_flow(c, r, 0.0) - r).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(kind_of([&] { heat_flow(c, r, -1.0); }) == ErrorKind::InvalidArgument);
}
