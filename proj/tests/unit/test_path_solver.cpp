#include <doctest.h>

#include <cmath>
#include <random>

#include "chainmetric/errors.hpp"
#include "chainmetric/path_solver.hpp"
#include "chainmetric/transport.hpp"
#include "chainmetric/two_point.hpp"
#include "oracles.hpp"

using namespace chainmetric;

namespace {

MarkovChain triangle() {
  Matrix k(3, 3);
  k << 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0;
  return build_chain(k);
}

// Linear-in-beta path on the two-point space with potentials recovered at interval midpoints.
DiscretePath beta_path(const MarkovChain& c, const TwoPointChain& tp, const MeanFunction& mean, double b0, double b1,
                       int n) {
  DiscretePath path;
  path.times = uniform_times(n);
  for (int k = 0; k <= n; ++k) path.nodes.push_back(BetaDensity(b0 + (b1 - b0) * k / n).values(tp));
  for (int k = 0; k < n; ++k) {
    const Vector mid = 0.5 * (path.nodes[k] + path.nodes[k + 1]);
    const Vector rate = (path.nodes[k + 1] - path.nodes[k]) * n;
    path.potentials.push_back(recover_potential(c, mean, mid, rate).psi);
  }
  return path;
}

double closed_form_beta_action(const TwoPointChain& tp, const MeanFunction& mean, double b0, double b1) {
  // int_0^1 (p+q)/(4pq rho_hat(beta_t)) (b1-b0)^2 dt by composite Simpson
  const int m = 4000;
  double sum = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w / rho_hat(tp, mean, b0 + (b1 - b0) * i / m);
  }
  const double pq = (tp.p() + tp.q()) / (4.0 * tp.p() * tp.q());
  return pq * (b1 - b0) * (b1 - b0) * sum / (3.0 * m);
}

}  // namespace

TEST_CASE("action of trivial and single-interval paths") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  DiscretePath still;
  still.times = uniform_times(4);
  still.nodes.assign(5, Vector::Constant(3, 1.0));
  still.potentials.assign(4, Vector::Zero(3));
  CHECK(action(t, lm, still) == 0.0);

  const TwoPointChain tp(0.3, 0.6);
  const MarkovChain c = tp.chain();
  const double b0 = -0.4;
  const double b1 = 0.5;
  const DiscretePath one = beta_path(c, tp, lm, b0, b1, 1);
  const double expect =
      (b1 - b0) * (b1 - b0) * (tp.p() + tp.q()) / (4.0 * tp.p() * tp.q() * rho_hat(tp, lm, 0.5 * (b0 + b1)));
  CHECK(action(c, lm, one) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("action of a fixed smooth path converges at second order") {
  const MeanFunction lm = logarithmic_mean();
  const TwoPointChain tp(0.5, 0.5);
  const MarkovChain c = tp.chain();
  const double exact = closed_form_beta_action(tp, lm, -0.6, 0.7);
  double prev_err = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const double err = std::abs(action(c, lm, beta_path(c, tp, lm, -0.6, 0.7, n)) - exact);
    if (prev_err > 0.0) {
      CAPTURE(n);
      CHECK(prev_err / err == doctest::Approx(4.0).epsilon(0.05));
    }
    prev_err = err;
  }
}

TEST_CASE("min_action: identical endpoints and the two-point closed form") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  Vector r(3);
  r << 1.4, 0.8, 0.8;
  CHECK(min_action(t, lm, r, r).distance == 0.0);

  const TwoPointChain tp(0.5, 0.5);
  const MarkovChain c = tp.chain();
  const double w = distance(tp, lm, -0.5, 0.5).value;
  MinActionOptions o;
  o.intervals = 64;
  const MinActionResult res = min_action(c, lm, BetaDensity(-0.5).values(tp), BetaDensity(0.5).values(tp), o);
  CHECK(res.converged);
  CHECK(std::abs(res.distance / w - 1.0) < 1e-2);
  CHECK(std::abs(res.distance / w - 1.0) < 1e-5);
  for (std::size_t i = 1; i < res.history.size(); ++i) CHECK(res.history[i] <= res.history[i - 1]);
  CHECK(res.action == doctest::Approx(res.distance * res.distance));
  CHECK(res.path.potentials.size() == 64);
}

TEST_CASE("min_action: midpoint rule converges at second order from below") {
  const MeanFunction lm = logarithmic_mean();
  const TwoPointChain tp(0.5, 0.5);
  const MarkovChain c = tp.chain();
  const double w = distance(tp, lm, -0.5, 0.5).value;
  double prev = 0.0;
  for (int n : {8, 16, 32}) {
    MinActionOptions o;
    o.intervals = n;
    const double err = min_action(c, lm, BetaDensity(-0.5).values(tp), BetaDensity(0.5).values(tp), o).distance - w;
    CHECK(err < 0.0);
    if (prev != 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("min_action: segment rule is an upper bound that does not increase under refinement") {
  const MeanFunction lm = logarithmic_mean();
  const TwoPointChain tp(0.3, 0.8);
  const MarkovChain c = tp.chain();
  const double w = distance(tp, lm, -0.7, 0.6).value;
  double prev = INFINITY;
  for (int n : {4, 8, 16, 32, 64}) {
    MinActionOptions o;
    o.intervals = n;
    o.rule = MidpointRule::segment;
    const double d = min_action(c, lm, BetaDensity(-0.7).values(tp), BetaDensity(0.6).values(tp), o).distance;
    CAPTURE(n);
    CHECK(d >= w - 1e-9);
    CHECK(d <= prev + 1e-6);
    prev = d;
  }
  CHECK(prev - w < 1e-5 * w);

  // same on a three-state chain without a closed form
  const MarkovChain t = triangle();
  Vector a(3);
  Vector b(3);
  a << 1.8, 0.9, 0.3;
  b << 0.4, 0.7, 1.9;
  prev = INFINITY;
  for (int n : {4, 8, 16, 32}) {
    MinActionOptions o;
    o.intervals = n;
    o.rule = MidpointRule::segment;
    const double d = min_action(t, lm, a, b, o).distance;
    CHECK(d <= prev + 1e-6);
    prev = d;
  }
}

TEST_CASE("reduced action gradient agrees with central differences") {
  const MarkovChain t = triangle();
  std::mt19937 rng(4);
  for (const MeanFunction& mean : {logarithmic_mean(), geometric_mean()}) {
    for (MidpointRule rule : {MidpointRule::arithmetic, MidpointRule::left, MidpointRule::mean, MidpointRule::segment}) {
      const int n = 5;
      const auto times = uniform_times(n);
      std::vector<Vector> nodes;
      for (int k = 0; k <= n; ++k) nodes.push_back(oracle::random_density(rng, t.pi(), 0.3));
      const ReducedAction ra = reduced_action(t, mean, times, nodes, rule);
      for (int k = 1; k < n; ++k) {
        for (int x = 0; x < 3; ++x) {
          const double h = 1e-6;
          auto plus = nodes;
          auto minus = nodes;
          plus[k][x] += h;
          minus[k][x] -= h;
          const double fd =
              (reduced_action(t, mean, times, plus, rule).value - reduced_action(t, mean, times, minus, rule).value) /
              (2 * h);
          CAPTURE(static_cast<int>(rule));
          CHECK(ra.gradient[k][x] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("min_action: analytic and finite-difference gradients find the same minimum") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  Vector a(3);
  Vector b(3);
  a << 1.5, 0.9, 0.6;
  b << 0.5, 1.2, 1.3;
  MinActionOptions o;
  o.intervals = 12;
  const double analytic = min_action(t, lm, a, b, o).distance;
  o.finite_difference_gradient = true;
  const double fd = min_action(t, lm, a, b, o).distance;
  CHECK(fd == doctest::Approx(analytic).epsilon(1e-8));
}

TEST_CASE("min_action: heat flow path is an upper bound") {
  const MeanFunction lm = logarithmic_mean();
  std::mt19937 rng(12);
  const auto rc = oracle::random_reversible_chain(rng, 4);
  const MarkovChain c = build_chain(rc.kernel);
  const Vector rho0 = oracle::random_density(rng, c.pi(), 0.1);
  const Vector rho1 = heat_flow(c, rho0, 1.0);
  // along the heat flow the potential is -log rho_t, so the speed is |grad log rho_t|_rho
  const int m = 400;
  double heat_action = 0.0;
  for (int i = 0; i <= m; ++i) {
    const Vector r = heat_flow(c, rho0, static_cast<double>(i) / m);
    const EdgeField g = gradient(r.array().log().matrix());
    const double w = (i == 0 || i == m) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    heat_action += w * inner_rho(c, lm, r, g, g);
  }
  heat_action /= 3.0 * m;
  MinActionOptions o;
  o.intervals = 32;
  o.rule = MidpointRule::segment;
  const MinActionResult res = min_action(c, lm, rho0, rho1, o);
  CHECK(res.action <= heat_action * (1 + 1e-9));
}

TEST_CASE("min_action: iterates stay feasible") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  const Vector dirac = Density::dirac(t, 2).values();
  Vector u = Vector::Constant(3, 1.0);
  MinActionOptions o;
  o.intervals = 16;
  const MinActionResult res = min_action(t, lm, dirac, u, o);
  CHECK(res.path.nodes.front() == dirac);
  CHECK(res.path.nodes.back() == u);
  for (const Vector& node : res.path.nodes) {
    CHECK(t.pi().dot(node) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(node.minCoeff() >= 0.0);
  }
  for (std::size_t k = 1; k + 1 < res.path.nodes.size(); ++k) CHECK(res.path.nodes[k].minCoeff() >= o.floor * (1 - 1e-12));
}

TEST_CASE("min_action: infeasible endpoints are refused") {
  const MarkovChain t = triangle();
  const Vector dirac = Density::dirac(t, 0).values();
  try {
    min_action(t, power_mean(2.5), dirac, Vector::Constant(3, 1.0));
    FAIL("expected InfeasibleEndpoints");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InfeasibleEndpoints);
  }
  Vector bad(3);
  bad << 1.0, 1.0, 0.5;
  CHECK_THROWS_AS(min_action(t, logarithmic_mean(), bad, Vector::Constant(3, 1.0)), Error);
}

TEST_CASE("property: symmetry, triangle inequality, Lipschitz bound, reparametrisation") {
  const MeanFunction lm = logarithmic_mean();
  std::mt19937 rng(2024);
  const auto rc = oracle::random_reversible_chain(rng, 4);
  const MarkovChain c = build_chain(rc.kernel);
  MinActionOptions o;
  o.intervals = 24;
  for (int trial = 0; trial < 6; ++trial) {
    const Vector a = oracle::random_density(rng, c.pi());
    const Vector b = oracle::random_density(rng, c.pi());
    const Vector m = oracle::random_density(rng, c.pi());
    const double ab = min_action(c, lm, a, b, o).distance;
    const double ba = min_action(c, lm, b, a, o).distance;
    const double am = min_action(c, lm, a, m, o).distance;
    const double mb = min_action(c, lm, m, b, o).distance;
    CHECK(std::abs(ab - ba) <= 2e-3 * ab);
    CHECK(ab <= am + mb + 5e-3 * std::max({ab, am, mb}));
    CHECK(bounds_report(c, lm, a, b, ab).holds());

    // warped time grid, re-minimised
    MinActionOptions warped = o;
    for (int k = 0; k <= o.intervals; ++k) {
      const double s = static_cast<double>(k) / o.intervals;
      warped.times.push_back(s * s * (3 - 2 * s));
    }
    const double w = min_action(c, lm, a, b, warped).distance;
    CHECK(std::abs(w / ab - 1) < 1e-3);
  }
}

TEST_CASE("geodesic system conserves the kinetic energy") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  Vector rho(3);
  rho << 1.5, 0.9, 0.6;
  Vector psi(3);
  psi << 0.3, -0.1, -0.2;
  auto energy = [&](const Vector& r, const Vector& p) { return p.dot(onsager_a(t, lm, r) * p); };
  const double e0 = energy(rho, psi);
  const int steps = 400;
  const double h = 1.0 / steps;
  for (int k = 0; k < steps; ++k) {
    Vector k1r, k1p, k2r, k2p, k3r, k3p, k4r, k4p;
    geodesic_rhs(t, lm, rho, psi, k1r, k1p);
    geodesic_rhs(t, lm, rho + 0.5 * h * k1r, psi + 0.5 * h * k1p, k2r, k2p);
    geodesic_rhs(t, lm, rho + 0.5 * h * k2r, psi + 0.5 * h * k2p, k3r, k3p);
    geodesic_rhs(t, lm, rho + h * k3r, psi + h * k3p, k4r, k4p);
    rho += h / 6 * (k1r + 2 * k2r + 2 * k3r + k4r);
    psi += h / 6 * (k1p + 2 * k2p + 2 * k3p + k4p);
  }
  CHECK(energy(rho, psi) == doctest::Approx(e0).epsilon(1e-10));
  CHECK(t.pi().dot(rho) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("shooting: trivial, two-point and triangle walk") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  Vector r(3);
  r << 1.2, 0.9, 0.9;
  const ShootResult still = geodesic_shoot(t, lm, r, r);
  CHECK(still.distance == 0.0);
  CHECK(still.psi.front().cwiseAbs().maxCoeff() == 0.0);

  const TwoPointChain tp(0.4, 0.7);
  const MarkovChain c = tp.chain();
  const ShootResult two = geodesic_shoot(c, lm, BetaDensity(-0.6).values(tp), BetaDensity(0.8).values(tp));
  TwoPointGeodesicOptions go;
  go.steps = static_cast<int>(two.times.size()) - 1;
  const auto oracle_path = geodesic(tp, lm, -0.6, 0.8, go);
  REQUIRE(oracle_path.size() == two.rho.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < two.rho.size(); ++k) {
    // beta = 1 - 2 rho(a) pi(a)
    const double beta = 1.0 - 2.0 * two.rho[k][0] * c.pi()[0];
    worst = std::max(worst, std::abs(beta - oracle_path[k].beta));
  }
  CHECK(worst < 1e-5);
  CHECK(two.distance == doctest::Approx(distance(tp, lm, -0.6, 0.8).value).epsilon(1e-6));

  std::mt19937 rng(77);
  for (int trial = 0; trial < 8; ++trial) {
    const Vector a = oracle::random_density(rng, t.pi());
    const Vector b = oracle::random_density(rng, t.pi());
    const ShootResult s = geodesic_shoot(t, lm, a, b);
    CHECK(s.endpoint_error <= 1e-6);
    CHECK(s.speed_deviation < 1e-4);
    MinActionOptions o;
    o.intervals = 32;
    CHECK(std::abs(s.distance / min_action(t, lm, a, b, o).distance - 1) < 1e-2);
    const Vector mid = sample_geodesic(s, 0.5);
    CHECK(t.pi().dot(mid) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((sample_geodesic(s, 1.0) - s.rho.back()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("shooting: boundary endpoints and divergence are reported") {
  const MeanFunction lm = logarithmic_mean();
  const MarkovChain t = triangle();
  try {
    geodesic_shoot(t, lm, Density::dirac(t, 0).values(), Vector::Constant(3, 1.0));
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
  Vector a(3);
  Vector b(3);
  a << 2.4, 0.3, 0.3;
  b << 0.3, 0.3, 2.4;
  ShootOptions o;
  o.max_newton = 0;
  try {
    geodesic_shoot(t, lm, a, b, o);
    FAIL("expected ShootingDiverged");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ShootingDiverged);
    CHECK(std::string(e.what()).find("min_action") != std::string::npos);
  }
}
