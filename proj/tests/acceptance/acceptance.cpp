// Runs every acceptance criterion at its stated tolerance and prints one PASS/FAIL line each.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "chainmetric/errors.hpp"
#include "chainmetric/flows.hpp"
#include "chainmetric/path_solver.hpp"
#include "chainmetric/transport.hpp"
#include "chainmetric/two_point.hpp"
#include "oracles.hpp"

using namespace chainmetric;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Every solver run of criteria 1, 6 and 7 records its bound margins here for criterion 8.
struct BoundLedger {
  int runs = 0;
  int violations = 0;
  double worst_lipschitz = INFINITY;
  double worst_comparison = INFINITY;

  void record(const MarkovChain& c, const MeanFunction& mean, const Vector& a, const Vector& b, double w) {
    const BoundsReport r = bounds_report(c, mean, a, b, w);
    ++runs;
    violations += !r.holds();
    worst_lipschitz = std::min(worst_lipschitz, r.lipschitz_margin);
    if (r.comparison_applicable) worst_comparison = std::min(worst_comparison, r.comparison_margin);
  }
};

BoundLedger bounds;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

MarkovChain triangle() {
  Matrix k(3, 3);
  k << 0, 0.5, 0.5, 0.5, 0, 0.5, 0.5, 0.5, 0;
  return build_chain(k);
}

Verdict two_point_vs_solver() {
  const auto start = std::chrono::steady_clock::now();
  const MeanFunction lm = logarithmic_mean();
  const TwoPointChain tp(0.5, 0.5);
  const MarkovChain c = tp.chain();
  const Vector a = BetaDensity(-0.5).values(tp);
  const Vector b = BetaDensity(0.5).values(tp);
  MinActionOptions o;
  o.intervals = 64;
  const MinActionResult res = min_action(c, lm, a, b, o);
  const double secs = seconds_since(start);
  bounds.record(c, lm, a, b, res.distance);
  const double expect = oracle::two_point_log_distance(0.5, 0.5, -0.5, 0.5);
  const double rel = std::abs(res.distance / expect - 1.0);
  return {res.converged && rel < 1e-2 && secs < 10.0,
          fmt("W=%.10f oracle=%.10f rel=%.2e", res.distance, expect, rel) + fmt(" time=%.2fs", secs)};
}

Verdict entropy_constant_equal_rates() {
  const auto start = std::chrono::steady_clock::now();
  const MeanFunction lm = logarithmic_mean();
  Verdict v;
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> ts;
  for (int i = 1; i <= 19; ++i) ts.push_back(i / 20.0);
  for (double p : {0.25, 0.5, 1.0}) {
    const TwoPointChain tp(p, p);
    const double kappa = convexity_constant(tp, lm).kappa;
    std::vector<std::pair<Vector, Vector>> pairs;
    for (int i = 0; i < 50; ++i) pairs.emplace_back(BetaDensity(u(rng)).values(tp), BetaDensity(u(rng)).values(tp));
    ConvexityOptions co;
    co.threads = 4;
    const double est = convexity_profile(tp.chain(), lm, FunctionalSpec::entropy(), pairs, ts, co).kappa;
    const bool ok = std::abs(kappa - 2 * p) <= 1e-6 && est >= 2 * p * 0.95 && est <= 2 * p * 1.02;
    v.pass = v.pass && ok;
    v.detail += fmt("p=%.2f kappa=%.9f est/2p=%.4f; ", p, kappa, est / (2 * p));
  }
  const double secs = seconds_since(start);
  v.pass = v.pass && secs < 30.0;
  v.detail += fmt("time=%.2fs", secs);
  return v;
}

Verdict entropy_constant_lower_bound() {
  const MeanFunction lm = logarithmic_mean();
  double worst = INFINITY;
  for (int i = 1; i <= 10; ++i) {
    for (int j = 1; j <= 10; ++j) {
      const double p = 0.1 * i;
      const double q = 0.1 * j;
      worst = std::min(worst, convexity_constant(TwoPointChain(p, q), lm).kappa - 0.5 * (p + q));
    }
  }
  return {worst >= 0.0, fmt("min kappa - (p+q)/2 = %.3e over 100 rate pairs", worst)};
}

Verdict gradient_flow_identification() {
  const auto start = std::chrono::steady_clock::now();
  const MeanFunction lm = logarithmic_mean();
  std::mt19937 rng(20);
  double worst = 0.0;
  double min_order = INFINITY;
  double max_order = -INFINITY;
  for (int i = 0; i < 20; ++i) {
    const auto rc = oracle::random_reversible_chain(rng, 3 + i % 6);
    const MarkovChain c = build_chain(rc.kernel);
    const GradientFlowReport r = verify_gradient_flow(c, lm, oracle::random_density(rng, c.pi(), 0.05), {0.1, 1.0, 5.0});
    worst = std::max(worst, r.max_edge_residual);
    min_order = std::min(min_order, r.observed_order);
    max_order = std::max(max_order, r.observed_order);
  }
  const double secs = seconds_since(start);
  return {worst < 1e-7 && min_order > 1.8 && max_order < 2.2 && secs < 20.0,
          fmt("max edge residual=%.2e dissipation order in [%.3f, %.3f]", worst, min_order, max_order) +
              fmt(" time=%.2fs", secs)};
}

Verdict kernel_range_structure() {
  const MeanFunction lm = logarithmic_mean();
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int mismatches = 0;
  int predicates = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto rc = oracle::random_reversible_chain(rng, 3 + trial % 7, 0.3);
    const MarkovChain c = build_chain(rc.kernel);
    Vector rho = oracle::random_density(rng, c.pi(), 0.05);
    for (int x = 0; x < c.size(); ++x)
      if (unit(rng) < 0.35) rho[x] = 0.0;
    if (rho.maxCoeff() == 0.0) rho[0] = 1.0;
    rho /= c.pi().dot(rho);
    const KernelRange kr = kernel_range(c, lm, rho);
    const int classes = oracle::component_count(rc.kernel, rho);
    mismatches += kr.partition.count() != classes || oracle::numeric_nullity(onsager_a(c, lm, rho)) != classes;
    for (int k = 0; k < 4; ++k) {
      Vector v(c.size());
      for (int x = 0; x < c.size(); ++x) v[x] = unit(rng) - 0.5;
      if (k % 2 == 0) {
        const Matrix& kb = kr.kernel_basis;
        v -= kb * (kb.transpose() * kb).ldlt().solve(kb.transpose() * v);
      }
      const bool numeric = (kr.range_basis * (kr.range_basis.transpose() * v) - v).cwiseAbs().maxCoeff() <= 1e-9;
      mismatches += in_range_a(kr.partition, v) != numeric;
      mismatches += in_range_b(c, kr.partition, v.cwiseQuotient(c.pi())) != numeric;
      predicates += 2;
    }
  }
  return {mismatches == 0, fmt("200 instances, %g range predicates, %g mismatches", predicates, mismatches)};
}

Verdict finiteness_classification() {
  Verdict v;
  const MarkovChain t = triangle();
  const MeanFunction strong = power_mean(2.5);
  const Vector uniform = Vector::Constant(3, 1.0);
  Vector half(3);
  half << 1.8, 1.2, 0.0;

  int refused = 0;
  for (const Vector& a : {Vector(Density::dirac(t, 0).values()), half}) {
    const bool infinite = !finiteness(t, strong, a, uniform).finite;
    bool threw = false;
    try {
      min_action(t, strong, a, uniform);
    } catch (const Error& e) {
      threw = e.kind() == ErrorKind::InfeasibleEndpoints;
    }
    refused += infinite && threw;
  }

  int converged = 0;
  std::mt19937 rng(6);
  for (int i = 0; i < 5; ++i) {
    const Vector a = oracle::random_density(rng, t.pi());
    const Vector b = oracle::random_density(rng, t.pi());
    MinActionOptions o;
    o.intervals = 32;
    const MinActionResult r = min_action(t, strong, a, b, o);
    bounds.record(t, strong, a, b, r.distance);
    converged += finiteness(t, strong, a, b).finite && r.converged;
  }

  const MeanFunction lm = logarithmic_mean();
  const TwoPointChain tp(0.5, 0.5);
  const MarkovChain c = tp.chain();
  double worst = 0.0;
  for (int atom = 0; atom < 2; ++atom) {
    const Vector a = Density::dirac(c, atom).values();
    const Vector b = Vector::Constant(2, 1.0);
    MinActionOptions o;
    o.intervals = 64;
    const MinActionResult r = min_action(c, lm, a, b, o);
    bounds.record(c, lm, a, b, r.distance);
    const double expect = oracle::two_point_log_distance(0.5, 0.5, 0.0, atom == 0 ? 1.0 : -1.0);
    worst = std::max(worst, std::abs(r.distance / expect - 1.0));
    v.pass = v.pass && finiteness(c, lm, a, b).finite && r.converged;
  }
  v.pass = v.pass && refused == 2 && converged == 5 && worst < 1e-2;
  v.detail = fmt("power 2.5: %g/2 violating pairs refused, %g/5 conserving pairs converged; ", refused, converged) +
             fmt("log Dirac-to-uniform rel err=%.2e", worst);
  return v;
}

Verdict metric_axioms() {
  const auto start = std::chrono::steady_clock::now();
  const MeanFunction lm = logarithmic_mean();
  std::mt19937 rng(7);
  const auto rc = oracle::random_reversible_chain(rng, 5);
  const MarkovChain c = build_chain(rc.kernel);
  MinActionOptions o;
  o.intervals = 32;
  double worst_sym = 0.0;
  double worst_tri = -INFINITY;
  for (int i = 0; i < 50; ++i) {
    const Vector a = oracle::random_density(rng, c.pi());
    const Vector b = oracle::random_density(rng, c.pi());
    const Vector m = oracle::random_density(rng, c.pi());
    auto solve = [&](const Vector& x, const Vector& y) {
      const double w = min_action(c, lm, x, y, o).distance;
      bounds.record(c, lm, x, y, w);
      return w;
    };
    const double ab = solve(a, b);
    const double ba = solve(b, a);
    const double am = solve(a, m);
    const double mb = solve(m, b);
    worst_sym = std::max(worst_sym, std::abs(ab - ba) / ab);
    worst_tri = std::max(worst_tri, (ab - am - mb) / std::max({ab, am, mb}));
  }
  const double secs = seconds_since(start);
  return {worst_sym <= 2e-3 && worst_tri <= 5e-3,
          fmt("max relative asymmetry=%.2e max triangle excess=%.2e time=%.2fs", worst_sym, worst_tri, secs)};
}

Verdict bound_sandwich() {
  return {bounds.runs > 0 && bounds.violations == 0,
          fmt("%g solver runs, %g violations, min Lipschitz margin=%.3e", bounds.runs, bounds.violations,
              bounds.worst_lipschitz) +
              fmt(", min comparison margin=%.3e", bounds.worst_comparison)};
}

Verdict evi_zero() {
  const TwoPointChain tp(0.5, 0.5);
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(-0.9 + 0.2 * i);
  std::vector<double> ts;
  for (int i = 1; i <= 10; ++i) ts.push_back(0.3 * i);
  const EviCheck r = evi_check(tp, logarithmic_mean(), grid, grid, ts);
  return {r.max_violation <= 1e-8 && r.evaluations == 1000,
          fmt("max violation=%.3e over %g grid points", r.max_violation, r.evaluations)};
}

Verdict c_theta_classification() {
  const std::vector<double> alphas = {0.5, 1.0, 1.5, 1.9, 2.0, 2.5};
  const std::vector<bool> expect = {true, true, true, true, false, false};
  Verdict v;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const bool finite = c_theta(power_mean(alphas[i])).finite;
    v.pass = v.pass && finite == expect[i];
    v.detail += fmt("alpha=%.1f:", alphas[i]) + (finite ? "finite " : "infinite ");
  }
  return v;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  // criterion 8 reads the bound ledger filled by 1, 6 and 7, so it runs last
  const std::vector<std::pair<int, Criterion>> criteria = {
      {1, {"two-point closed form vs min_action", two_point_vs_solver}},
      {2, {"entropy convexity constant 2p", entropy_constant_equal_rates}},
      {3, {"convexity constant >= (p+q)/2", entropy_constant_lower_bound}},
      {4, {"heat flow is the entropy gradient flow", gradient_flow_identification}},
      {5, {"kernel and range structure", kernel_range_structure}},
      {6, {"finiteness classification", finiteness_classification}},
      {7, {"metric axioms", metric_axioms}},
      {9, {"EVI with zero modulus", evi_zero}},
      {10, {"boundary integral verdicts", c_theta_classification}},
      {8, {"Lipschitz and comparison bounds", bound_sandwich}},
  };
  std::vector<std::string> lines(11);
  int failures = 0;
  for (const auto& [id, c] : criteria) {
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failures += !v.pass;
    lines[id] = std::string(v.pass ? "PASS" : "FAIL") + " criterion " + std::to_string(id) + " (" + c.name +
                "): " + v.detail;
  }
  for (int id = 1; id <= 10; ++id) std::printf("%s\n", lines[id].c_str());
  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
