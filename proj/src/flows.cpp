#include "chainmetric/flows.hpp"

#include <atomic>
#include <memory>
#include <cmath>
#include <functional>
#include <thread>

#include "chainmetric/errors.hpp"

namespace chainmetric {

FunctionalSpec FunctionalSpec::entropy() { return FunctionalSpec(); }

FunctionalSpec FunctionalSpec::generalized_entropy(EntropyFunction f) {
  FunctionalSpec s;
  s.kind_ = Kind::generalized_entropy;
  s.f_ = std::move(f);
  return s;
}

FunctionalSpec FunctionalSpec::potential(Vector v) {
  FunctionalSpec s;
  s.kind_ = Kind::potential;
  s.potential_ = std::move(v);
  return s;
}

std::string FunctionalSpec::label() const {
  switch (kind_) {
    case Kind::entropy: return "entropy";
    case Kind::generalized_entropy: return "generalized_entropy";
    case Kind::potential: return "potential";
  }
  return "";
}

double FunctionalSpec::value(const MarkovChain& chain, const Vector& rho) const {
  switch (kind_) {
    case Kind::entropy:
      return chainmetric::entropy(chain, rho);
    case Kind::generalized_entropy: {
      double sum = 0.0;
      for (int x = 0; x < rho.size(); ++x) sum += chain.pi()[x] * f_.f(rho[x]);
      return sum;
    }
    case Kind::potential:
      return chain.pi().dot(potential_.cwiseProduct(rho));
  }
  return 0.0;
}

EdgeField FunctionalSpec::gradient(const MarkovChain& chain, const Vector& rho) const {
  (void)chain;
  if (kind_ == Kind::potential) return chainmetric::gradient(potential_);
  Vector d(rho.size());
  for (int x = 0; x < rho.size(); ++x) {
    d[x] = kind_ == Kind::entropy ? (rho[x] > 0.0 ? std::log(rho[x]) : -INFINITY) : f_.df(rho[x]);
    if (!std::isfinite(d[x])) {
      throw Error(ErrorKind::BoundaryDensity, "gradient undefined at state " + std::to_string(x) + " with density " +
                                                  std::to_string(rho[x]));
    }
  }
  return chainmetric::gradient(d);
}

EdgeField grad_functional(const MarkovChain& chain, const FunctionalSpec& spec, const Vector& rho) {
  return spec.gradient(chain, rho);
}

GradientFlowReport verify_gradient_flow(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                                        const std::vector<double>& times, const std::vector<double>& dts) {
  if (!mean.entropy_function()) {
    throw Error(ErrorKind::MissingCapability,
                "mean '" + mean.name() + "' is not a difference quotient; the heat flow has no entropy to follow");
  }
  const EntropyFunction& ent = *mean.entropy_function();
  const int n = chain.size();
  const Matrix generator = chain.generator();
  auto functional = [&](const Vector& rho) {
    double s = 0.0;
    for (int x = 0; x < n; ++x) s += chain.pi()[x] * ent.f(rho[x]);
    return s;
  };
  auto k_of = [&](const Vector& rho) {
    Vector k(n);
    for (int x = 0; x < n; ++x) k[x] = ent.df(rho[x]);
    return k;
  };

  GradientFlowReport report;
  std::vector<double> dissipation_rate;
  for (double t : times) {
    const Vector rho = heat_flow(chain, rho0, t);
    const PotentialSolution sol = recover_potential(chain, mean, rho, generator * rho);
    const Vector k = k_of(rho);
    double worst = 0.0;
    for (int x = 0; x < n; ++x) {
      for (int y = 0; y < n; ++y) {
        if (x == y || chain.kernel()(x, y) == 0.0) continue;
        worst = std::max(worst, std::abs((sol.psi[x] - sol.psi[y]) + (k[x] - k[y])));
      }
    }
    report.times.push_back(t);
    report.edge_residual.push_back(worst);
    report.max_edge_residual = std::max(report.max_edge_residual, worst);
    const EdgeField gk = gradient(k);
    dissipation_rate.push_back(-inner_rho(chain, mean, rho, gk, gk));
  }
  for (double dt : dts) {
    DissipationCheck check{dt, 0.0};
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] - dt < 0.0) continue;
      const double fd = (functional(heat_flow(chain, rho0, times[i] + dt)) -
                         functional(heat_flow(chain, rho0, times[i] - dt))) /
                        (2.0 * dt);
      check.max_error = std::max(check.max_error, std::abs(fd - dissipation_rate[i]));
    }
    report.dissipation.push_back(check);
  }
  if (report.dissipation.size() >= 2 && report.dissipation[1].max_error > 0.0) {
    report.observed_order = std::log10(report.dissipation[0].max_error / report.dissipation[1].max_error) /
                            std::log10(report.dissipation[0].dt / report.dissipation[1].dt);
  }
  return report;
}

namespace {

PairEstimate estimate_pair(const MarkovChain& chain, const MeanFunction& mean, const FunctionalSpec& spec,
                           const Vector& rho0, const Vector& rho1, const std::vector<double>& t_samples,
                           const ConvexityOptions& options) {
  PairEstimate est;
  std::function<Vector(double)> path;
  if (rho0.minCoeff() > 0.0 && rho1.minCoeff() > 0.0) {
    try {
      auto shot = std::make_shared<ShootResult>(geodesic_shoot(chain, mean, rho0, rho1, options.shoot));
      est.distance = shot->distance;
      est.source = "shooting";
      path = [shot](double t) { return sample_geodesic(*shot, t); };
    } catch (const Error&) {
    }
  }
  if (!path) {
    MinActionOptions mo = options.min_action;
    mo.intervals = options.intervals;
    MinActionResult res;
    try {
      res = min_action(chain, mean, rho0, rho1, mo);
    } catch (const Error& e) {
      est.skipped = std::string(kind_name(e.kind())) + ": " + e.what();
      return est;
    }
    est.distance = res.distance;
    est.source = "min_action";
    auto p = std::make_shared<DiscretePath>(res.path);
    path = [p](double t) {
      const auto& times = p->times;
      std::size_t k = 0;
      while (k + 2 < times.size() && times[k + 1] <= t) ++k;
      const double s = (t - times[k]) / (times[k + 1] - times[k]);
      return Vector((1.0 - s) * p->nodes[k] + s * p->nodes[k + 1]);
    };
  }
  if (est.distance < 1e-10) {
    est.skipped = "DegenerateDistance: distance below 1e-10";
    return est;
  }
  const double f0 = spec.value(chain, rho0);
  const double f1 = spec.value(chain, rho1);
  const double w2 = est.distance * est.distance;
  est.kappa = INFINITY;
  for (double t : t_samples) {
    if (t <= 0.0 || t >= 1.0) continue;
    const double gap = (1.0 - t) * f0 + t * f1 - spec.value(chain, path(t));
    est.kappa = std::min(est.kappa, 2.0 * gap / (t * (1.0 - t) * w2));
  }
  return est;
}

}  // namespace

ConvexityProfile convexity_profile(const MarkovChain& chain, const MeanFunction& mean, const FunctionalSpec& spec,
                                   const std::vector<std::pair<Vector, Vector>>& pairs,
                                   const std::vector<double>& t_samples, const ConvexityOptions& options) {
  ConvexityProfile profile;
  profile.pairs.resize(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      profile.pairs[i] = estimate_pair(chain, mean, spec, pairs[i].first, pairs[i].second, t_samples, options);
    }
  };
  const int threads = std::max(1, std::min<int>(options.threads, static_cast<int>(pairs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  profile.kappa = INFINITY;
  for (const auto& p : profile.pairs) {
    if (!p.skipped.empty()) continue;
    ++profile.used;
    profile.kappa = std::min(profile.kappa, p.kappa);
  }
  if (profile.used == 0) {
    throw Error(ErrorKind::DegenerateDistance, "no pair with a positive distance");
  }
  return profile;
}

}  // namespace chainmetric
