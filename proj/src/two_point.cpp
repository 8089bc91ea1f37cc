#include "chainmetric/two_point.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "chainmetric/errors.hpp"

namespace chainmetric {
namespace {

// rho_hat^(-1/2) from the gaps om = 1 - beta and op = 1 + beta.
double inv_sqrt_rho_hat(const TwoPointChain& c, const MeanFunction& mean, double om, double op) {
  const double s = (c.p() + c.q()) / c.q() * 0.5 * om;
  const double t = (c.p() + c.q()) / c.p() * 0.5 * op;
  return 1.0 / std::sqrt(mean(s, t));
}

// Unscaled integral of rho_hat^(-1/2) over [a, b] with a <= b.
DistanceValue raw_integral(const TwoPointChain& c, const MeanFunction& mean, double a, double b) {
  double total = 0.0;
  const double lo = std::max(a, -0.5);
  const double hi = std::min(b, 0.5);
  if (hi > lo) {
    auto g = [&](double r) { return inv_sqrt_rho_hat(c, mean, 1.0 - r, 1.0 + r); };
    total += integrate(g, lo, hi).value;
  }
  if (b > 0.5) {
    auto h = [&](double u) { return inv_sqrt_rho_hat(c, mean, u, 2.0 - u); };
    const ImproperResult r = integrate_gap(h, 1.0 - std::max(a, 0.5), 1.0 - b);
    if (!r.finite) return DistanceValue::infinite();
    total += r.value;
  }
  if (a < -0.5) {
    auto h = [&](double v) { return inv_sqrt_rho_hat(c, mean, 2.0 - v, v); };
    const ImproperResult r = integrate_gap(h, 1.0 + std::min(b, -0.5), 1.0 + a);
    if (!r.finite) return DistanceValue::infinite();
    total += r.value;
  }
  return {true, total};
}

void check_beta(double beta) {
  if (!(beta >= -1.0 && beta <= 1.0)) {
    std::ostringstream msg;
    msg << "beta must lie in [-1, 1], got " << beta;
    throw Error(ErrorKind::InvalidArgument, msg.str(), beta);
  }
}

const EntropyFunction& require_entropy(const MeanFunction& mean) {
  if (!mean.entropy_function()) {
    throw Error(ErrorKind::MissingCapability, "mean '" + mean.name() + "' has no associated entropy function");
  }
  return *mean.entropy_function();
}

double clamp_beta(double b) { return std::clamp(b, -1.0, 1.0); }

}  // namespace

TwoPointChain::TwoPointChain(double p, double q) : p_(p), q_(q) {
  if (!(p > 0.0 && p <= 1.0 && q > 0.0 && q <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "two-point rates must lie in (0, 1]");
  }
}

double TwoPointChain::scale() const { return 0.5 * std::sqrt(1.0 / p_ + 1.0 / q_); }

MarkovChain TwoPointChain::chain() const {
  Matrix k(2, 2);
  k << 1.0 - p_, p_, q_, 1.0 - q_;
  return build_chain(k, std::vector<std::string>{"a", "b"});
}

BetaDensity::BetaDensity(double beta) : beta_(beta) { check_beta(beta); }

Vector BetaDensity::values(const TwoPointChain& c) const {
  Vector v(2);
  v << rho_a(c), rho_b(c);
  return v;
}

DistanceValue DistanceValue::infinite() { return {false, INFINITY}; }

double rho_hat(const TwoPointChain& c, const MeanFunction& mean, double beta) {
  const BetaDensity d(beta);
  return mean(d.rho_a(c), d.rho_b(c));
}

DistanceValue phi_increment(const TwoPointChain& c, const MeanFunction& mean, double alpha, double beta) {
  check_beta(alpha);
  check_beta(beta);
  if (alpha == beta) return {true, 0.0};
  const bool flip = beta < alpha;
  DistanceValue r = raw_integral(c, mean, flip ? beta : alpha, flip ? alpha : beta);
  if (!r.finite) {
    r.value = flip ? -INFINITY : INFINITY;
    return r;
  }
  r.value *= c.scale() * (flip ? -1.0 : 1.0);
  return r;
}

DistanceValue phi(const TwoPointChain& c, const MeanFunction& mean, double beta) {
  return phi_increment(c, mean, 0.0, beta);
}

DistanceValue distance(const TwoPointChain& c, const MeanFunction& mean, double alpha, double beta) {
  DistanceValue r = phi_increment(c, mean, alpha, beta);
  r.value = std::abs(r.value);
  return r;
}

double phi_inverse(const TwoPointChain& c, const MeanFunction& mean, double value) {
  double lo = -1.0;
  double hi = 1.0;
  for (int i = 0; i < 200 && hi - lo > 1e-16; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (phi(c, mean, mid).value < value) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<GeodesicSample> geodesic(const TwoPointChain& c, const MeanFunction& mean, double alpha, double beta,
                                     const TwoPointGeodesicOptions& options) {
  check_beta(alpha);
  check_beta(beta);
  const DistanceValue w_abs = distance(c, mean, alpha, beta);
  if (!w_abs.finite) {
    throw Error(ErrorKind::InvalidArgument, "endpoints are at infinite distance");
  }
  const double w = (beta >= alpha ? 1.0 : -1.0) * w_abs.value;
  const double phi_a = phi(c, mean, alpha).value;
  const double phi_b = phi(c, mean, beta).value;
  const double gamma_mid = alpha == beta ? alpha : phi_inverse(c, mean, 0.5 * (phi_a + phi_b));
  const double coef = 2.0 * w * std::sqrt(c.p() * c.q() / (c.p() + c.q()));
  // Integrated in xi = asin(beta): the gap to +-1 becomes quadratic in xi, which keeps the
  // right-hand side bounded at the boundary for means vanishing there like the log mean.
  constexpr double half_pi = 1.5707963267948966;
  auto clamp_xi = [&](double x) { return std::clamp(x, -half_pi, half_pi); };
  auto rhs = [&](double xi) {
    const double x = clamp_xi(xi);
    const double cosx = std::cos(x);
    const double b = std::sin(x);
    const double root = std::sqrt(rho_hat(c, mean, clamp_beta(b)));
    if (cosx <= 0.0) return 0.0;
    return coef * root / cosx;
  };

  // Clamp-and-retry RK4: a step leaving the domain is redone as two half steps.
  std::function<double(double, double, int)> step = [&](double x, double h, int depth) -> double {
    const double k1 = rhs(x);
    const double k2 = rhs(x + 0.5 * h * k1);
    const double k3 = rhs(x + 0.5 * h * k2);
    const double k4 = rhs(x + h * k3);
    const double next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (std::abs(next) > half_pi && depth < 30) return step(step(x, 0.5 * h, depth + 1), 0.5 * h, depth + 1);
    return clamp_xi(next);
  };

  std::string failure;
  for (int n = options.steps + options.steps % 2; n <= 64 * options.steps; n *= 2) {
    const double h = 1.0 / n;
    std::vector<double> xi(static_cast<std::size_t>(n) + 1);
    const int m = n / 2;
    xi[static_cast<std::size_t>(m)] = std::asin(gamma_mid);
    for (int k = m; k < n; ++k) xi[k + 1] = step(xi[k], h, 0);
    for (int k = m; k > 0; --k) xi[k - 1] = step(xi[k], -h, 0);
    std::vector<double> gamma(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) gamma[k] = clamp_beta(std::sin(xi[k]));

    const double miss = std::max(std::abs(gamma.front() - alpha), std::abs(gamma.back() - beta));
    if (miss > options.endpoint_tol) {
      std::ostringstream msg;
      msg << "geodesic misses an endpoint by " << miss;
      failure = msg.str();
      continue;
    }
    std::vector<double> phis(gamma.size());
    phis[m] = phi(c, mean, gamma[m]).value;
    for (int k = m; k < n; ++k) phis[k + 1] = phis[k] + phi_increment(c, mean, gamma[k], gamma[k + 1]).value;
    for (int k = m; k > 0; --k) phis[k - 1] = phis[k] + phi_increment(c, mean, gamma[k], gamma[k - 1]).value;

    std::vector<GeodesicSample> out(gamma.size());
    double worst = 0.0;
    for (int k = 0; k <= n; ++k) {
      const int lo = std::max(k - 1, 0);
      const int hi = std::min(k + 1, n);
      const double speed = std::abs(phis[hi] - phis[lo]) / ((hi - lo) * h);
      out[k] = {k * h, gamma[k], phis[k], speed};
      // |phi(gamma_t) - phi(gamma_s)| = |w| |t - s| for all pairs follows from this within a factor 2
      worst = std::max(worst, std::abs(phis[k] - phis[m] - w * (k - m) * h));
    }
    if (worst > 0.5 * options.speed_tol * std::max(1.0, w_abs.value)) {
      std::ostringstream msg;
      msg << "geodesic deviates from constant speed by " << worst;
      failure = msg.str();
      continue;
    }
    return out;
  }
  throw Error(ErrorKind::EndpointMiss, failure);
}

double convexity_integrand(const TwoPointChain& c, const MeanFunction& mean, double beta) {
  const EntropyFunction& ent = require_entropy(mean);
  const BetaDensity d(beta);
  const double ra = d.rho_a(c);
  const double rb = d.rho_b(c);
  return 0.5 * (c.p() + c.q()) + 0.5 * mean(ra, rb) * (c.q() * ent.d2f(rb) + c.p() * ent.d2f(ra));
}

ConvexityConstant convexity_constant(const TwoPointChain& c, const MeanFunction& mean) {
  require_entropy(mean);
  std::vector<double> grid;
  constexpr int kUniform = 2000;
  for (int i = 1; i < kUniform; ++i) grid.push_back(-1.0 + 2.0 * i / kUniform);
  for (int j = 11; j <= 40; ++j) {
    grid.push_back(1.0 - std::ldexp(1.0, -j));
    grid.push_back(-1.0 + std::ldexp(1.0, -j));
  }
  std::sort(grid.begin(), grid.end());
  std::size_t best = 0;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    values[i] = convexity_integrand(c, mean, grid[i]);
    if (values[i] < values[best]) best = i;
  }
  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = convexity_integrand(c, mean, x1);
  double f2 = convexity_integrand(c, mean, x2);
  for (int i = 0; i < 200 && hi - lo > 1e-14; ++i) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = convexity_integrand(c, mean, x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = convexity_integrand(c, mean, x2);
    }
  }
  ConvexityConstant out{values[best], grid[best]};
  const double polished = std::min(f1, f2);
  if (polished < out.kappa) out = {polished, f1 < f2 ? x1 : x2};
  return out;
}

double heat_flow_beta(const TwoPointChain& c, double beta0, double t) {
  const double r = c.p() + c.q();
  const double decay = std::exp(-r * t);
  return (c.p() - c.q()) / r * (1.0 - decay) + beta0 * decay;
}

double entropy_value(const TwoPointChain& c, const MeanFunction& mean, double beta) {
  const EntropyFunction& ent = require_entropy(mean);
  const BetaDensity d(beta);
  return c.pi_a() * ent.f(d.rho_a(c)) + c.pi_b() * ent.f(d.rho_b(c));
}

GradientFlowCheck gradient_flow_check(const TwoPointChain& c, const MeanFunction& mean, double beta0,
                                      const std::vector<double>& times, double dt) {
  const EntropyFunction& ent = require_entropy(mean);
  GradientFlowCheck out;
  for (double t : times) {
    const double b_minus = heat_flow_beta(c, beta0, t - dt);
    const double b_plus = heat_flow_beta(c, beta0, t + dt);
    const double lhs = phi_increment(c, mean, b_minus, b_plus).value / (2.0 * dt);
    const BetaDensity d(heat_flow_beta(c, beta0, t));
    const double ra = d.rho_a(c);
    const double rb = d.rho_b(c);
    const double rhs = -(ent.df(rb) - ent.df(ra)) * std::sqrt(mean(ra, rb)) / (2.0 * c.scale());
    out.times.push_back(t);
    out.lhs.push_back(lhs);
    out.rhs.push_back(rhs);
    out.max_residual = std::max(out.max_residual, std::abs(lhs - rhs));
  }
  return out;
}

EviCheck evi_check(const TwoPointChain& c, const MeanFunction& mean, const std::vector<double>& beta0s,
                   const std::vector<double>& ys, const std::vector<double>& times) {
  std::vector<double> phi_y;
  std::vector<double> f_y;
  for (double y : ys) {
    phi_y.push_back(phi(c, mean, y).value);
    f_y.push_back(entropy_value(c, mean, y));
  }
  EviCheck out;
  for (double b0 : beta0s) {
    for (double t : times) {
      const double bt = heat_flow_beta(c, b0, t);
      const double phi_t = phi(c, mean, bt).value;
      const double dphi = c.scale() / std::sqrt(rho_hat(c, mean, bt));
      const double bdot = c.p() * (1.0 - bt) - c.q() * (1.0 + bt);
      const double f_t = entropy_value(c, mean, bt);
      for (std::size_t j = 0; j < ys.size(); ++j) {
        const double lhs = (phi_t - phi_y[j]) * dphi * bdot;
        const double violation = lhs - (f_y[j] - f_t);
        ++out.evaluations;
        if (violation > out.max_violation) out = {violation, b0, ys[j], t, out.evaluations};
      }
    }
  }
  return out;
}

}  // namespace chainmetric
