#pragma once

#include <cmath>
#include <vector>

#include "chainmetric/markov_chain.hpp"
#include "chainmetric/means.hpp"

namespace chainmetric {

// Two states a, b with K(a,b) = p and K(b,a) = q.
class TwoPointChain {
 public:
  TwoPointChain(double p, double q);
  double p() const { return p_; }
  double q() const { return q_; }
  double pi_a() const { return q_ / (p_ + q_); }
  double pi_b() const { return p_ / (p_ + q_); }
  // 0.5 * sqrt(1/p + 1/q): converts the beta-integral into distance units.
  double scale() const;
  MarkovChain chain() const;

 private:
  double p_;
  double q_;
};

// Point of the segment of densities parametrised by beta in [-1, 1]; beta = -1 is the Dirac mass at a.
class BetaDensity {
 public:
  explicit BetaDensity(double beta);
  double beta() const { return beta_; }
  // Densities (rho(a), rho(b)) computed from the gaps 1 - beta and 1 + beta.
  double rho_a(const TwoPointChain& c) const { return (c.p() + c.q()) / c.q() * 0.5 * (1.0 - beta_); }
  double rho_b(const TwoPointChain& c) const { return (c.p() + c.q()) / c.p() * 0.5 * (1.0 + beta_); }
  Vector values(const TwoPointChain& c) const;

 private:
  double beta_;
};

struct DistanceValue {
  bool finite = true;
  double value = 0.0;  // +inf when not finite
  static DistanceValue infinite();
};

double rho_hat(const TwoPointChain& c, const MeanFunction& mean, double beta);

// Signed isometry coordinate: phi(beta) = scale * integral_0^beta rho_hat^(-1/2).
DistanceValue phi(const TwoPointChain& c, const MeanFunction& mean, double beta);
// Signed scale * integral_alpha^beta rho_hat^(-1/2), evaluated without cancellation.
DistanceValue phi_increment(const TwoPointChain& c, const MeanFunction& mean, double alpha, double beta);
DistanceValue distance(const TwoPointChain& c, const MeanFunction& mean, double alpha, double beta);
// Inverse of phi on a finite value inside its range.
double phi_inverse(const TwoPointChain& c, const MeanFunction& mean, double value);

struct GeodesicSample {
  double t;
  double beta;
  double phi;
  double speed;  // centred difference of phi along the samples
};

struct TwoPointGeodesicOptions {
  int steps = 1000;
  double endpoint_tol = 1e-6;
  double speed_tol = 1e-6;
};

// RK4 on beta' = 2 w sqrt(pq/(p+q) rho_hat(beta)), w = sign(beta - alpha) W, run from the
// phi-midpoint in both directions so that boundary endpoints are approached, never left.
// Throws EndpointMiss when an endpoint is missed or the sampled speed is not constant.
std::vector<GeodesicSample> geodesic(const TwoPointChain& c, const MeanFunction& mean, double alpha,
                                     double beta, const TwoPointGeodesicOptions& options = {});

// Second derivative of the entropy along geodesics, per unit squared speed.
double convexity_integrand(const TwoPointChain& c, const MeanFunction& mean, double beta);

struct ConvexityConstant {
  double kappa;
  double argmin;
};

// Infimum of convexity_integrand over (-1, 1): uniform grid, dyadic refinement toward +-1, then
// golden-section polishing around the best grid point. Needs an entropy function.
ConvexityConstant convexity_constant(const TwoPointChain& c, const MeanFunction& mean);

// Closed-form heat flow on the segment.
double heat_flow_beta(const TwoPointChain& c, double beta0, double t);
// F(rho^beta) for the entropy function of the mean.
double entropy_value(const TwoPointChain& c, const MeanFunction& mean, double beta);

struct GradientFlowCheck {
  std::vector<double> times;
  std::vector<double> lhs;  // central difference of phi along the heat flow
  std::vector<double> rhs;  // minus the derivative of the entropy in the phi coordinate
  double max_residual = 0.0;
};

GradientFlowCheck gradient_flow_check(const TwoPointChain& c, const MeanFunction& mean, double beta0,
                                      const std::vector<double>& times, double dt = 1e-4);

struct EviCheck {
  double max_violation = -INFINITY;
  double beta0 = 0.0;
  double y = 0.0;
  double t = 0.0;
  int evaluations = 0;
};

// Evaluates 1/2 d/dt d^2(beta_t, y) - (F(y) - F(beta_t)) on the full grid; nonpositive means no violation.
EviCheck evi_check(const TwoPointChain& c, const MeanFunction& mean, const std::vector<double>& beta0s,
                   const std::vector<double>& ys, const std::vector<double>& times);

}  // namespace chainmetric
