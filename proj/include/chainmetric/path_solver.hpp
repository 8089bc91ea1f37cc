#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainmetric/markov_chain.hpp"
#include "chainmetric/means.hpp"

namespace chainmetric {

// Density at which an interval's Onsager operator is evaluated.
enum class MidpointRule {
  arithmetic,  // (rho_k + rho_{k+1}) / 2
  left,        // rho_k
  mean,        // theta(rho_k(x), rho_{k+1}(x)) statewise
  segment,     // 3-point Gauss-Legendre along the linear segment; an upper bound, monotone under refinement
};

// Piecewise-linear path: nodes at times[0] = 0 < ... < times[N] = 1 and one potential per interval
// with (nodes[k+1] - nodes[k]) / dt_k = B(midpoint_k) potentials[k].
struct DiscretePath {
  std::vector<double> times;
  std::vector<Vector> nodes;
  std::vector<Vector> potentials;
  int intervals() const { return static_cast<int>(nodes.size()) - 1; }
};

std::vector<double> uniform_times(int intervals);

// sum_k dt_k [A(midpoint_k) psi_k, psi_k]; the segment rule is evaluated at its centre node here
double action(const MarkovChain& chain, const MeanFunction& mean, const DiscretePath& path,
              MidpointRule rule = MidpointRule::arithmetic);

struct MinActionOptions {
  int intervals = 64;
  std::vector<double> times;  // non-uniform grid; overrides `intervals` when non-empty
  MidpointRule rule = MidpointRule::arithmetic;
  double floor = 1e-9;
  double tol = 1e-12;           // relative decrease over the last 10 iterations
  double gradient_tol = 1e-11;  // max-norm of the projected gradient
  int max_iter = 20000;
  bool finite_difference_gradient = false;
  double fd_step = 1e-6;
  std::uint64_t seed = 42;
  double init_perturbation = 0.0;  // relative multiplicative noise on the interior of the initial path
  std::optional<std::vector<Vector>> initial_nodes;
};

struct MinActionResult {
  double distance = 0.0;  // sqrt(action)
  double action = 0.0;
  DiscretePath path;
  std::vector<double> history;  // objective after each accepted iteration, non-increasing
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string status;
  double projected_gradient = 0.0;
};

// Minimises the reduced discrete action over interior nodes constrained to fixed per-class mass and
// values >= floor, by quasi-Newton iterations with a projected Armijo line search.
// Throws InfeasibleEndpoints when the distance is infinite and Stalled when no progress is possible.
MinActionResult min_action(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                           const Vector& rho1, const MinActionOptions& options = {});

// Reduced objective and its gradient with respect to all nodes (endpoints included), exposed for testing.
struct ReducedAction {
  double value = 0.0;
  std::vector<Vector> gradient;
  std::vector<Vector> potentials;
};
ReducedAction reduced_action(const MarkovChain& chain, const MeanFunction& mean, const std::vector<double>& times,
                             const std::vector<Vector>& nodes, MidpointRule rule = MidpointRule::arithmetic);

struct ShootOptions {
  int steps = 256;
  double endpoint_tol = 1e-6;
  double speed_tol = 1e-4;
  int max_newton = 60;
  int warm_start_intervals = 16;
  std::optional<Vector> initial_potential;
};

struct ShootResult {
  double distance = 0.0;  // time-average of the speed
  std::vector<double> times;
  std::vector<Vector> rho;
  std::vector<Vector> psi;
  std::vector<Vector> rho_dot;
  std::vector<double> speed;
  double endpoint_error = 0.0;
  double speed_deviation = 0.0;  // max relative deviation from the mean speed
  int newton_iterations = 0;
  bool warm_started = false;
};

// Right-hand side of the geodesic system; rho must be strictly positive.
void geodesic_rhs(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho, const Vector& psi,
                  Vector& rho_dot, Vector& psi_dot);

// Shoots the geodesic system from rho0 with an initial potential in Ran A(rho0), solved by damped
// Gauss-Newton on the endpoint mismatch. Strictly positive endpoints only.
// Throws ShootingDiverged when the endpoint cannot be matched within endpoint_tol.
ShootResult geodesic_shoot(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                           const Vector& rho1, const ShootOptions& options = {});

// Cubic Hermite interpolation of a shot geodesic using the stored velocities.
Vector sample_geodesic(const ShootResult& geodesic, double t);

}  // namespace chainmetric
