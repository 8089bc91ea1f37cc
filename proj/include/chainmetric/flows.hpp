#pragma once

#include <string>
#include <utility>
#include <vector>

#include "chainmetric/markov_chain.hpp"
#include "chainmetric/means.hpp"
#include "chainmetric/path_solver.hpp"
#include "chainmetric/transport.hpp"

namespace chainmetric {

class FunctionalSpec {
 public:
  enum class Kind { entropy, generalized_entropy, potential };

  static FunctionalSpec entropy();
  static FunctionalSpec generalized_entropy(EntropyFunction f);
  static FunctionalSpec potential(Vector v);

  Kind kind() const { return kind_; }
  std::string label() const;
  double value(const MarkovChain& chain, const Vector& rho) const;
  // Gradient in the transport geometry; throws BoundaryDensity where f' is undefined at zero.
  EdgeField gradient(const MarkovChain& chain, const Vector& rho) const;

 private:
  Kind kind_ = Kind::entropy;
  EntropyFunction f_;
  Vector potential_;
};

EdgeField grad_functional(const MarkovChain& chain, const FunctionalSpec& spec, const Vector& rho);

struct DissipationCheck {
  double dt = 0.0;
  double max_error = 0.0;  // central difference of F(rho_t) against minus the squared gradient norm
};

struct GradientFlowReport {
  std::vector<double> times;
  std::vector<double> edge_residual;  // max over edges of |grad psi + grad k(rho_t)|
  double max_edge_residual = 0.0;
  std::vector<DissipationCheck> dissipation;
  double observed_order = 0.0;  // log10 error ratio between the two coarsest steps
};

// Along the heat flow, recovers the velocity potential and compares it with -k(rho_t); also checks
// the entropy dissipation identity by central differences. Needs a mean with an entropy function.
GradientFlowReport verify_gradient_flow(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                                        const std::vector<double>& times,
                                        const std::vector<double>& dts = {1e-2, 1e-3, 1e-4});

struct PairEstimate {
  double kappa = 0.0;
  double distance = 0.0;
  std::string source;   // "shooting" or "min_action"
  std::string skipped;  // reason when the pair was not used
};

struct ConvexityProfile {
  std::vector<PairEstimate> pairs;
  double kappa = 0.0;  // minimum over used pairs
  int used = 0;
};

struct ConvexityOptions {
  int intervals = 32;
  int threads = 1;
  ShootOptions shoot;
  MinActionOptions min_action;
};

// kappa estimate min_t 2[(1-t)F0 + tF1 - F(rho_t)] / (t(1-t)W^2) per pair over the interior t samples.
// Pairs with W < 1e-10 are skipped; throws DegenerateDistance when no pair remains.
ConvexityProfile convexity_profile(const MarkovChain& chain, const MeanFunction& mean, const FunctionalSpec& spec,
                                   const std::vector<std::pair<Vector, Vector>>& pairs,
                                   const std::vector<double>& t_samples, const ConvexityOptions& options = {});

}  // namespace chainmetric
