#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chainmetric/quadrature.hpp"

namespace chainmetric {

// Structural properties a mean declares; check_axioms verifies them empirically.
struct MeanProperties {
  bool zero_at_boundary = false;  // theta(0, t) = 0
  bool monotone = false;
  bool doubling = false;          // theta(2s, 2t) <= 2 C theta(s, t) on bounded boxes
  bool homogeneous = false;       // theta(l s, l t) = l theta(s, t)
  bool concave = false;
};

// Convex f with f' = k, so that theta(s, t) = (s - t) / (f'(s) - f'(t)).
struct EntropyFunction {
  std::function<double(double)> f;
  std::function<double(double)> df;
  std::function<double(double)> d2f;
};

class MeanFunction {
 public:
  using Fn2 = std::function<double(double, double)>;

  MeanFunction(std::string name, Fn2 value, Fn2 d1, MeanProperties properties,
               std::optional<EntropyFunction> entropy = std::nullopt);

  double operator()(double s, double t) const { return value_(s, t); }
  // Partial derivative in the first argument; falls back to central differences when not supplied.
  double d1(double s, double t) const;
  const std::string& name() const { return name_; }
  const MeanProperties& properties() const { return properties_; }
  // Present exactly when the mean is generated by a difference quotient of f'.
  const std::optional<EntropyFunction>& entropy_function() const { return entropy_; }

 private:
  std::string name_;
  Fn2 value_;
  Fn2 d1_;
  MeanProperties properties_;
  std::optional<EntropyFunction> entropy_;
};

MeanFunction logarithmic_mean();
MeanFunction geometric_mean();
// theta(s, t) = s^alpha t^alpha; throws InvalidAlpha unless alpha > 0.
MeanFunction power_mean(double alpha);
// "log", "geometric" or "power:<alpha>"; throws InvalidArgument otherwise.
MeanFunction parse_mean(const std::string& spec);

// Integral of theta(1 - r, 1 + r)^(-1/2) over [0, 1]; infinite per the dyadic tail verdict.
ImproperResult c_theta(const MeanFunction& mean, const TailOptions& options = {});

struct AxiomCheck {
  std::string axiom;
  bool declared = false;
  bool passed = true;
  std::vector<double> witness;  // (s, t) or (s, t, lambda) of the first failure
  std::string detail;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  double box = 0.0;
  double doubling_constant = 0.0;  // sup theta(2s, 2t) / (2 theta(s, t)) over samples in [0, box]^2
  bool all_declared_hold() const;
  const AxiomCheck* find(const std::string& axiom) const;
};

// Randomised property probe on [0, box]^2; checks symmetry, positivity, the declared properties,
// the difference-quotient identity when present and d1 against central differences.
AxiomReport check_axioms(const MeanFunction& mean, int samples, std::uint64_t seed, double box = 10.0);

}  // namespace chainmetric
