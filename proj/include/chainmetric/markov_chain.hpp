#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace chainmetric {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct ChainTolerances {
  double row_sum = 1e-12;
  double stationarity = 1e-10;
  double detailed_balance = 1e-10;
  double density_mass = 1e-12;
};

// Immutable irreducible reversible kernel with its stationary distribution.
// Invariants: rows of K sum to 1, pi K = pi, pi(x)K(x,y) = pi(y)K(y,x).
class MarkovChain {
 public:
  const Matrix& kernel() const { return kernel_; }
  const Vector& pi() const { return pi_; }
  const std::vector<std::string>& states() const { return states_; }
  int size() const { return static_cast<int>(pi_.size()); }

  // Symmetrized edge measure Q(x,y) = (pi(x)K(x,y) + pi(y)K(y,x)) / 2, zero diagonal.
  const Matrix& edge_weight() const { return edge_weight_; }
  // K - I
  Matrix generator() const;

  double stationarity_residual() const;
  double detailed_balance_residual() const;

 private:
  friend MarkovChain build_chain(const Matrix&, std::vector<std::string>, const ChainTolerances&);
  friend MarkovChain build_chain(const Matrix&, const Vector&, std::vector<std::string>,
                                 const ChainTolerances&);
  Matrix kernel_;
  Vector pi_;
  Matrix edge_weight_;
  std::vector<std::string> states_;
};

// Throws Error{NotStochastic | NotIrreducible | NotReversible} naming the offending row or pair.
MarkovChain build_chain(const Matrix& kernel, std::vector<std::string> states = {},
                        const ChainTolerances& tol = {});
// Same, and additionally checks a supplied pi against the computed one.
MarkovChain build_chain(const Matrix& kernel, const Vector& pi, std::vector<std::string> states = {},
                        const ChainTolerances& tol = {});

// Null vector of (K - I)^T by a dense solve with the normalisation row sum(pi) = 1.
Vector stationary_distribution(const Matrix& kernel);

// Probability density with respect to pi: nonnegative, sum pi*rho = 1.
class Density {
 public:
  Density(const MarkovChain& chain, Vector values, double mass_tol = ChainTolerances{}.density_mass);
  static Density from_measure(const MarkovChain& chain, const Vector& mu,
                              double mass_tol = ChainTolerances{}.density_mass);
  static Density uniform(const MarkovChain& chain);
  static Density dirac(const MarkovChain& chain, int state);

  const Vector& values() const { return values_; }
  double operator[](int i) const { return values_[i]; }
  int size() const { return static_cast<int>(values_.size()); }
  bool strictly_positive() const { return values_.minCoeff() > 0.0; }

 private:
  struct Unchecked {};
  Density(Vector values, Unchecked) : values_(std::move(values)) {}
  friend Density heat_flow(const MarkovChain&, const Density&, double);
  Vector values_;
};

// rho_t = exp(t(K - I)) rho via Pade scaling-and-squaring.
Density heat_flow(const MarkovChain& chain, const Density& rho, double t);
Vector heat_flow(const MarkovChain& chain, const Vector& rho, double t);
// Classical RK4 on d/dt rho = (K - I) rho; used as an independent cross-check.
Vector heat_flow_rk4(const MarkovChain& chain, const Vector& rho, double t, int steps);

// sum pi rho log rho with 0 log 0 = 0.
double entropy(const MarkovChain& chain, const Vector& rho);
// sum pi |rho0 - rho1|, in [0, 2].
double total_variation(const MarkovChain& chain, const Vector& rho0, const Vector& rho1);

}  // namespace chainmetric
