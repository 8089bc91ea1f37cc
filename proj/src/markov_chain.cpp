#include "chainmetric/markov_chain.hpp"

#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "chainmetric/errors.hpp"

namespace chainmetric {
namespace {

std::string state_label(const std::vector<std::string>& states, int i) {
  return states.empty() ? std::to_string(i) : states[static_cast<std::size_t>(i)];
}

std::vector<bool> reachable(const Matrix& kernel, bool transpose) {
  const int n = static_cast<int>(kernel.rows());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<int> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const int x = stack.back();
    stack.pop_back();
    for (int y = 0; y < n; ++y) {
      const double w = transpose ? kernel(y, x) : kernel(x, y);
      if (w > 0.0 && !seen[static_cast<std::size_t>(y)]) {
        seen[static_cast<std::size_t>(y)] = true;
        stack.push_back(y);
      }
    }
  }
  return seen;
}

}  // namespace

Matrix MarkovChain::generator() const {
  return kernel_ - Matrix::Identity(size(), size());
}

double MarkovChain::stationarity_residual() const {
  return (kernel_.transpose() * pi_ - pi_).cwiseAbs().maxCoeff();
}

double MarkovChain::detailed_balance_residual() const {
  const Matrix flux = pi_.asDiagonal() * kernel_;
  return (flux - flux.transpose()).cwiseAbs().maxCoeff();
}

Vector stationary_distribution(const Matrix& kernel) {
  const int n = static_cast<int>(kernel.rows());
  Matrix system = (kernel - Matrix::Identity(n, n)).transpose();
  system.row(n - 1).setOnes();
  Vector rhs = Vector::Zero(n);
  rhs[n - 1] = 1.0;
  return system.fullPivLu().solve(rhs);
}

MarkovChain build_chain(const Matrix& kernel, std::vector<std::string> states, const ChainTolerances& tol) {
  const int n = static_cast<int>(kernel.rows());
  if (n == 0 || kernel.cols() != n) {
    throw Error(ErrorKind::NotStochastic, "kernel must be a non-empty square matrix");
  }
  if (!states.empty() && static_cast<int>(states.size()) != n) {
    throw Error(ErrorKind::InvalidArgument, "state labels do not match kernel size");
  }
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (!std::isfinite(kernel(x, y)) || kernel(x, y) < 0.0) {
        throw Error(ErrorKind::NotStochastic, "row " + state_label(states, x) + " has a negative or non-finite entry");
      }
    }
    const double residual = std::abs(kernel.row(x).sum() - 1.0);
    if (residual > tol.row_sum) {
      std::ostringstream msg;
      msg << "row " << state_label(states, x) << " sums to 1 + " << kernel.row(x).sum() - 1.0;
      throw Error(ErrorKind::NotStochastic, msg.str(), residual);
    }
  }
  const auto forward = reachable(kernel, false);
  const auto backward = reachable(kernel, true);
  for (int x = 0; x < n; ++x) {
    if (!forward[static_cast<std::size_t>(x)] || !backward[static_cast<std::size_t>(x)]) {
      throw Error(ErrorKind::NotIrreducible,
                  "state " + state_label(states, x) + " does not communicate with state " + state_label(states, 0));
    }
  }

  MarkovChain chain;
  chain.kernel_ = kernel;
  chain.pi_ = stationary_distribution(kernel);
  chain.states_ = std::move(states);
  if (chain.stationarity_residual() > tol.stationarity || chain.pi_.minCoeff() <= 0.0) {
    throw Error(ErrorKind::NotIrreducible, "stationary distribution is not unique and positive",
                chain.stationarity_residual());
  }
  const Vector& pi = chain.pi_;
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      const double gap = std::abs(pi[x] * kernel(x, y) - pi[y] * kernel(y, x));
      if (gap > tol.detailed_balance) {
        std::ostringstream msg;
        msg << "detailed balance fails on pair (" << state_label(chain.states_, x) << ", "
            << state_label(chain.states_, y) << ") by " << gap;
        throw Error(ErrorKind::NotReversible, msg.str(), gap);
      }
    }
  }
  const Matrix flux = pi.asDiagonal() * kernel;
  chain.edge_weight_ = 0.5 * (flux + flux.transpose());
  chain.edge_weight_.diagonal().setZero();
  return chain;
}

MarkovChain build_chain(const Matrix& kernel, const Vector& pi, std::vector<std::string> states,
                        const ChainTolerances& tol) {
  MarkovChain chain = build_chain(kernel, std::move(states), tol);
  if (pi.size() != chain.size()) {
    throw Error(ErrorKind::InvalidArgument, "supplied pi has the wrong length");
  }
  const double gap = (pi - chain.pi()).cwiseAbs().maxCoeff();
  if (gap > tol.stationarity) {
    std::ostringstream msg;
    msg << "supplied pi differs from the stationary distribution by " << gap;
    throw Error(ErrorKind::InvalidArgument, msg.str(), gap);
  }
  return chain;
}

Density::Density(const MarkovChain& chain, Vector values, double mass_tol) : values_(std::move(values)) {
  if (values_.size() != chain.size()) {
    throw Error(ErrorKind::InvalidDensity, "density has the wrong length");
  }
  for (int i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0) {
      throw Error(ErrorKind::InvalidDensity, "density is negative or non-finite at state " + std::to_string(i));
    }
  }
  const double mass = chain.pi().dot(values_);
  if (std::abs(mass - 1.0) > mass_tol) {
    std::ostringstream msg;
    msg << "density has mass " << mass << " with respect to pi";
    throw Error(ErrorKind::InvalidDensity, msg.str(), mass - 1.0);
  }
}

Density Density::from_measure(const MarkovChain& chain, const Vector& mu, double mass_tol) {
  if (mu.size() != chain.size()) {
    throw Error(ErrorKind::InvalidDensity, "measure has the wrong length");
  }
  return Density(chain, mu.cwiseQuotient(chain.pi()), mass_tol);
}

Density Density::uniform(const MarkovChain& chain) {
  return Density(Vector::Ones(chain.size()), Unchecked{});
}

Density Density::dirac(const MarkovChain& chain, int state) {
  if (state < 0 || state >= chain.size()) {
    throw Error(ErrorKind::InvalidArgument, "state index out of range");
  }
  Vector v = Vector::Zero(chain.size());
  v[state] = 1.0 / chain.pi()[state];
  return Density(std::move(v), Unchecked{});
}

Vector heat_flow(const MarkovChain& chain, const Vector& rho, double t) {
  if (t < 0.0) throw Error(ErrorKind::InvalidArgument, "heat flow time must be nonnegative");
  if (t == 0.0) return rho;
  const Matrix propagator = (t * chain.generator()).exp();
  return propagator * rho;
}

Density heat_flow(const MarkovChain& chain, const Density& rho, double t) {
  return Density(heat_flow(chain, rho.values(), t), Density::Unchecked{});
}

Vector heat_flow_rk4(const MarkovChain& chain, const Vector& rho, double t, int steps) {
  const Matrix L = chain.generator();
  const double h = t / steps;
  Vector x = rho;
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = L * x;
    const Vector k2 = L * (x + 0.5 * h * k1);
    const Vector k3 = L * (x + 0.5 * h * k2);
    const Vector k4 = L * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return x;
}

double entropy(const MarkovChain& chain, const Vector& rho) {
  double h = 0.0;
  for (int i = 0; i < rho.size(); ++i) {
    if (rho[i] > 0.0) h += chain.pi()[i] * rho[i] * std::log(rho[i]);
  }
  return h;
}

double total_variation(const MarkovChain& chain, const Vector& rho0, const Vector& rho1) {
  return chain.pi().dot((rho0 - rho1).cwiseAbs());
}

}  // namespace chainmetric
