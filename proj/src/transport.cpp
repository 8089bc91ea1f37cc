#include "chainmetric/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "chainmetric/errors.hpp"
#include "chainmetric/two_point.hpp"

namespace chainmetric {
namespace {

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

EdgeField gradient(const Vector& psi) {
  const auto n = psi.size();
  return psi * Vector::Ones(n).transpose() - Vector::Ones(n) * psi.transpose();
}

Vector divergence(const MarkovChain& chain, const EdgeField& field) {
  const Matrix& k = chain.kernel();
  return 0.5 * (k.cwiseProduct(field.transpose() - field)).rowwise().sum();
}

double inner_pi(const MarkovChain& chain, const Vector& f, const Vector& g) {
  return chain.pi().dot(f.cwiseProduct(g));
}

double inner_pi(const MarkovChain& chain, const EdgeField& f, const EdgeField& g) {
  Matrix flux = chain.pi().asDiagonal() * chain.kernel();
  flux.diagonal().setZero();
  return 0.5 * flux.cwiseProduct(f).cwiseProduct(g).sum();
}

double inner_rho(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho, const EdgeField& f,
                 const EdgeField& g) {
  const int n = chain.size();
  double sum = 0.0;
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) {
      if (x == y || chain.kernel()(x, y) == 0.0) continue;
      sum += chain.kernel()(x, y) * mean(rho[x], rho[y]) * chain.pi()[x] * f(x, y) * g(x, y);
    }
  }
  return 0.5 * sum;
}

Matrix onsager_a(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho) {
  const int n = chain.size();
  const Matrix& q = chain.edge_weight();
  Matrix a = Matrix::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (q(x, y) == 0.0) continue;
      const double w = q(x, y) * mean(rho[x], rho[y]);
      a(x, y) = -w;
      a(y, x) = -w;
      a(x, x) += w;
      a(y, y) += w;
    }
  }
  return a;
}

OnsagerMatrices onsager(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho) {
  OnsagerMatrices m;
  m.a = onsager_a(chain, mean, rho);
  m.b = chain.pi().cwiseInverse().asDiagonal() * m.a;
  return m;
}

Vector SupportPartition::weighted_sums(const MarkovChain& chain, const Vector& v) const {
  Vector out = Vector::Zero(count());
  for (std::size_t x = 0; x < class_of.size(); ++x) out[class_of[x]] += chain.pi()[x] * v[x];
  return out;
}

Vector SupportPartition::plain_sums(const Vector& v) const {
  Vector out = Vector::Zero(count());
  for (std::size_t x = 0; x < class_of.size(); ++x) out[class_of[x]] += v[x];
  return out;
}

int SupportPartition::dimension() const {
  const int support = static_cast<int>(std::count(in_support.begin(), in_support.end(), true));
  int support_classes = 0;
  for (const auto& c : classes) {
    if (in_support[c.front()]) ++support_classes;
  }
  return support - support_classes;
}

SupportPartition support_partition(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                                   double zero_threshold) {
  const int n = chain.size();
  Vector r = rho;
  for (int x = 0; x < n; ++x) {
    if (r[x] < zero_threshold) r[x] = 0.0;
  }
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (chain.edge_weight()(x, y) > 0.0 && mean(r[x], r[y]) > 0.0) {
        parent[find_root(parent, x)] = find_root(parent, y);
      }
    }
  }
  SupportPartition p;
  p.class_of.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> root_class(static_cast<std::size_t>(n), -1);
  for (int x = 0; x < n; ++x) {
    const int root = find_root(parent, x);
    if (root_class[root] < 0) {
      root_class[root] = p.count();
      p.classes.emplace_back();
    }
    p.class_of[x] = root_class[root];
    p.classes[root_class[root]].push_back(x);
    p.in_support.push_back(r[x] > 0.0);
  }
  return p;
}

bool in_range_a(const SupportPartition& partition, const Vector& v, double tol) {
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  return partition.plain_sums(v).cwiseAbs().maxCoeff() <= tol * scale;
}

bool in_range_b(const MarkovChain& chain, const SupportPartition& partition, const Vector& v, double tol) {
  const double scale = std::max(1.0, v.cwiseAbs().maxCoeff());
  return partition.weighted_sums(chain, v).cwiseAbs().maxCoeff() <= tol * scale;
}

KernelRange kernel_range(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                         double relative_cutoff) {
  KernelRange kr;
  kr.partition = support_partition(chain, mean, rho);
  const int n = chain.size();
  kr.kernel_basis = Matrix::Zero(n, kr.partition.count());
  for (int x = 0; x < n; ++x) kr.kernel_basis(x, kr.partition.class_of[x]) = 1.0;

  Eigen::SelfAdjointEigenSolver<Matrix> eig(onsager_a(chain, mean, rho));
  kr.eigenvalues = eig.eigenvalues();
  const double lmax = kr.eigenvalues.cwiseAbs().maxCoeff();
  kr.cutoff = relative_cutoff * lmax;
  std::vector<int> kept;
  for (int i = 0; i < n; ++i) {
    if (lmax > 0.0 && kr.eigenvalues[i] > kr.cutoff) kept.push_back(i);
  }
  kr.numeric_nullity = n - static_cast<int>(kept.size());
  kr.range_basis = Matrix(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t j = 0; j < kept.size(); ++j) kr.range_basis.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(kept[j]);
  if (kr.numeric_nullity != kr.partition.count()) {
    std::ostringstream msg;
    msg << "numerical nullity " << kr.numeric_nullity << " differs from class count " << kr.partition.count();
    throw Error(ErrorKind::RankMismatch, msg.str());
  }
  return kr;
}

PotentialSolution recover_potential(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                                    const Vector& rho_dot, double range_tol, double relative_cutoff) {
  const SupportPartition partition = support_partition(chain, mean, rho);
  if (!in_range_b(chain, partition, rho_dot, range_tol)) {
    const Vector sums = partition.weighted_sums(chain, rho_dot);
    Eigen::Index worst = 0;
    sums.cwiseAbs().maxCoeff(&worst);
    std::ostringstream msg;
    msg << "velocity carries mass " << sums[worst] << " on the class of state "
        << partition.classes[static_cast<std::size_t>(worst)].front();
    throw Error(ErrorKind::NotInRange, msg.str(), sums[worst]);
  }
  const Matrix a = onsager_a(chain, mean, rho);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  const Vector& lambda = eig.eigenvalues();
  const double cutoff = relative_cutoff * lambda.cwiseAbs().maxCoeff();
  const Vector g = chain.pi().cwiseProduct(rho_dot);
  Vector coeffs = eig.eigenvectors().transpose() * g;
  for (int i = 0; i < coeffs.size(); ++i) coeffs[i] = lambda[i] > cutoff ? coeffs[i] / lambda[i] : 0.0;
  PotentialSolution sol;
  sol.psi = eig.eigenvectors() * coeffs;
  sol.residual = ((a * sol.psi).cwiseQuotient(chain.pi()) - rho_dot).cwiseAbs().maxCoeff();
  return sol;
}

Finiteness finiteness(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0, const Vector& rho1,
                      double mass_tol) {
  Finiteness out;
  if (c_theta(mean).finite) return out;
  const SupportPartition p0 = support_partition(chain, mean, rho0);
  const SupportPartition p1 = support_partition(chain, mean, rho1);
  const Vector m0 = p0.weighted_sums(chain, rho0);
  const Vector m1 = p1.weighted_sums(chain, rho1);
  for (int x = 0; x < chain.size(); ++x) {
    const double a = m0[p0.class_of[x]];
    const double b = m1[p1.class_of[x]];
    if (std::abs(a - b) > mass_tol) return {false, x, a, b};
  }
  return out;
}

double theta_sup(const MarkovChain& chain, const MeanFunction& mean) {
  const double m = 1.0 / chain.pi().minCoeff();
  if (mean.properties().monotone) return mean(m, m);
  double best = 0.0;
  constexpr int kGrid = 200;
  for (int i = 0; i <= kGrid; ++i) {
    for (int j = 0; j <= kGrid; ++j) best = std::max(best, mean(m * i / kGrid, m * j / kGrid));
  }
  return best;
}

double comparison_lower_bound(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                              const Vector& rho1) {
  const TwoPointChain unit(1.0, 1.0);
  double best = 0.0;
  for (int x = 0; x < chain.size(); ++x) {
    const double b0 = std::clamp(1.0 - 2.0 * rho0[x] * chain.pi()[x], -1.0, 1.0);
    const double b1 = std::clamp(1.0 - 2.0 * rho1[x] * chain.pi()[x], -1.0, 1.0);
    best = std::max(best, distance(unit, mean, b0, b1).value);
  }
  return best;
}

BoundsReport bounds_report(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                           const Vector& rho1, double distance) {
  BoundsReport r;
  r.distance = distance;
  r.total_variation = total_variation(chain, rho0, rho1);
  r.lipschitz_constant = std::sqrt(2.0 * theta_sup(chain, mean));
  r.lipschitz_margin = r.lipschitz_constant * distance - r.total_variation;
  r.comparison_applicable = mean.properties().homogeneous && mean.properties().concave;
  if (r.comparison_applicable) {
    r.comparison_bound = comparison_lower_bound(chain, mean, rho0, rho1);
    r.comparison_margin = distance - r.comparison_bound;
  }
  return r;
}

BoundsReport tv_bounds_check(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                             const Vector& rho1, double distance) {
  const BoundsReport r = bounds_report(chain, mean, rho0, rho1, distance);
  if (r.lipschitz_margin < 0.0) {
    throw Error(ErrorKind::BoundViolated, "total variation exceeds the Lipschitz bound", r.lipschitz_margin);
  }
  if (r.comparison_applicable && r.comparison_margin < 0.0) {
    throw Error(ErrorKind::BoundViolated, "distance is below the two-point comparison bound", r.comparison_margin);
  }
  return r;
}

}  // namespace chainmetric
