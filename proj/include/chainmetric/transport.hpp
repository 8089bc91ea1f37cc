#pragma once

#include <string>
#include <vector>

#include "chainmetric/markov_chain.hpp"
#include "chainmetric/means.hpp"

namespace chainmetric {

// Function on ordered pairs (x, y), stored densely; the diagonal carries no information.
using EdgeField = Matrix;

// (grad psi)(x, y) = psi(x) - psi(y)
EdgeField gradient(const Vector& psi);
// (div F)(x) = 1/2 sum_y K(x,y) (F(y,x) - F(x,y)); adjoint to -gradient in the pi inner products.
Vector divergence(const MarkovChain& chain, const EdgeField& field);
double inner_pi(const MarkovChain& chain, const Vector& f, const Vector& g);
double inner_pi(const MarkovChain& chain, const EdgeField& f, const EdgeField& g);
// 1/2 sum K(x,y) theta(rho(x), rho(y)) pi(x) F(x,y) G(x,y)
double inner_rho(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho, const EdgeField& f,
                 const EdgeField& g);

// A = Pi B, both symmetric-weighted Laplacians: B(x,y) = -K(x,y) theta(rho(x), rho(y)) off the diagonal.
struct OnsagerMatrices {
  Matrix a;
  Matrix b;
};

OnsagerMatrices onsager(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho);
// A alone, built from the symmetrised edge measure so that it is exactly symmetric.
Matrix onsager_a(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho);

struct SupportPartition {
  std::vector<int> class_of;             // class index per state
  std::vector<std::vector<int>> classes;  // states per class, ascending
  std::vector<bool> in_support;
  int count() const { return static_cast<int>(classes.size()); }
  // sum over each class of pi * v
  Vector weighted_sums(const MarkovChain& chain, const Vector& v) const;
  Vector plain_sums(const Vector& v) const;
  // |supp| - number of classes contained in the support
  int dimension() const;
};

// Connected components of the graph with an edge wherever K(x,y) theta(rho(x), rho(y)) > 0;
// densities below zero_threshold count as zero.
SupportPartition support_partition(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                                   double zero_threshold = 1e-14);

struct KernelRange {
  SupportPartition partition;
  Matrix kernel_basis;  // one indicator column per class
  Matrix range_basis;   // orthonormal eigenvectors of A with eigenvalue above the cutoff
  Vector eigenvalues;
  double cutoff = 0.0;
  int numeric_nullity = 0;
};

bool in_range_a(const SupportPartition& partition, const Vector& v, double tol = 1e-9);
bool in_range_b(const MarkovChain& chain, const SupportPartition& partition, const Vector& v, double tol = 1e-9);

// Class-indicator kernel basis validated against a symmetric eigendecomposition of A with
// cutoff relative_cutoff * lambda_max; throws RankMismatch when the dimensions disagree.
KernelRange kernel_range(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                         double relative_cutoff = 1e-12);

struct PotentialSolution {
  Vector psi;        // lies in Ran A
  double residual;   // max |B psi - rho_dot|
};

// Solves A psi = Pi rho_dot by the eigen pseudo-inverse; throws NotInRange when rho_dot has
// nonzero pi-mass on some class.
PotentialSolution recover_potential(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho,
                                    const Vector& rho_dot, double range_tol = 1e-9,
                                    double relative_cutoff = 1e-12);

struct Finiteness {
  bool finite = true;
  int witness = -1;  // state whose class masses differ
  double mass0 = 0.0;
  double mass1 = 0.0;
};

// Finite whenever the boundary integral of the mean converges; otherwise each state's class must
// carry the same pi-mass under both densities.
Finiteness finiteness(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0, const Vector& rho1,
                      double mass_tol = 1e-10);

// sup of theta over [0, 1 / min pi]^2
double theta_sup(const MarkovChain& chain, const MeanFunction& mean);

// Largest two-state distance (unit rates) between the per-state marginals 1 - 2 rho(x) pi(x).
// Meaningful for homogeneous concave means only.
double comparison_lower_bound(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                              const Vector& rho1);

struct BoundsReport {
  double distance = 0.0;
  double total_variation = 0.0;
  double lipschitz_constant = 0.0;  // sqrt(2 sup theta)
  double lipschitz_margin = 0.0;    // lipschitz_constant * distance - total_variation
  bool comparison_applicable = false;
  double comparison_bound = 0.0;
  double comparison_margin = 0.0;   // distance - comparison_bound
  bool holds() const { return lipschitz_margin >= 0.0 && (!comparison_applicable || comparison_margin >= 0.0); }
};

BoundsReport bounds_report(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                           const Vector& rho1, double distance);
// As bounds_report, but throws BoundViolated carrying the negative margin.
BoundsReport tv_bounds_check(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                             const Vector& rho1, double distance);

}  // namespace chainmetric
