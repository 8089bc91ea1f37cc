#include "chainmetric/path_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "chainmetric/errors.hpp"
#include "chainmetric/transport.hpp"

namespace chainmetric {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Edge {
  int x;
  int y;
  double q;
};

std::vector<Edge> edges_of(const MarkovChain& chain) {
  std::vector<Edge> edges;
  const Matrix& q = chain.edge_weight();
  for (int x = 0; x < chain.size(); ++x) {
    for (int y = x + 1; y < chain.size(); ++y) {
      if (q(x, y) > 0.0) edges.push_back({x, y, q(x, y)});
    }
  }
  return edges;
}

Matrix class_indicator_gram(int n, const std::vector<std::vector<int>>& classes) {
  Matrix e = Matrix::Zero(n, n);
  for (const auto& c : classes) {
    for (int x : c) {
      for (int y : c) e(x, y) = 1.0;
    }
  }
  return e;
}

// Evaluates the reduced action: psi_k is eliminated through (A + c E) psi = Pi delta / dt, where E
// sums the class indicator outer products; on Ran A this is the pseudo-inverse of A.
class ActionModel {
 public:
  ActionModel(const MarkovChain& chain, const MeanFunction& mean, std::vector<double> times, MidpointRule rule)
      : chain_(chain), mean_(mean), times_(std::move(times)), rule_(rule), edges_(edges_of(chain)) {}

  int intervals() const { return static_cast<int>(times_.size()) - 1; }
  const std::vector<double>& times() const { return times_; }

  double evaluate(const std::vector<Vector>& nodes, std::vector<Vector>* grad, std::vector<Vector>* potentials) const {
    const int n = chain_.size();
    double value = 0.0;
    if (grad) grad->assign(nodes.size(), Vector::Zero(n));
    if (potentials) potentials->clear();
    Vector psi(n);
    Vector dm(n);
    for (int k = 0; k < intervals(); ++k) {
      const double dt = times_[k + 1] - times_[k];
      const Vector& lo = nodes[k];
      const Vector& hi = nodes[k + 1];
      const Vector g = chain_.pi().cwiseProduct(hi - lo);
      if (rule_ == MidpointRule::mean) {
        Vector m(n);
        for (int i = 0; i < n; ++i) m[i] = mean_(lo[i], hi[i]);
        const double term = point_term(m, g, dt, psi, grad ? &dm : nullptr);
        if (!std::isfinite(term)) return kInf;
        value += term;
        if (potentials) potentials->push_back(psi);
        if (!grad) continue;
        add_flux_gradient(*grad, k, psi, 1.0);
        for (int x = 0; x < n; ++x) {
          if (dm[x] == 0.0) continue;
          (*grad)[k][x] += dm[x] * mean_.d1(lo[x], hi[x]);
          (*grad)[k + 1][x] += dm[x] * mean_.d1(hi[x], lo[x]);
        }
        continue;
      }
      for (const auto& [weight, s] : quadrature()) {
        const Vector m = (1.0 - s) * lo + s * hi;
        const double term = point_term(m, g, dt, psi, grad ? &dm : nullptr);
        if (!std::isfinite(term)) return kInf;
        value += weight * term;
        if (potentials && s == 0.5) potentials->push_back(psi);
        if (potentials && rule_ == MidpointRule::left) potentials->push_back(psi);
        if (!grad) continue;
        add_flux_gradient(*grad, k, psi, weight);
        (*grad)[k] += weight * (1.0 - s) * dm;
        (*grad)[k + 1] += weight * s * dm;
      }
    }
    return value;
  }

  // Density used by the single-point rules.
  Vector midpoint(const Vector& a, const Vector& b) const {
    if (rule_ == MidpointRule::left) return a;
    if (rule_ == MidpointRule::mean) {
      Vector m(a.size());
      for (int i = 0; i < a.size(); ++i) m[i] = mean_(a[i], b[i]);
      return m;
    }
    return 0.5 * (a + b);
  }

 private:
  std::vector<std::pair<double, double>> quadrature() const {
    if (rule_ == MidpointRule::left) return {{1.0, 0.0}};
    if (rule_ == MidpointRule::segment) {
      const double off = 0.5 * std::sqrt(0.6);
      return {{5.0 / 18.0, 0.5 - off}, {8.0 / 18.0, 0.5}, {5.0 / 18.0, 0.5 + off}};
    }
    return {{1.0, 0.5}};
  }

  void add_flux_gradient(std::vector<Vector>& grad, int k, const Vector& psi, double weight) const {
    grad[k + 1] += 2.0 * weight * chain_.pi().cwiseProduct(psi);
    grad[k] -= 2.0 * weight * chain_.pi().cwiseProduct(psi);
  }

  // dt [A(m) psi, psi] with psi solving A(m) psi = g / dt; dm receives the derivative in m.
  double point_term(const Vector& m, const Vector& g, double dt, Vector& psi, Vector* dm) const {
    const int n = chain_.size();
    if (!m.allFinite() || m.minCoeff() < 0.0) return kInf;
    Matrix a = Matrix::Zero(n, n);
    std::vector<int> parent(static_cast<std::size_t>(n));
    std::iota(parent.begin(), parent.end(), 0);
    for (const Edge& e : edges_) {
      const double w = e.q * mean_(m[e.x], m[e.y]);
      if (!(w > 0.0)) continue;
      a(e.x, e.y) -= w;
      a(e.y, e.x) -= w;
      a(e.x, e.x) += w;
      a(e.y, e.y) += w;
      parent[root(parent, e.x)] = root(parent, e.y);
    }
    std::vector<std::vector<int>> classes;
    std::vector<int> index(static_cast<std::size_t>(n), -1);
    for (int x = 0; x < n; ++x) {
      const int r = root(parent, x);
      if (index[r] < 0) {
        index[r] = static_cast<int>(classes.size());
        classes.emplace_back();
      }
      classes[index[r]].push_back(x);
    }
    const double trace = a.trace();
    const double c = trace > 0.0 ? trace / n : 1.0;
    const Eigen::LLT<Matrix> llt(a + c * class_indicator_gram(n, classes));
    if (llt.info() != Eigen::Success) return kInf;
    psi = llt.solve(g) / dt;
    if (!psi.allFinite()) return kInf;
    if (dm) {
      dm->setZero(n);
      for (const Edge& e : edges_) {
        const double diff = psi[e.x] - psi[e.y];
        const double d = e.q * diff * diff * dt;
        if (d == 0.0) continue;
        (*dm)[e.x] -= d * mean_.d1(m[e.x], m[e.y]);
        (*dm)[e.y] -= d * mean_.d1(m[e.y], m[e.x]);
      }
    }
    return psi.dot(g);
  }

  static int root(std::vector<int>& parent, int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  const MarkovChain& chain_;
  const MeanFunction& mean_;
  std::vector<double> times_;
  MidpointRule rule_;
  std::vector<Edge> edges_;
};

// Affine feasible set of the interior nodes: on each (node, class) group the pi-weighted sum is fixed
// and every value stays above the floor.
struct FeasibleSet {
  std::vector<int> free_states;
  std::vector<std::vector<int>> groups;  // positions into free_states
  std::vector<double> masses;            // per class
  double floor = 0.0;
  Vector weights;                        // pi on free states

  void project(Vector& x, int nodes) const {
    const int f = static_cast<int>(free_states.size());
    for (int k = 0; k < nodes; ++k) {
      for (std::size_t c = 0; c < groups.size(); ++c) project_group(x, k * f, groups[c], masses[c]);
    }
  }

  // Euclidean projection onto {sum w_i x_i = mass, x_i >= floor} by iterative clipping.
  void project_group(Vector& x, int offset, const std::vector<int>& group, double mass) const {
    std::vector<bool> clipped(group.size(), false);
    for (std::size_t pass = 0; pass <= group.size(); ++pass) {
      double wy = 0.0;
      double ww = 0.0;
      double fixed = 0.0;
      for (std::size_t i = 0; i < group.size(); ++i) {
        const double w = weights[group[i]];
        if (clipped[i]) {
          fixed += w * floor;
        } else {
          wy += w * x[offset + group[i]];
          ww += w * w;
        }
      }
      const double lambda = ww > 0.0 ? (wy - (mass - fixed)) / ww : 0.0;
      bool changed = false;
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (!clipped[i] && x[offset + group[i]] - lambda * weights[group[i]] < floor) {
          clipped[i] = true;
          changed = true;
        }
      }
      if (!changed) {
        for (std::size_t i = 0; i < group.size(); ++i) {
          double& v = x[offset + group[i]];
          v = clipped[i] ? floor : v - lambda * weights[group[i]];
        }
        return;
      }
    }
  }

  // Orthogonal projection onto the tangent space of the equality constraints.
  void project_tangent(Vector& d, int nodes) const {
    const int f = static_cast<int>(free_states.size());
    for (int k = 0; k < nodes; ++k) {
      for (const auto& group : groups) {
        double wd = 0.0;
        double ww = 0.0;
        for (int i : group) {
          wd += weights[i] * d[k * f + i];
          ww += weights[i] * weights[i];
        }
        for (int i : group) d[k * f + i] -= weights[i] * wd / ww;
      }
    }
  }
};

void validate_endpoint(const MarkovChain& chain, const Vector& rho, const char* name) {
  if (rho.size() != chain.size() || !rho.allFinite() || rho.minCoeff() < 0.0 ||
      std::abs(chain.pi().dot(rho) - 1.0) > 1e-10) {
    throw Error(ErrorKind::InfeasibleEndpoints, std::string(name) + " is not a probability density");
  }
}

std::vector<double> resolve_times(const MinActionOptions& options) {
  if (options.times.empty()) {
    if (options.intervals < 1) throw Error(ErrorKind::InvalidArgument, "number of intervals must be positive");
    return uniform_times(options.intervals);
  }
  const auto& t = options.times;
  if (t.size() < 2 || t.front() != 0.0 || t.back() != 1.0 ||
      !std::is_sorted(t.begin(), t.end(), [](double a, double b) { return a <= b; })) {
    throw Error(ErrorKind::InvalidArgument, "time grid must increase strictly from 0 to 1");
  }
  return t;
}

}  // namespace

std::vector<double> uniform_times(int intervals) {
  std::vector<double> t(static_cast<std::size_t>(intervals) + 1);
  for (int k = 0; k <= intervals; ++k) t[k] = static_cast<double>(k) / intervals;
  return t;
}

double action(const MarkovChain& chain, const MeanFunction& mean, const DiscretePath& path, MidpointRule rule) {
  const ActionModel model(chain, mean, path.times, rule);
  double total = 0.0;
  for (int k = 0; k < path.intervals(); ++k) {
    const double dt = path.times[k + 1] - path.times[k];
    const Vector m = model.midpoint(path.nodes[k], path.nodes[k + 1]);
    const Vector& psi = path.potentials[k];
    total += dt * psi.dot(onsager_a(chain, mean, m) * psi);
  }
  return total;
}

ReducedAction reduced_action(const MarkovChain& chain, const MeanFunction& mean, const std::vector<double>& times,
                             const std::vector<Vector>& nodes, MidpointRule rule) {
  const ActionModel model(chain, mean, times, rule);
  ReducedAction out;
  out.value = model.evaluate(nodes, &out.gradient, &out.potentials);
  return out;
}

MinActionResult min_action(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0, const Vector& rho1,
                           const MinActionOptions& options) {
  validate_endpoint(chain, rho0, "rho0");
  validate_endpoint(chain, rho1, "rho1");
  const Finiteness fin = finiteness(chain, mean, rho0, rho1);
  if (!fin.finite) {
    std::ostringstream msg;
    msg << "endpoints are at infinite distance: the class of state " << fin.witness << " carries mass " << fin.mass0
        << " versus " << fin.mass1;
    throw Error(ErrorKind::InfeasibleEndpoints, msg.str(), static_cast<double>(fin.witness));
  }
  const std::vector<double> times = resolve_times(options);
  const int intervals = static_cast<int>(times.size()) - 1;
  const int n = chain.size();
  const int interior = intervals - 1;

  FeasibleSet fs;
  fs.floor = options.floor;
  if (c_theta(mean).finite) {
    fs.free_states.resize(static_cast<std::size_t>(n));
    std::iota(fs.free_states.begin(), fs.free_states.end(), 0);
    fs.groups.push_back(fs.free_states);
    fs.masses.push_back(chain.pi().dot(rho0));
  } else {
    const SupportPartition part = support_partition(chain, mean, rho0);
    std::vector<int> position(static_cast<std::size_t>(n), -1);
    for (int x = 0; x < n; ++x) {
      if (part.in_support[x]) {
        position[x] = static_cast<int>(fs.free_states.size());
        fs.free_states.push_back(x);
      }
    }
    const Vector masses = part.weighted_sums(chain, rho0);
    for (int c = 0; c < part.count(); ++c) {
      if (!part.in_support[part.classes[c].front()]) continue;
      std::vector<int> group;
      for (int x : part.classes[c]) group.push_back(position[x]);
      fs.groups.push_back(group);
      fs.masses.push_back(masses[c]);
    }
  }
  const int f = static_cast<int>(fs.free_states.size());
  fs.weights.resize(f);
  for (int i = 0; i < f; ++i) fs.weights[i] = chain.pi()[fs.free_states[i]];
  for (std::size_t c = 0; c < fs.groups.size(); ++c) {
    double w = 0.0;
    for (int i : fs.groups[c]) w += fs.weights[i];
    if (fs.masses[c] < fs.floor * w) {
      throw Error(ErrorKind::InfeasibleEndpoints, "class mass is below the density floor");
    }
  }

  const ActionModel model(chain, mean, times, options.rule);
  std::vector<Vector> nodes(static_cast<std::size_t>(intervals) + 1);
  nodes.front() = rho0;
  nodes.back() = rho1;
  const int dim = interior * f;
  Vector x(dim);
  for (int k = 1; k < intervals; ++k) {
    const Vector init = options.initial_nodes && static_cast<int>(options.initial_nodes->size()) == intervals + 1
                            ? (*options.initial_nodes)[k]
                            : Vector((1.0 - times[k]) * rho0 + times[k] * rho1);
    for (int i = 0; i < f; ++i) x[(k - 1) * f + i] = init[fs.free_states[i]];
  }
  if (options.init_perturbation > 0.0) {
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < dim; ++i) x[i] *= 1.0 + options.init_perturbation * u(rng);
  }
  fs.project(x, interior);

  MinActionResult result;
  auto unpack = [&](const Vector& v) {
    for (int k = 1; k < intervals; ++k) {
      Vector node = Vector::Zero(n);
      for (int i = 0; i < f; ++i) node[fs.free_states[i]] = v[(k - 1) * f + i];
      nodes[k] = node;
    }
  };
  auto objective = [&](const Vector& v, Vector* gx) {
    ++result.evaluations;
    unpack(v);
    if (!gx) return model.evaluate(nodes, nullptr, nullptr);
    double value = 0.0;
    if (options.finite_difference_gradient) {
      value = model.evaluate(nodes, nullptr, nullptr);
      gx->resize(dim);
      Vector probe = v;
      for (int i = 0; i < dim; ++i) {
        const double h = options.fd_step * std::max(1.0, std::abs(v[i]));
        const double h_lo = std::min(h, std::max(v[i] - 0.5 * fs.floor, 0.0));
        probe[i] = v[i] + h;
        unpack(probe);
        const double up = model.evaluate(nodes, nullptr, nullptr);
        probe[i] = v[i] - h_lo;
        unpack(probe);
        const double down = model.evaluate(nodes, nullptr, nullptr);
        probe[i] = v[i];
        (*gx)[i] = (up - down) / (h + h_lo);
      }
      unpack(v);
      return value;
    }
    std::vector<Vector> grad;
    value = model.evaluate(nodes, &grad, nullptr);
    gx->resize(dim);
    for (int k = 1; k < intervals; ++k) {
      for (int i = 0; i < f; ++i) (*gx)[(k - 1) * f + i] = grad[k][fs.free_states[i]];
    }
    return value;
  };

  auto finish = [&](const Vector& v) {
    unpack(v);
    std::vector<Vector> potentials;
    result.action = model.evaluate(nodes, nullptr, &potentials);
    result.distance = std::sqrt(std::max(result.action, 0.0));
    result.path.times = times;
    result.path.nodes = nodes;
    result.path.potentials = potentials;
    return result;
  };

  if (dim == 0 || (rho0 - rho1).cwiseAbs().maxCoeff() == 0.0) {
    result.converged = true;
    result.status = "trivial";
    finish(x);
    result.history = {result.action};
    return result;
  }

  Vector g;
  double fx = objective(x, &g);
  if (!std::isfinite(fx)) throw Error(ErrorKind::Stalled, "initial path has undefined action");
  result.history.push_back(fx);

  auto kkt_gradient = [&](const Vector& v, const Vector& grad) {
    Vector gp = grad;
    fs.project_tangent(gp, interior);
    for (int i = 0; i < dim; ++i) {
      if (v[i] <= fs.floor * (1.0 + 1e-12) && gp[i] > 0.0) gp[i] = 0.0;
    }
    return gp;
  };

  Matrix h;
  bool have_h = false;
  const double g0 = kkt_gradient(x, g).cwiseAbs().maxCoeff();
  result.status = "max_iter";
  for (int it = 0; it < options.max_iter; ++it) {
    Vector gp = g;
    fs.project_tangent(gp, interior);
    result.projected_gradient = kkt_gradient(x, g).cwiseAbs().maxCoeff();
    if (result.projected_gradient <= options.gradient_tol) {
      result.converged = true;
      result.status = "gradient below tolerance";
      break;
    }
    Vector d = have_h ? Vector(-(h * gp)) : Vector(-gp * (0.05 / std::max(gp.cwiseAbs().maxCoeff(), 1e-300)));
    if (have_h && d.dot(gp) >= 0.0) {
      have_h = false;
      d = -gp * (0.05 / gp.cwiseAbs().maxCoeff());
    }

    bool accepted = false;
    Vector xn;
    Vector gn;
    double fn = kInf;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double alpha = 1.0;
      for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
        xn = x + alpha * d;
        fs.project(xn, interior);
        fn = objective(xn, nullptr);
        if (std::isfinite(fn) && fn <= fx + 1e-4 * g.dot(xn - x) && fn <= fx) {
          accepted = true;
          break;
        }
      }
      if (!accepted && have_h) {
        have_h = false;
        d = -gp * (0.05 / gp.cwiseAbs().maxCoeff());
      } else {
        break;
      }
    }
    if (!accepted) {
      if (result.iterations == 0 && result.projected_gradient > 1e-6 * std::max(1.0, g0)) {
        throw Error(ErrorKind::Stalled, "line search made no progress from the initial path", fx);
      }
      result.converged = result.projected_gradient <= 1e-4 * std::max(g0, 1e-300) || result.iterations > 0;
      result.status = "line search exhausted";
      break;
    }
    fn = objective(xn, &gn);
    const Vector s = xn - x;
    Vector y = gn - g;
    fs.project_tangent(y, interior);
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!have_h) {
        h = Matrix::Identity(dim, dim) * (sy / y.squaredNorm());
        have_h = true;
      }
      const Vector hy = h * y;
      const double yhy = y.dot(hy);
      h += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    x = xn;
    g = gn;
    fx = fn;
    ++result.iterations;
    result.history.push_back(fx);
    const std::size_t m = result.history.size();
    if (m > 10 && result.history[m - 11] - fx <= options.tol * fx) {
      result.converged = true;
      result.status = "relative decrease below tolerance";
      break;
    }
  }
  return finish(x);
}

void geodesic_rhs(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho, const Vector& psi,
                  Vector& rho_dot, Vector& psi_dot) {
  const int n = chain.size();
  const Matrix& q = chain.edge_weight();
  rho_dot.setZero(n);
  psi_dot.setZero(n);
  for (int x = 0; x < n; ++x) {
    for (int y = x + 1; y < n; ++y) {
      if (q(x, y) == 0.0) continue;
      const double diff = psi[x] - psi[y];
      const double flow = q(x, y) * mean(rho[x], rho[y]) * diff;
      rho_dot[x] += flow;
      rho_dot[y] -= flow;
      const double sq = 0.5 * q(x, y) * diff * diff;
      psi_dot[x] -= sq * mean.d1(rho[x], rho[y]);
      psi_dot[y] -= sq * mean.d1(rho[y], rho[x]);
    }
  }
  rho_dot = rho_dot.cwiseQuotient(chain.pi());
  psi_dot = psi_dot.cwiseQuotient(chain.pi());
}

namespace {

struct Trajectory {
  bool ok = true;
  std::vector<Vector> rho;
  std::vector<Vector> psi;
};

Trajectory integrate_geodesic(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0,
                              const Vector& psi0, int steps, bool keep) {
  const double h = 1.0 / steps;
  Trajectory tr;
  Vector r = rho0;
  Vector p = psi0;
  if (keep) {
    tr.rho.push_back(r);
    tr.psi.push_back(p);
  }
  Vector kr1, kp1, kr2, kp2, kr3, kp3, kr4, kp4;
  for (int i = 0; i < steps; ++i) {
    geodesic_rhs(chain, mean, r, p, kr1, kp1);
    const Vector r2 = r + 0.5 * h * kr1;
    if (r2.minCoeff() <= 0.0) return {false, {}, {}};
    geodesic_rhs(chain, mean, r2, p + 0.5 * h * kp1, kr2, kp2);
    const Vector r3 = r + 0.5 * h * kr2;
    if (r3.minCoeff() <= 0.0) return {false, {}, {}};
    geodesic_rhs(chain, mean, r3, p + 0.5 * h * kp2, kr3, kp3);
    const Vector r4 = r + h * kr3;
    if (r4.minCoeff() <= 0.0) return {false, {}, {}};
    geodesic_rhs(chain, mean, r4, p + h * kp3, kr4, kp4);
    r += (h / 6.0) * (kr1 + 2.0 * kr2 + 2.0 * kr3 + kr4);
    p += (h / 6.0) * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
    if (r.minCoeff() <= 0.0 || !r.allFinite() || !p.allFinite()) return {false, {}, {}};
    if (keep) {
      tr.rho.push_back(r);
      tr.psi.push_back(p);
    }
  }
  if (!keep) {
    tr.rho.push_back(r);
    tr.psi.push_back(p);
  }
  return tr;
}

}  // namespace

ShootResult geodesic_shoot(const MarkovChain& chain, const MeanFunction& mean, const Vector& rho0, const Vector& rho1,
                           const ShootOptions& options) {
  validate_endpoint(chain, rho0, "rho0");
  validate_endpoint(chain, rho1, "rho1");
  if (rho0.minCoeff() <= 0.0 || rho1.minCoeff() <= 0.0) {
    throw Error(ErrorKind::InvalidArgument, "shooting needs strictly positive endpoints");
  }
  const int n = chain.size();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(onsager_a(chain, mean, rho0));
  const Matrix basis = eig.eigenvectors().rightCols(n - 1);  // complement of the constants

  auto endpoint = [&](const Vector& c, int steps, Vector& out) {
    const Trajectory tr = integrate_geodesic(chain, mean, rho0, basis * c, steps, false);
    if (!tr.ok) return false;
    out = tr.rho.back() - rho1;
    return true;
  };

  const double target = 1e-3 * options.endpoint_tol;
  auto newton = [&](Vector c, int steps, int& iterations, double& residual) {
    Vector r;
    if (!endpoint(c, steps, r)) return std::optional<Vector>();
    residual = r.cwiseAbs().maxCoeff();
    for (iterations = 0; iterations < options.max_newton && residual > target; ++iterations) {
      Matrix jac(n, n - 1);
      const double hstep = 1e-6 * std::max(1.0, c.cwiseAbs().maxCoeff());
      for (int j = 0; j < n - 1; ++j) {
        Vector cp = c;
        Vector cm = c;
        cp[j] += hstep;
        cm[j] -= hstep;
        Vector rp;
        Vector rm;
        if (!endpoint(cp, steps, rp) || !endpoint(cm, steps, rm)) return std::optional<Vector>();
        jac.col(j) = (rp - rm) / (2.0 * hstep);
      }
      const Vector delta = jac.colPivHouseholderQr().solve(-r);
      bool improved = false;
      double lambda = 1.0;
      for (int ls = 0; ls < 30; ++ls, lambda *= 0.5) {
        Vector rn;
        const Vector cn = c + lambda * delta;
        if (endpoint(cn, steps, rn) && rn.cwiseAbs().maxCoeff() < residual) {
          c = cn;
          r = rn;
          residual = rn.cwiseAbs().maxCoeff();
          improved = true;
          break;
        }
      }
      if (!improved) break;
    }
    return std::optional<Vector>(c);
  };

  ShootResult best;
  double best_residual = kInf;
  std::vector<Vector> starts;
  if (options.initial_potential) starts.push_back(basis.transpose() * *options.initial_potential);
  starts.push_back(basis.transpose() * recover_potential(chain, mean, rho0, rho1 - rho0).psi);
  bool warm_added = false;

  for (std::size_t s = 0; s < starts.size(); ++s) {
    for (int steps = options.steps; steps <= 4 * options.steps; steps *= 2) {
      int iterations = 0;
      double residual = kInf;
      const std::optional<Vector> c = newton(starts[s], steps, iterations, residual);
      if (!c || residual > options.endpoint_tol) break;
      const Trajectory tr = integrate_geodesic(chain, mean, rho0, basis * *c, steps, true);
      ShootResult out;
      out.newton_iterations = iterations;
      out.endpoint_error = residual;
      out.warm_started = warm_added && s + 1 == starts.size();
      out.rho = tr.rho;
      out.psi = tr.psi;
      double total = 0.0;
      for (int k = 0; k <= steps; ++k) {
        out.times.push_back(static_cast<double>(k) / steps);
        Vector rd;
        Vector pd;
        geodesic_rhs(chain, mean, tr.rho[k], tr.psi[k], rd, pd);
        out.rho_dot.push_back(rd);
        const double sp = std::sqrt(std::max(tr.psi[k].dot(onsager_a(chain, mean, tr.rho[k]) * tr.psi[k]), 0.0));
        out.speed.push_back(sp);
        total += (k == 0 || k == steps ? 0.5 : 1.0) * sp;
      }
      out.distance = total / steps;
      for (double sp : out.speed) {
        out.speed_deviation = std::max(out.speed_deviation, std::abs(sp - out.distance) / std::max(out.distance, 1e-300));
      }
      if (out.speed_deviation <= options.speed_tol) return out;
      if (residual < best_residual) {
        best = out;
        best_residual = residual;
      }
    }
    if (s + 1 == starts.size() && !warm_added) {
      warm_added = true;
      MinActionOptions mo;
      mo.intervals = options.warm_start_intervals;
      try {
        const MinActionResult warm = min_action(chain, mean, rho0, rho1, mo);
        starts.push_back(basis.transpose() * warm.path.potentials.front());
      } catch (const Error&) {
      }
    }
  }
  std::ostringstream msg;
  if (std::isfinite(best_residual)) {
    msg << "geodesic speed varies by " << best.speed_deviation << " relative";
  } else {
    msg << "shooting did not reach the target density within " << options.endpoint_tol;
  }
  msg << "; min_action gives a path without this restriction";
  throw Error(ErrorKind::ShootingDiverged, msg.str(), best_residual);
}

Vector sample_geodesic(const ShootResult& g, double t) {
  const int steps = static_cast<int>(g.times.size()) - 1;
  const double h = 1.0 / steps;
  const int k = std::clamp(static_cast<int>(std::floor(t / h)), 0, steps - 1);
  const double s = (t - k * h) / h;
  const double h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
  const double h10 = s * (1.0 - s) * (1.0 - s);
  const double h01 = s * s * (3.0 - 2.0 * s);
  const double h11 = s * s * (s - 1.0);
  return h00 * g.rho[k] + h10 * h * g.rho_dot[k] + h01 * g.rho[k + 1] + h11 * h * g.rho_dot[k + 1];
}

}  // namespace chainmetric
