#include "chainmetric/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace chainmetric {
namespace {

constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

QuadratureResult kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[7];
  double resg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    const double sum = f(center - dx) + f(center + dx);
    resk += kWgk[j] * sum;
    if (j % 2 == 1) resg += kWg[j / 2] * sum;
  }
  return {resk * half, std::abs((resk - resg) * half)};
}

QuadratureResult adapt(const std::function<double(double)>& f, double a, double b, double abs_tol,
                       double rel_tol, int depth, const QuadratureResult& whole) {
  if (depth <= 0 || whole.error <= std::max(abs_tol, rel_tol * std::abs(whole.value)) ||
      std::abs(b - a) <= 64.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b))) {
    return whole;
  }
  const double mid = 0.5 * (a + b);
  const QuadratureResult left = kronrod15(f, a, mid);
  const QuadratureResult right = kronrod15(f, mid, b);
  const QuadratureResult l = adapt(f, a, mid, 0.5 * abs_tol, rel_tol, depth - 1, left);
  const QuadratureResult r = adapt(f, mid, b, 0.5 * abs_tol, rel_tol, depth - 1, right);
  return {l.value + r.value, l.error + r.error};
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           double rel_tol, int max_depth) {
  if (a == b) return {};
  if (b < a) {
    QuadratureResult r = integrate(f, b, a, abs_tol, rel_tol, max_depth);
    r.value = -r.value;
    return r;
  }
  return adapt(f, a, b, abs_tol, rel_tol, max_depth, kronrod15(f, a, b));
}

ImproperResult integrate_gap(const std::function<double(double)>& h, double u_start, double u_end,
                             const TailOptions& options) {
  ImproperResult out;
  if (u_start <= u_end) return out;
  const double split = std::ldexp(1.0, -options.first_level);
  if (u_start > split) {
    out.value += integrate(h, std::max(u_end, split), u_start).value;
    if (u_end >= split) return out;
  }

  std::vector<double> increments;
  for (int j = options.first_level;; ++j) {
    const double hi = std::min(std::ldexp(1.0, -j), u_start);
    double lo = std::ldexp(1.0, -(j + 1));
    if (u_end > 0.0) {
      lo = std::max(lo, u_end);
      if (hi > lo) out.value += integrate(h, lo, hi).value;
      if (lo <= u_end || j > 1100) return out;
      continue;
    }
    if (j > options.last_level) break;
    const double inc = hi > lo ? integrate(h, lo, hi).value : 0.0;
    out.value += inc;
    increments.push_back(inc);
  }

  const std::size_t m = increments.size();
  const auto w = static_cast<std::size_t>(options.ratio_window);
  const double last = std::abs(increments[m - 1]);
  if (last == 0.0) return out;
  const double first = std::abs(increments[m - 1 - w]);
  const double ratio = first > 0.0 ? std::pow(last / first, 1.0 / static_cast<double>(w)) : INFINITY;
  out.tail_ratio = ratio;
  if (ratio < options.contraction) {
    out.value += increments[m - 1] * ratio / (1.0 - ratio);
  } else {
    out.finite = false;
    out.value = INFINITY;
  }
  return out;
}

}  // namespace chainmetric
