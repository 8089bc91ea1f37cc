#pragma once

#include <functional>

namespace chainmetric {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

// Adaptive Gauss-Kronrod (7/15) on [a, b]; b < a yields the negated integral.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-14, double rel_tol = 1e-12, int max_depth = 50);

struct ImproperResult {
  bool finite = true;
  double value = 0.0;
  double tail_ratio = 0.0;  // geometric-mean contraction of the dyadic tail increments
};

struct TailOptions {
  int first_level = 10;
  int last_level = 40;
  int ratio_window = 10;
  double contraction = 0.99;
};

// Integrates h(u) for the gap u = 1 - r over [u_end, u_start], where h may blow up at u = 0.
// Dyadic pieces [2^-(j+1), 2^-j] cover u <= 2^-first_level. When u_end == 0 the tail verdict
// is taken from the last ratio_window increments: contraction below `contraction` means
// finite (geometric extrapolation of the remainder), otherwise divergent.
ImproperResult integrate_gap(const std::function<double(double)>& h, double u_start, double u_end,
                             const TailOptions& options = {});

}  // namespace chainmetric
