#pragma once

#include <functional>

namespace spde {

struct QuadResult {
  double value = 0.0;
  double abs_error = 0.0;   // Kronrod error estimate, summed over intervals
  int subdivisions = 0;
  bool converged = false;
};

// Adaptive Gauss-Kronrod (G7/K15) quadrature on [a, b].  Bisects the
// interval with the largest error estimate until
//   sum_of_errors <= max(abs_tol, rel_tol * |integral|)
// or the subdivision budget is exhausted (converged = false in that case;
// callers decide whether to throw).  Integrand is never evaluated at the
// endpoints, so integrable endpoint singularities are handled.
QuadResult integrate(const std::function<double(double)>& f, double a,
                     double b, double abs_tol = 1e-8, double rel_tol = 1e-6,
                     int max_subdiv = 4000);

// Same test, but throws numeric_error when not converged.
double integrate_or_throw(const std::function<double(double)>& f, double a,
                          double b, double abs_tol = 1e-8,
                          double rel_tol = 1e-6, int max_subdiv = 4000);

}  // namespace spde
