#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spde/covariance.hpp"

namespace spde {

// One well-posedness question: does the equation with nonlinearity exponent
// 1+lambda, driven by noise with the given spatial covariance, admit a
// solution in the Sobolev scale of smoothness gamma and integrability p?
struct ProblemSpec {
  int d = 1;
  double lambda = 0.0;  // diffusion exponent offset, sigma(u) ~ |u|^(1+lambda)
  CovarianceModel cov;
  double gamma = 0.25;  // requested smoothness
  double p = 10.0;      // requested integrability, > 2

  void validate() const;
};

// Solvability conditions, in preference order when several match:
// bounded continuous kernels (iii), then d = 1 general kernels (i),
// then d >= 2 kernels with the small-ball moment condition (ii).
enum class Condition { none, i, ii, iii };

std::string condition_name(Condition c);

// Critical smoothness thresholds.
//   gamma0(d, lambda) = min(1/2, 1 - 2*lambda*d)
//   gamma1(d, lambda) = min(1/2, 1 - lambda*d)
double gamma0(int d, double lambda);
double gamma1(int d, double lambda);

// Supremum of admissible gamma for the model (NaN when no gamma > 0 is
// admissible):
//   d = 1, general kernel:            1/2 - lambda        (lambda < 1/2)
//   bounded continuous kernel:        gamma1(d, lambda)   (lambda < 1/d)
//   riesz, d >= 2:  min(gamma0, 1 - 2*lambda*d - alpha*(1-2*lambda))
//                                                         (lambda < 1/(2d))
double gamma_star(int d, double lambda, const CovarianceModel& cov);

struct HolderWindow {
  bool empty = true;
  double alpha_lo = 0.0, alpha_hi = 0.0;  // time-exponent parameter range
  double beta_lo = 0.0, beta_hi = 0.0;    // space-exponent parameter range
  double delta_max = 0.0;                 // supremum of the shift parameter
};

struct AdmissibilityReport {
  bool admissible = false;
  Condition matched = Condition::none;
  std::vector<Condition> all_matched;
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  double gamma_star = 0.0;  // NaN when no admissible gamma exists
  double p_min = 0.0;       // strict lower bound on p for the requested gamma
  double s_heuristic = 0.0; // 1/(2*lambda); +infinity when lambda = 0
  HolderWindow window;      // filled when admissible
  std::string rejection_reason;  // filled when not admissible
};

// Exact decision: evaluates conditions (iii), (i), (ii) in that order.
AdmissibilityReport check_admissible(const ProblemSpec& spec);

// Measured-regularity targets at offset eps: (space, time) =
// (gamma_star - eps, gamma_star/2 - eps).  Requires 0 < eps < gamma_star/2.
std::pair<double, double> holder_targets(int d, double lambda,
                                         const CovarianceModel& cov,
                                         double eps);

}  // namespace spde
