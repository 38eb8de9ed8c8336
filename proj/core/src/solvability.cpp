#include "spde/solvability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spde {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void ProblemSpec::validate() const {
  cov.validate();
  if (d != cov.d) throw invalid_spec("problem: d does not match covariance d");
  if (d < 1 || d > 3) throw invalid_spec("problem: d must be 1, 2 or 3");
  if (!(lambda >= 0.0)) throw invalid_spec("problem: lambda must be >= 0");
  if (!(gamma > 0.0)) throw invalid_spec("problem: gamma must be > 0");
  if (!(p > 2.0)) throw invalid_spec("problem: p must be > 2");
}

std::string condition_name(Condition c) {
  switch (c) {
    case Condition::i:
      return "i";
    case Condition::ii:
      return "ii";
    case Condition::iii:
      return "iii";
    case Condition::none:
      return "none";
  }
  return "?";
}

double gamma0(int d, double lambda) {
  return std::min(0.5, 1.0 - 2.0 * lambda * d);
}

double gamma1(int d, double lambda) {
  return std::min(0.5, 1.0 - lambda * d);
}

double gamma_star(int d, double lambda, const CovarianceModel& cov) {
  cov.validate();
  if (d != cov.d) throw invalid_spec("gamma_star: dimension mismatch");
  if (cov.bounded_continuous())
    return lambda < 1.0 / d ? gamma1(d, lambda) : kNaN;
  if (d == 1) return lambda < 0.5 ? 0.5 - lambda : kNaN;
  if (cov.kind == CovKind::riesz) {
    if (!(lambda < 1.0 / (2.0 * d))) return kNaN;
    const double cap = 1.0 - 2.0 * lambda * d - cov.alpha * (1.0 - 2.0 * lambda);
    const double g = std::min(gamma0(d, lambda), cap);
    return g > 0.0 ? g : kNaN;
  }
  return kNaN;
}

namespace {

// Condition (ii) small-ball moment: integral_{|x|<1} |x|^q mu(dx) < infinity
// with q = (1-gamma-d)/(1-2*lambda); decided exactly for the built-in models.
bool small_ball_moment_finite(const CovarianceModel& cov, double q) {
  switch (cov.kind) {
    case CovKind::white:
      return true;  // atom at the origin never reached by the d >= 2 branch
    case CovKind::riesz:
      return q - cov.alpha + cov.d > 0.0;
    case CovKind::gaussian:
      return q + cov.d > 0.0;
  }
  return false;
}

}  // namespace

AdmissibilityReport check_admissible(const ProblemSpec& spec) {
  spec.validate();
  AdmissibilityReport rep;
  const int d = spec.d;
  const double lambda = spec.lambda;
  const double gamma = spec.gamma;
  rep.gamma0 = gamma0(d, lambda);
  rep.gamma1 = gamma1(d, lambda);
  rep.gamma_star = gamma_star(d, lambda, spec.cov);
  rep.p_min = (d + 2) / gamma;  // equals 3/gamma in the d = 1 branch
  rep.s_heuristic = lambda > 0.0 ? 1.0 / (2.0 * lambda) : kInf;

  std::string why;

  // (iii): bounded continuous kernel, any d
  if (spec.cov.bounded_continuous()) {
    if (!(lambda < 1.0 / d))
      why += "(iii): lambda >= 1/d; ";
    else if (!(gamma < rep.gamma1))
      why += "(iii): gamma >= gamma1; ";
    else if (!(spec.p > (d + 2) / gamma))
      why += "(iii): p <= (d+2)/gamma; ";
    else
      rep.all_matched.push_back(Condition::iii);
  }

  // (i): d = 1, general kernel
  if (d == 1) {
    if (!(lambda < 0.5))
      why += "(i): lambda >= 1/2; ";
    else if (!(gamma < 0.5 - lambda))
      why += "(i): gamma >= 1/2 - lambda; ";
    else if (!(spec.p > 3.0 / gamma))
      why += "(i): p <= 3/gamma; ";
    else
      rep.all_matched.push_back(Condition::i);
  }

  // (ii): d >= 2 with the small-ball moment condition
  if (d >= 2) {
    const double q = (1.0 - gamma - d) / (1.0 - 2.0 * lambda);
    if (!(lambda < 1.0 / (2.0 * d)))
      why += "(ii): lambda >= 1/(2d); ";
    else if (!(gamma < rep.gamma0))
      why += "(ii): gamma >= gamma0; ";
    else if (!(spec.p > (d + 2) / gamma))
      why += "(ii): p <= (d+2)/gamma; ";
    else if (!small_ball_moment_finite(spec.cov, q))
      why += "(ii): small-ball moment integral diverges; ";
    else
      rep.all_matched.push_back(Condition::ii);
  }

  if (rep.all_matched.empty()) {
    rep.admissible = false;
    rep.matched = Condition::none;
    rep.rejection_reason = why.empty() ? "no condition applies" : why;
    return rep;
  }

  // preference order (iii) > (i) > (ii)
  auto has = [&](Condition c) {
    return std::find(rep.all_matched.begin(), rep.all_matched.end(), c) !=
           rep.all_matched.end();
  };
  rep.matched = has(Condition::iii)  ? Condition::iii
                : has(Condition::i)  ? Condition::i
                                     : Condition::ii;
  rep.admissible = true;

  rep.window.alpha_lo = 1.0 / spec.p;
  rep.window.alpha_hi = 0.5 * gamma - 0.5 * d / spec.p;
  rep.window.beta_lo = rep.window.alpha_lo;
  rep.window.beta_hi = rep.window.alpha_hi;
  rep.window.delta_max = gamma - (d + 2.0) / spec.p;
  rep.window.empty = !(rep.window.alpha_hi > rep.window.alpha_lo);
  return rep;
}

std::pair<double, double> holder_targets(int d, double lambda,
                                         const CovarianceModel& cov,
                                         double eps) {
  const double g = gamma_star(d, lambda, cov);
  if (std::isnan(g))
    throw invalid_spec("holder_targets: no admissible gamma for this model");
  if (!(eps > 0.0 && eps < 0.5 * g))
    throw invalid_spec("holder_targets: eps must lie in (0, gamma_star/2)");
  return {g - eps, 0.5 * g - eps};
}

}  // namespace spde
