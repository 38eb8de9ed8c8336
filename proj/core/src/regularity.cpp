#include "spde/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "spde/errors.hpp"

namespace spde {

namespace {

struct OlsFit {
  double slope = 0.0;
  double slope_se = 0.0;
  double r2 = 0.0;
  int n = 0;
};

OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  OlsFit fit;
  fit.n = int(x.size());
  const double n = double(fit.n);
  double sx = 0.0, sy = 0.0;
  for (int i = 0; i < fit.n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (int i = 0; i < fit.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw invalid_spec("degenerate lag set for regression");
  fit.slope = sxy / sxx;
  double ss_res = 0.0;
  for (int i = 0; i < fit.n; ++i) {
    const double e = (y[i] - my) - fit.slope * (x[i] - mx);
    ss_res += e * e;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  fit.slope_se =
      fit.n > 2 ? std::sqrt(ss_res / double(fit.n - 2) / sxx) : 0.0;
  return fit;
}

void validate_lags(const std::vector<int>& lags, int lo, int hi,
                   const char* what) {
  if (lags.empty()) throw invalid_spec(std::string(what) + ": no lags");
  int prev = 0;
  for (int l : lags) {
    if (l <= prev)
      throw invalid_spec(std::string(what) +
                         ": lags must be strictly increasing and positive");
    prev = l;
  }
  if (lags.front() < lo)
    throw invalid_spec(std::string(what) + ": smallest lag below the window (>= " +
                       std::to_string(lo) + " required)");
  if (lags.back() > hi)
    throw invalid_spec(std::string(what) + ": largest lag above the window (<= " +
                       std::to_string(hi) + " allowed)");
}

}  // namespace

StructureFunction structure_function_space(
    const GridSpec& g, const std::vector<std::vector<double>>& fields,
    const std::vector<int>& lag_cells, double q) {
  g.validate();
  if (!(q > 0.0)) throw invalid_spec("q must be positive");
  if (fields.empty()) throw invalid_spec("no fields given");
  for (const auto& f : fields)
    if (f.size() != g.cells()) throw invalid_spec("field size mismatch");
  validate_lags(lag_cells, 4, int(g.n) / 8, "spatial lags");

  const double dx = g.spacing();
  StructureFunction sf;
  sf.direction = SfDirection::space;
  sf.q = q;

  for (int lag : lag_cells) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& u : fields) {
      for (int axis = 0; axis < g.d; ++axis) {
        const std::size_t stride = g.axis_stride(axis);
        for (std::size_t f = 0; f < g.cells(); ++f) {
          const auto idx = g.unflatten(f);
          if (idx[axis] + lag >= int(g.n)) continue;  // no wrap
          const double diff = u[f + stride * std::size_t(lag)] - u[f];
          acc += std::pow(std::abs(diff), q);
          ++count;
        }
      }
    }
    if (count < 32)
      throw invalid_spec("fewer than 32 increments at lag " +
                         std::to_string(lag));
    const double v = acc / double(count);
    if (!(v > 0.0))
      throw numeric_error("degenerate data: zero variance at lag " +
                          std::to_string(lag));
    sf.lags.push_back(double(lag) * dx);
    sf.values.push_back(v);
  }
  return sf;
}

StructureFunction structure_function_time(
    const std::vector<std::vector<double>>& series, double dt_sample,
    const std::vector<int>& lag_steps, double q, std::size_t start) {
  if (!(q > 0.0)) throw invalid_spec("q must be positive");
  if (!(dt_sample > 0.0)) throw invalid_spec("dt_sample must be positive");
  if (series.empty()) throw invalid_spec("no series given");
  const std::size_t len = series.front().size();
  for (const auto& s : series)
    if (s.size() != len) throw invalid_spec("series length mismatch");
  if (start >= len) throw invalid_spec("start index beyond series");
  const std::size_t usable = len - start;
  validate_lags(lag_steps, 4, int(usable / 8), "temporal lags");

  StructureFunction sf;
  sf.direction = SfDirection::time;
  sf.q = q;

  for (int lag : lag_steps) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& s : series)
      for (std::size_t t = start; t + std::size_t(lag) < len; ++t) {
        acc += std::pow(std::abs(s[t + std::size_t(lag)] - s[t]), q);
        ++count;
      }
    if (count < 32)
      throw invalid_spec("fewer than 32 increments at lag " +
                         std::to_string(lag));
    const double v = acc / double(count);
    if (!(v > 0.0))
      throw numeric_error("degenerate data: zero variance at lag " +
                          std::to_string(lag));
    sf.lags.push_back(double(lag) * dt_sample);
    sf.values.push_back(v);
  }
  return sf;
}

HolderEstimate estimate_holder(const std::vector<StructureFunction>& per_path) {
  if (per_path.empty()) throw invalid_spec("no structure functions given");
  const auto& ref = per_path.front();
  if (ref.lags.size() < 5)
    throw invalid_spec("at least 5 lags are required for estimation");
  for (const auto& sf : per_path) {
    if (sf.lags != ref.lags || sf.q != ref.q ||
        sf.direction != ref.direction)
      throw invalid_spec("structure functions are not replicates");
    if (sf.values.size() != sf.lags.size())
      throw invalid_spec("structure function shape mismatch");
  }

  HolderEstimate est;
  est.direction = ref.direction;
  est.paths = int(per_path.size());
  est.r2_min = 1.0;

  const std::size_t m = ref.lags.size();
  std::vector<double> lx(m);
  for (std::size_t i = 0; i < m; ++i) lx[i] = std::log(ref.lags[i]);

  // mean structure function must be increasing in the lag
  std::vector<double> mean_sf(m, 0.0);
  for (const auto& sf : per_path)
    for (std::size_t i = 0; i < m; ++i) mean_sf[i] += sf.values[i];
  for (std::size_t i = 0; i + 1 < m; ++i)
    if (mean_sf[i + 1] <= mean_sf[i]) {
      est.inconclusive = true;
      est.note = "non-monotone structure function over the lag window";
    }

  std::vector<double> slopes;
  std::vector<double> ly(m);
  OlsFit last_fit;
  for (const auto& sf : per_path) {
    bool degenerate = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(sf.values[i] > 0.0) || !std::isfinite(sf.values[i])) {
        degenerate = true;
        break;
      }
      ly[i] = std::log(sf.values[i]);
    }
    if (degenerate) {
      est.inconclusive = true;
      est.note = "nonpositive or non-finite structure function value";
      continue;
    }
    last_fit = ols(lx, ly);
    slopes.push_back(last_fit.slope / ref.q);
    est.r2_min = std::min(est.r2_min, last_fit.r2);
  }
  if (slopes.empty()) {
    est.inconclusive = true;
    if (est.note.empty()) est.note = "no usable paths";
    est.ci_lo = est.ci_hi = est.exponent = 0.0;
    return est;
  }

  const int n = int(slopes.size());
  double mean = 0.0;
  for (double s : slopes) mean += s;
  mean /= double(n);
  est.exponent = mean;

  if (n >= 2) {
    double ss = 0.0;
    for (double s : slopes) ss += (s - mean) * (s - mean);
    const double se = std::sqrt(ss / double(n - 1)) / std::sqrt(double(n));
    boost::math::students_t dist(double(n - 1));
    const double tq = boost::math::quantile(dist, 0.975);
    est.ci_lo = mean - tq * se;
    est.ci_hi = mean + tq * se;
  } else {
    // single path: within-fit slope standard error
    if (last_fit.n > 2 && last_fit.slope_se > 0.0) {
      boost::math::students_t dist(double(last_fit.n - 2));
      const double tq = boost::math::quantile(dist, 0.975);
      est.ci_lo = mean - tq * last_fit.slope_se / ref.q;
      est.ci_hi = mean + tq * last_fit.slope_se / ref.q;
    } else {
      est.ci_lo = est.ci_hi = mean;
    }
  }
  return est;
}

RegularityReport compare_to_theory(const HolderEstimate* space,
                                   const HolderEstimate* time,
                                   const ProblemSpec& spec, double epsilon,
                                   double tolerance) {
  if (!space && !time)
    throw invalid_spec("at least one direction estimate is required");
  if (!(tolerance >= 0.0)) throw invalid_spec("tolerance must be >= 0");
  const auto targets = holder_targets(spec.d, spec.lambda, spec.cov, epsilon);

  RegularityReport rep;
  rep.target_space = targets.first;
  rep.target_time = targets.second;
  rep.epsilon = epsilon;
  rep.tolerance = tolerance;

  bool any_inconclusive = false;
  bool any_below = false;
  auto fold = [&](const HolderEstimate* est, double target, bool& has,
                  double& expo, double& lo, double& hi) {
    if (!est) return;
    has = true;
    expo = est->exponent;
    lo = est->ci_lo;
    hi = est->ci_hi;
    if (est->inconclusive)
      any_inconclusive = true;
    else if (est->ci_lo < target - tolerance)
      any_below = true;
  };
  fold(space, rep.target_space, rep.has_space, rep.space_exponent,
       rep.space_ci_lo, rep.space_ci_hi);
  fold(time, rep.target_time, rep.has_time, rep.time_exponent, rep.time_ci_lo,
       rep.time_ci_hi);

  rep.verdict =
      any_inconclusive ? "inconclusive" : (any_below ? "below" : "meets");
  return rep;
}

}  // namespace spde
