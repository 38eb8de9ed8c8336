#pragma once

#include <string>
#include <vector>

#include "spde/grid.hpp"
#include "spde/solvability.hpp"

namespace spde {

enum class SfDirection { space, time };

// Empirical q-th order structure function S_q(h) = mean |u(.+h) - u(.)|^q.
struct StructureFunction {
  SfDirection direction = SfDirection::space;
  double q = 2.0;
  std::vector<double> lags;    // physical units, strictly increasing
  std::vector<double> values;  // S_q per lag, nonnegative
};

// Spatial structure function from one or more snapshot fields on a common
// grid: increments along every axis from non-wrapping base points, averaged
// over base points, axes, and fields.  Lags are in cells and must respect
// the window [4, n/8] (discretization bias below, periodic wrap bias above).
// Throws numeric_error on degenerate (constant) data and invalid_spec when a
// lag has fewer than 32 increments.
StructureFunction structure_function_space(
    const GridSpec& g, const std::vector<std::vector<double>>& fields,
    const std::vector<int>& lag_cells, double q = 2.0);

// Temporal structure function from probe time series sampled every
// dt_sample, averaged over series and base times with index >= start.  Lags
// are in steps, window [4, (len-start)/8].
StructureFunction structure_function_time(
    const std::vector<std::vector<double>>& series, double dt_sample,
    const std::vector<int>& lag_steps, double q = 2.0, std::size_t start = 0);

struct HolderEstimate {
  SfDirection direction = SfDirection::space;
  double exponent = 0.0;  // mean over paths of (log-log OLS slope) / q
  double ci_lo = 0.0;     // 95% confidence interval of the mean
  double ci_hi = 0.0;
  double r2_min = 0.0;    // worst per-path coefficient of determination
  int paths = 0;
  bool inconclusive = false;  // non-monotone or degenerate structure function
  std::string note;
};

// Exponent from per-path structure functions (>= 5 common lags).  The
// confidence interval uses the t distribution over per-path slopes; with a
// single path it falls back to the within-fit slope standard error.  A
// non-monotone mean structure function or nonpositive values mark the
// estimate inconclusive.
HolderEstimate estimate_holder(const std::vector<StructureFunction>& per_path);

struct RegularityReport {
  bool has_space = false;
  double space_exponent = 0.0, space_ci_lo = 0.0, space_ci_hi = 0.0;
  bool has_time = false;
  double time_exponent = 0.0, time_ci_lo = 0.0, time_ci_hi = 0.0;
  double target_space = 0.0;  // gamma_star - epsilon
  double target_time = 0.0;   // gamma_star/2 - epsilon
  double epsilon = 0.0;
  double tolerance = 0.0;
  std::string verdict;  // "meets" | "below" | "inconclusive"
};

// One-sided comparison against the solvability targets: a direction meets
// its target when the interval lower edge reaches target - tolerance;
// exceeding the target is always a pass (the theory guarantees lower bounds
// on smoothness, not exact values).  Pass nullptr to skip a direction.
RegularityReport compare_to_theory(const HolderEstimate* space,
                                   const HolderEstimate* time,
                                   const ProblemSpec& spec, double epsilon,
                                   double tolerance);

}  // namespace spde
