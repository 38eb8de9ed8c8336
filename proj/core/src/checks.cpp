#include "spde/checks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "spde/covariance.hpp"
#include "spde/fft.hpp"
#include "spde/noise.hpp"
#include "spde/solvability.hpp"
#include "spde/solver.hpp"

namespace spde {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), pattern, a, b, c);
  return buf;
}

bool same_value(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

bool all_pass(const std::vector<CheckResult>& results) {
  return std::all_of(results.begin(), results.end(),
                     [](const CheckResult& r) { return r.pass; });
}

// ---------------------------------------------------------------------------
// solvability oracle table

namespace {

struct OracleCase {
  const char* label;
  ProblemSpec spec;
  bool admissible;
  Condition matched;
  double gamma_star;  // NaN = no admissible gamma
  double p_min;
};

std::vector<OracleCase> oracle_cases() {
  const double nan = std::nan("");
  auto white1 = CovarianceModel::white(1);
  std::vector<OracleCase> cases;
  // d = 1, general kernel, condition (i)
  cases.push_back({"d1 lam0 white g0.4 p10 accepts under (i)",
                   {1, 0.0, white1, 0.4, 10.0},
                   true, Condition::i, 0.5, 3.0 / 0.4});
  cases.push_back({"d1 lam0.6 white rejected (lambda >= 1/2)",
                   {1, 0.6, white1, 0.1, 40.0},
                   false, Condition::none, nan, 3.0 / 0.1});
  cases.push_back({"d1 lam0.25 white g0.2 p20 accepts under (i)",
                   {1, 0.25, white1, 0.2, 20.0},
                   true, Condition::i, 0.5 - 0.25, 3.0 / 0.2});
  cases.push_back({"d1 lam0.25 white g0.25 rejected (gamma bound strict)",
                   {1, 0.25, white1, 0.25, 20.0},
                   false, Condition::none, 0.5 - 0.25, 3.0 / 0.25});
  // bounded continuous kernel, condition (iii)
  cases.push_back({"d2 lam0.4 gaussian g0.15 p30 accepts under (iii)",
                   {2, 0.4, CovarianceModel::gaussian(2, 1.0), 0.15, 30.0},
                   true, Condition::iii, std::min(0.5, 1.0 - 0.4 * 2.0),
                   4.0 / 0.15});
  cases.push_back({"d2 lam0.2 gaussian g0.15 p30 matches (iii) and (ii)",
                   {2, 0.2, CovarianceModel::gaussian(2, 1.0), 0.15, 30.0},
                   true, Condition::iii, 0.5, 4.0 / 0.15});
  cases.push_back({"d3 lam0.3 gaussian g0.05 p100 rejected (p bound strict)",
                   {3, 0.3, CovarianceModel::gaussian(3, 1.0), 0.05, 100.0},
                   false, Condition::none, std::min(0.5, 1.0 - 0.3 * 3.0),
                   5.0 / 0.05});
  cases.push_back({"d3 lam0.3 gaussian g0.05 p101 accepts under (iii)",
                   {3, 0.3, CovarianceModel::gaussian(3, 1.0), 0.05, 101.0},
                   true, Condition::iii, std::min(0.5, 1.0 - 0.3 * 3.0),
                   5.0 / 0.05});
  // Riesz kernels, condition (ii) and the d = 1 any-alpha example
  cases.push_back({"d2 lam0.2 riesz a1.9 rejected (moment integral diverges)",
                   {2, 0.2, CovarianceModel::riesz(2, 1.9), 0.1, 30.0},
                   false, Condition::none, nan, 4.0 / 0.1});
  cases.push_back(
      {"d2 lam0.1 riesz a0.5 g0.3 rejected (alpha above example range)",
       {2, 0.1, CovarianceModel::riesz(2, 0.5), 0.3, 20.0},
       false, Condition::none,
       std::min(std::min(0.5, 1.0 - 2.0 * 0.1 * 2.0),
                1.0 - 2.0 * 0.1 * 2.0 - 0.5 * (1.0 - 2.0 * 0.1)),
       4.0 / 0.3});
  cases.push_back(
      {"d2 lam0.1 riesz a0.5 g0.15 p30 accepts under (ii)",
       {2, 0.1, CovarianceModel::riesz(2, 0.5), 0.15, 30.0},
       true, Condition::ii,
       std::min(std::min(0.5, 1.0 - 2.0 * 0.1 * 2.0),
                1.0 - 2.0 * 0.1 * 2.0 - 0.5 * (1.0 - 2.0 * 0.1)),
       4.0 / 0.15});
  cases.push_back({"d1 lam0.25 riesz a0.5 accepts under (i) (any alpha in d1)",
                   {1, 0.25, CovarianceModel::riesz(1, 0.5), 0.2, 20.0},
                   true, Condition::i, 0.5 - 0.25, 3.0 / 0.2});
  return cases;
}

}  // namespace

std::vector<CheckResult> check_solvability_table() {
  std::vector<CheckResult> out;
  for (const auto& oc : oracle_cases()) {
    const AdmissibilityReport rep = check_admissible(oc.spec);
    const double g0 = std::min(0.5, 1.0 - 2.0 * oc.spec.lambda * oc.spec.d);
    const double g1 = std::min(0.5, 1.0 - oc.spec.lambda * oc.spec.d);
    CheckResult r;
    r.name = oc.label;
    r.pass = rep.admissible == oc.admissible && rep.matched == oc.matched &&
             same_value(rep.gamma_star, oc.gamma_star) &&
             same_value(rep.p_min, oc.p_min) && same_value(rep.gamma0, g0) &&
             same_value(rep.gamma1, g1);
    r.detail = std::string("admissible=") + (rep.admissible ? "yes" : "no") +
               " condition=" + condition_name(rep.matched) +
               fmt(" gamma*=%.17g p_min=%.17g", rep.gamma_star, rep.p_min);
    out.push_back(std::move(r));
  }

  CheckResult ident;
  ident.name = "gamma0/gamma1 piecewise identities, lambda grid x d in {1,2,3}";
  ident.pass = true;
  for (int d = 1; d <= 3 && ident.pass; ++d)
    for (int i = 0; i <= 9 && ident.pass; ++i) {
      const double lam = 0.05 * i;
      ident.pass = same_value(gamma0(d, lam), std::min(0.5, 1.0 - 2 * lam * d)) &&
                   same_value(gamma1(d, lam), std::min(0.5, 1.0 - lam * d));
    }
  ident.detail = "30 (d, lambda) pairs, exact";
  out.push_back(std::move(ident));
  return out;
}

// ---------------------------------------------------------------------------
// kernel closed forms and Fourier identity

std::vector<CheckResult> check_bessel_closed_forms() {
  std::vector<CheckResult> out;
  const double v0 = bessel_kernel(2.0, 1, 0.0);
  const double v1 = bessel_kernel(2.0, 1, 1.0);
  const double e0 = std::abs(v0 - 0.5);
  const double e1 = std::abs(v1 - 0.5 * std::exp(-1.0));
  out.push_back({"kernel gamma=2 d=1 at r=0 equals 1/2", e0 <= 1e-6,
                 fmt("value=%.12g err=%.3g", v0, e0)});
  out.push_back({"kernel gamma=2 d=1 at r=1 equals e^-1/2", e1 <= 1e-6,
                 fmt("value=%.12g err=%.3g", v1, e1)});
  return out;
}

std::vector<CheckResult> check_bessel_fourier_identity() {
  constexpr int n = 4096;
  constexpr double L = 40.0;
  const double dx = L / n;
  const double xi_step = 2.0 * M_PI / L;
  const int q_max = int(25.0 / xi_step);  // |xi| <= 25

  std::vector<CheckResult> out;
  for (double gamma : {0.5, 1.0, 2.0}) {
    const KernelTable t = tabulate_bessel_kernel(gamma, 1.0, 1, n, L);
    std::vector<cplx> buf(n);
    for (int j = 0; j < n; ++j) buf[j] = t.value[std::abs(j - n / 2)];
    Fft fft(n);
    fft.forward(buf.data());
    double worst = 0.0;
    double worst_xi = 0.0;
    for (int q = 0; q <= q_max; ++q) {
      const double xi = q * xi_step;
      const double target = std::pow(1.0 + xi * xi, -0.5 * gamma);
      const cplx got = dx * (q % 2 == 0 ? 1.0 : -1.0) * buf[q];
      const double rel = std::abs(got - target) / target;
      if (rel > worst) {
        worst = rel;
        worst_xi = xi;
      }
    }
    out.push_back({fmt("kernel transform matches symbol, gamma=%g", gamma),
                   worst <= 0.02,
                   fmt("max rel err=%.4g at xi=%.3g (tol 0.02)", worst,
                       worst_xi)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// self-convolution envelope suite

namespace {

struct EnvelopeCase {
  double gamma;
  double r;
  int d;
  int n;
  double L;
  double decay_to;  // upper end of the tail fit window
};

CheckResult envelope_one(const EnvelopeCase& ec) {
  const KernelTable conv =
      kernel_self_convolution(ec.gamma, ec.r, ec.d, ec.n, ec.L);
  const double e = ec.r * (ec.gamma - ec.d);  // near-origin envelope exponent

  std::size_t jmax = 1;
  double best = -1.0;
  for (std::size_t j = 1; j < conv.radius.size(); ++j) {
    const double ratio =
        conv.value[j] / std::pow(0.5 * conv.radius[j], e);
    if (ratio > best) {
      best = ratio;
      jmax = j;
    }
  }
  const bool interior = jmax >= 2 && jmax + 2 < conv.radius.size();
  const double nprime = best;

  bool holds = true;
  for (std::size_t j = 1; j < conv.radius.size(); ++j)
    holds = holds && conv.value[j] <=
                         nprime * std::pow(0.5 * conv.radius[j], e) *
                             (1.0 + 1e-9);

  // tail: log-linear fit on radius in [6, decay_to]
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t j = 1; j < conv.radius.size(); ++j) {
    const double x = conv.radius[j];
    if (x < 6.0 || x > ec.decay_to || conv.value[j] <= 0.0) continue;
    sx += x;
    sy += std::log(conv.value[j]);
    sxx += x * x;
    sxy += x * std::log(conv.value[j]);
    ++m;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const bool decays = m >= 8 && slope <= -0.3;

  CheckResult r;
  r.name = fmt("self-convolution envelope gamma=%g r=%.4g d=%g", ec.gamma,
               ec.r, double(ec.d));
  r.pass = interior && holds && decays;
  r.detail =
      fmt("N'=%.5g fit radius=%.4g tail slope=%.3f", nprime,
          conv.radius[jmax], slope) +
      (interior ? "" : " [fit point not interior]") +
      (holds ? "" : " [envelope violated]") +
      (decays ? "" : " [tail not exponential]");
  return r;
}

}  // namespace

std::vector<CheckResult> check_convolution_envelopes() {
  std::vector<CheckResult> out;
  out.push_back(envelope_one({0.8, 1.0, 1, 4096, 40.0, 10.0}));
  out.push_back(envelope_one({0.5, 1.0, 2, 1024, 24.0, 9.0}));
  out.push_back(envelope_one({0.7, 4.0 / 3.0, 1, 4096, 40.0, 10.0}));

  // bounded case: sup of the table equals ||R_0.8||_L2^2 = R_1.6(0).
  // The |x|^{-0.2} pole makes the discrete L2 sum converge like dx^0.6,
  // so this comparison needs a finer grid than the envelope fits above.
  const KernelTable conv = kernel_self_convolution(0.8, 1.0, 1, 65536, 40.0);
  const double sup = *std::max_element(conv.value.begin(), conv.value.end());
  const double l2sq = bessel_kernel(1.6, 1, 0.0);
  const double rel = std::abs(sup - l2sq) / l2sq;
  out.push_back({"bounded self-convolution sup equals squared L2 norm",
                 rel <= 0.02,
                 fmt("sup=%.6g quadrature=%.6g rel err=%.3g", sup, l2sq, rel)});
  return out;
}

// ---------------------------------------------------------------------------
// sampled-noise law

namespace {

double periodized_gaussian(double rate, double L, double x) {
  double s = 0.0;
  for (int m = -3; m <= 3; ++m) s += std::exp(-rate * (x + m * L) * (x + m * L));
  return s;
}

}  // namespace

std::vector<CheckResult> check_noise_covariance() {
  std::vector<CheckResult> out;
  const double dt = 0.01;

  {  // empirical law of the Gaussian model, d = 1, n = 256
    const GridSpec g{1, 256, 16.0};
    const auto model = CovarianceModel::gaussian(1, 1.0);
    const auto sampler =
        NoiseSampler::build(SpectralMeasure::for_model(model), g);
    const int samples = 20000;
    SamplerWorkspace ws(g);
    RngStream rng(2024, 0);
    std::vector<NoiseIncrement> incs(samples);
    for (int s = 0; s < samples; ++s) {
      incs[s].grid = g;
      incs[s].dt = dt;
      sampler.sample_into(dt, rng, ws, incs[s].values);
    }
    std::vector<int> lags(g.n / 2 + 1);
    for (int h = 0; h <= g.n / 2; ++h) lags[h] = h;
    const CovarianceEstimate est = empirical_covariance(incs, lags);

    const double f0 = periodized_gaussian(1.0, g.L, 0.0);
    double worst_rel = 0.0, worst_z = 0.0;
    for (std::size_t i = 0; i < est.lags.size(); ++i) {
      const double f = periodized_gaussian(1.0, g.L, est.lags[i] * g.spacing());
      const double target = dt * f;
      if (f >= 0.2 * f0) {
        worst_rel =
            std::max(worst_rel, std::abs(est.value[i] - target) / target);
      } else {
        worst_z = std::max(worst_z,
                           std::abs(est.value[i] - target) /
                               (est.se[i] > 0.0 ? est.se[i] : 1e-300));
      }
    }
    out.push_back({"empirical covariance matches dt*f_per (core lags, 5%)",
                   worst_rel <= 0.05,
                   fmt("max rel err=%.4g over %g samples", worst_rel,
                       double(samples))});
    out.push_back({"empirical covariance matches dt*f_per (far lags, 3 SE)",
                   worst_z <= 3.0, fmt("max |z|=%.3f", worst_z)});
  }

  {  // white-noise cell variance dt/dx
    const GridSpec g{1, 256, 16.0};
    const auto sampler = NoiseSampler::build(
        SpectralMeasure::for_model(CovarianceModel::white(1)), g);
    const int samples = 20000;
    SamplerWorkspace ws(g);
    RngStream rng(77, 0);
    std::vector<NoiseIncrement> incs(samples);
    for (int s = 0; s < samples; ++s) {
      incs[s].grid = g;
      incs[s].dt = dt;
      sampler.sample_into(dt, rng, ws, incs[s].values);
    }
    const CovarianceEstimate est = empirical_covariance(incs, {0});
    const double target = dt / g.spacing();
    const double z = std::abs(est.value[0] - target) / est.se[0];
    out.push_back({"white-noise cell variance equals dt/dx within 3 SE",
                   z <= 3.0,
                   fmt("var=%.6g target=%.6g z=%.3f", est.value[0], target,
                       z)});
  }

  {  // eigenvalue-implied law vs periodized kernel, n = 32, exact
    const GridSpec g1{1, 32, 16.0};
    const auto sampler = NoiseSampler::build(
        SpectralMeasure::for_model(CovarianceModel::gaussian(1, 1.0)), g1);
    double worst = 0.0;
    for (int h = 0; h <= g1.n / 2; ++h) {
      const double implied = implied_covariance(sampler, h);
      const double target = periodized_gaussian(1.0, g1.L, h * g1.spacing());
      worst = std::max(worst, std::abs(implied - target));
    }
    out.push_back({"implied covariance equals periodized kernel (n=32)",
                   worst <= 1e-10, fmt("max abs err=%.3g (tol 1e-10)", worst)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// auxiliary-function certificates

std::vector<CheckResult> check_lyapunov_certificates() {
  const GridSpec g{1, 1024, 20.0};
  const std::vector<double> ks = {1.0, 2.0, 4.0};
  std::vector<CheckResult> out;
  for (const char* name : {"heat", "variable_a", "drift"}) {
    const auto res = lyapunov_check(Coefficients::preset(name, 1), g, ks);
    double worst = -1e300, kworst = 0.0;
    for (const auto& lr : res)
      if (lr.max_residual > worst) {
        worst = lr.max_residual;
        kworst = lr.k;
      }
    out.push_back({std::string("residual nonpositive for preset ") + name,
                   worst <= 1e-12,
                   fmt("max residual=%.4g at k=%g (tol 1e-12)", worst,
                       kworst)});
  }
  const auto bad =
      lyapunov_check(Coefficients::preset("violating_c", 1), g, ks);
  double worst = -1e300;
  for (const auto& lr : bad) worst = std::max(worst, lr.max_residual);
  out.push_back({"violating preset produces a positive residual",
                 worst > 0.0, fmt("max residual=%.4g", worst)});
  return out;
}

}  // namespace spde
