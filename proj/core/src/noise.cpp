#include "spde/noise.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace spde {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950;

// Ball-average of the Riesz dual density over the frequency cell at the
// origin (the density |xi|^(alpha-d) is integrable there).
double riesz_singular_bin_average(const CovarianceModel& m, double cell_w) {
  const double c = std::pow(2.0, 0.5 * m.d - m.alpha) *
                   std::tgamma(0.5 * (m.d - m.alpha)) /
                   std::tgamma(0.5 * m.alpha);
  double rho = 0.0;
  switch (m.d) {
    case 1:
      rho = 0.5 * cell_w;
      break;
    case 2:
      rho = cell_w / std::sqrt(kPi);
      break;
    default:
      rho = cell_w * std::cbrt(3.0 / (4.0 * kPi));
      break;
  }
  // (d / rho^d) * integral_0^rho c xi^(alpha-d) xi^(d-1) dxi
  return c * m.d * std::pow(rho, m.alpha - m.d) / m.alpha;
}

int alias_image_extent(const CovarianceModel& m) {
  switch (m.kind) {
    case CovKind::white:
      return 0;
    case CovKind::gaussian:
      return 1;
    case CovKind::riesz:
      return m.d == 1 ? 8 : (m.d == 2 ? 3 : 2);
  }
  return 0;
}

std::vector<double> eigenvalues_spectral(const SpectralMeasure& mu,
                                         const GridSpec& g) {
  const CovarianceModel& m = mu.model;
  const std::size_t cells = g.cells();
  std::vector<double> lambda(cells);

  if (m.kind == CovKind::white) {
    // discrete white noise: every frequency carries mass 1/cell volume
    std::fill(lambda.begin(), lambda.end(),
              std::pow(double(g.n) / g.L, double(g.d)));
    return lambda;
  }

  const double factor =
      std::pow(double(g.n), g.d) * std::pow(2.0 * kPi, 0.5 * g.d) /
      std::pow(g.L, g.d);
  const double base_w = 2.0 * kPi / g.L;        // lattice frequency step
  const double image_w = base_w * g.n;          // alias image offset
  const int M = alias_image_extent(m);
  const double singular_avg =
      m.kind == CovKind::riesz ? riesz_singular_bin_average(m, base_w) : 0.0;

  std::array<int, 3> im{0, 0, 0};
  for (std::size_t f = 0; f < cells; ++f) {
    auto idx = g.unflatten(f);
    double xi0[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < g.d; ++a) xi0[a] = g.frequency(idx[a]);

    double sum = 0.0;
    const int lo = -M, hi = M;
    for (im[0] = lo; im[0] <= hi; ++im[0]) {
      for (im[1] = g.d > 1 ? lo : 0; im[1] <= (g.d > 1 ? hi : 0); ++im[1]) {
        for (im[2] = g.d > 2 ? lo : 0; im[2] <= (g.d > 2 ? hi : 0); ++im[2]) {
          double r2 = 0.0;
          bool origin = true;
          for (int a = 0; a < g.d; ++a) {
            const double xi = xi0[a] + image_w * im[a];
            r2 += xi * xi;
            origin = origin && xi == 0.0;
          }
          if (origin && m.kind == CovKind::riesz)
            sum += singular_avg;
          else
            sum += spectral_density(m, std::sqrt(r2));
        }
      }
    }
    lambda[f] = factor * sum;
  }
  return lambda;
}

std::vector<double> eigenvalues_covariance_dft(const SpectralMeasure& mu,
                                               const GridSpec& g) {
  const CovarianceModel& m = mu.model;
  const std::size_t cells = g.cells();
  if (m.kind == CovKind::riesz)
    throw invalid_spec(
        "noise: the periodized Riesz kernel diverges pointwise; "
        "use the spectral lattice route");
  std::vector<double> lambda(cells);
  if (m.kind == CovKind::white) {
    std::fill(lambda.begin(), lambda.end(),
              std::pow(double(g.n) / g.L, double(g.d)));
    return lambda;
  }

  // periodized Gaussian kernel sampled on the grid
  const int M = 3;
  std::vector<cplx> c(cells);
  std::array<int, 3> im{0, 0, 0};
  for (std::size_t f = 0; f < cells; ++f) {
    auto idx = g.unflatten(f);
    double sum = 0.0;
    for (im[0] = -M; im[0] <= M; ++im[0]) {
      for (im[1] = g.d > 1 ? -M : 0; im[1] <= (g.d > 1 ? M : 0); ++im[1]) {
        for (im[2] = g.d > 2 ? -M : 0; im[2] <= (g.d > 2 ? M : 0); ++im[2]) {
          double r2 = 0.0;
          for (int a = 0; a < g.d; ++a) {
            const double x = g.coord_centered(idx[a]) + im[a] * g.L;
            r2 += x * x;
          }
          sum += std::exp(-m.rate * r2);
        }
      }
    }
    c[f] = sum;
  }
  FftNd fft(g.d, static_cast<std::size_t>(g.n));
  fft.forward(c.data());
  for (std::size_t f = 0; f < cells; ++f) lambda[f] = c[f].real();
  return lambda;
}

}  // namespace

NoiseSampler NoiseSampler::build(const SpectralMeasure& mu,
                                 const GridSpec& grid) {
  return build(mu, grid, SynthesisRoute::spectral_lattice);
}

NoiseSampler NoiseSampler::build(const SpectralMeasure& mu,
                                 const GridSpec& grid, SynthesisRoute route) {
  mu.model.validate();
  grid.validate();
  if (mu.model.d != grid.d)
    throw invalid_spec("noise: covariance and grid dimension mismatch");

  NoiseSampler s;
  s.grid_ = grid;
  s.mu_ = mu;
  s.route_ = route;
  s.lambda_ = route == SynthesisRoute::spectral_lattice
                  ? eigenvalues_spectral(mu, grid)
                  : eigenvalues_covariance_dft(mu, grid);

  double total = 0.0, clamped = 0.0;
  for (double& l : s.lambda_) {
    total += std::abs(l);
    if (l < 0.0) {
      clamped += -l;
      l = 0.0;
    }
  }
  s.clamped_fraction_ = total > 0.0 ? clamped / total : 0.0;
  if (s.clamped_fraction_ >= 1e-3)
    throw invalid_spec(
        "noise: clamped spectral mass fraction >= 1e-3; the grid/box is too "
        "small for this covariance model");

  s.amplitude_.resize(s.lambda_.size());
  for (std::size_t i = 0; i < s.lambda_.size(); ++i)
    s.amplitude_[i] = std::sqrt(s.lambda_[i]);
  return s;
}

void NoiseSampler::sample_into(double dt, RngStream& rng, SamplerWorkspace& ws,
                               std::vector<double>& out) const {
  if (!(dt > 0.0)) throw invalid_spec("noise: dt must be > 0");
  const std::size_t cells = grid_.cells();
  if (ws.buf.size() != cells)
    throw invalid_spec("noise: workspace does not match the grid");
  out.resize(cells);

  for (std::size_t j = 0; j < cells; ++j) ws.buf[j] = cplx(rng.gauss(), 0.0);
  ws.fft.forward(ws.buf.data());
  for (std::size_t q = 0; q < cells; ++q) ws.buf[q] *= amplitude_[q];
  ws.fft.inverse(ws.buf.data());

  const double scale = std::sqrt(dt);
  double max_re = 0.0, max_im = 0.0;
  for (std::size_t j = 0; j < cells; ++j) {
    max_re = std::max(max_re, std::abs(ws.buf[j].real()));
    max_im = std::max(max_im, std::abs(ws.buf[j].imag()));
    out[j] = scale * ws.buf[j].real();
  }
  if (max_im > 1e-9 * (1.0 + max_re))
    throw numeric_error("noise: synthesized field is not real");
}

NoiseIncrement sample_increment(const NoiseSampler& sampler, double dt,
                                std::uint64_t seed, std::uint64_t stream) {
  NoiseIncrement inc;
  inc.grid = sampler.grid();
  inc.dt = dt;
  inc.seed = seed;
  inc.stream = stream;
  RngStream rng(seed, stream);
  SamplerWorkspace ws(sampler.grid());
  sampler.sample_into(dt, rng, ws, inc.values);
  return inc;
}

double implied_covariance(const NoiseSampler& sampler, int lag_cells) {
  const GridSpec& g = sampler.grid();
  const auto& lambda = sampler.eigenvalues();
  const std::size_t cells = g.cells();
  double acc = 0.0;
  for (std::size_t f = 0; f < cells; ++f) {
    auto idx = g.unflatten(f);
    acc += lambda[f] *
           std::cos(2.0 * kPi * double(idx[0]) * double(lag_cells) / g.n);
  }
  return acc / double(cells);
}

CovarianceEstimate empirical_covariance(
    const std::vector<NoiseIncrement>& samples, const std::vector<int>& lags) {
  if (samples.size() < 2)
    throw invalid_spec("empirical covariance needs at least 2 samples");
  const GridSpec g = samples.front().grid;
  const std::size_t cells = g.cells();
  const std::size_t axis_stride = cells / g.n;  // stride of axis 1 (row-major)

  CovarianceEstimate est;
  est.lags = lags;
  est.samples = static_cast<int>(samples.size());
  est.value.resize(lags.size());
  est.se.resize(lags.size());

  std::vector<double> per_sample(samples.size());
  for (std::size_t li = 0; li < lags.size(); ++li) {
    const int h = lags[li];
    if (h < 0 || h >= g.n) throw invalid_spec("empirical covariance: bad lag");
    for (std::size_t m = 0; m < samples.size(); ++m) {
      const auto& v = samples[m].values;
      if (v.size() != cells)
        throw invalid_spec("empirical covariance: sample grid mismatch");
      double acc = 0.0;
      for (std::size_t f = 0; f < cells; ++f) {
        auto idx = g.unflatten(f);
        const int j2 = (idx[0] + h) % g.n;
        const std::ptrdiff_t shift =
            std::ptrdiff_t(j2 - idx[0]) * std::ptrdiff_t(axis_stride);
        acc += v[f] * v[f + shift];
      }
      per_sample[m] = acc / double(cells);
    }
    const double M = double(samples.size());
    double mean = 0.0;
    for (double x : per_sample) mean += x;
    mean /= M;
    // jackknife over samples; for this linear statistic it reduces to the
    // usual standard error of the mean
    double ss = 0.0;
    for (double x : per_sample) {
      const double loo = (M * mean - x) / (M - 1.0);
      ss += (loo - mean) * (loo - mean);
    }
    est.value[li] = mean;
    est.se[li] = std::sqrt((M - 1.0) / M * ss);
  }
  return est;
}

}  // namespace spde
