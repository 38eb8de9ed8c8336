#pragma once

#include <cstdint>
#include <vector>

#include "spde/covariance.hpp"
#include "spde/fft.hpp"
#include "spde/grid.hpp"
#include "spde/rng.hpp"

namespace spde {

// One sampled noise increment over a time step of length dt: a real field on
// the grid with Cov(values[j], values[k]) = dt * f_per(x_j - x_k), where
// f_per is the box-periodized covariance kernel.
struct NoiseIncrement {
  GridSpec grid;
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::vector<double> values;
};

// How the circulant spectral mass is obtained.
enum class SynthesisRoute {
  spectral_lattice,  // sample the dual density on the discrete frequency
                     // lattice, alias images summed, singular cell averaged
  covariance_dft,    // DFT of the periodized kernel sampled on the grid
};

// Reusable FFT scratch; one instance per thread.
struct SamplerWorkspace {
  explicit SamplerWorkspace(const GridSpec& g)
      : fft(g.d, static_cast<std::size_t>(g.n)), buf(g.cells()) {}
  FftNd fft;
  std::vector<cplx> buf;
};

// Stationary Gaussian field sampler: draws a white field g (one standard
// normal per cell, row-major) and filters it spectrally,
//   increment = sqrt(dt) * IDFT( sqrt(lambda_q) . DFT(g) ),
// where lambda_q are the eigenvalues of the periodized covariance circulant.
// Negative eigenvalues (periodization artifacts) are clamped to zero; the
// build fails if the clamped fraction of total spectral mass reaches 1e-3.
class NoiseSampler {
 public:
  static NoiseSampler build(const SpectralMeasure& mu, const GridSpec& grid);
  static NoiseSampler build(const SpectralMeasure& mu, const GridSpec& grid,
                            SynthesisRoute route);

  const GridSpec& grid() const { return grid_; }
  const SpectralMeasure& measure() const { return mu_; }
  SynthesisRoute route() const { return route_; }
  double clamped_mass_fraction() const { return clamped_fraction_; }
  const std::vector<double>& eigenvalues() const { return lambda_; }

  // Draws grid.cells() standard normals from rng (row-major order) and
  // writes the filtered increment into out.
  void sample_into(double dt, RngStream& rng, SamplerWorkspace& ws,
                   std::vector<double>& out) const;

 private:
  GridSpec grid_;
  SpectralMeasure mu_;
  SynthesisRoute route_ = SynthesisRoute::spectral_lattice;
  double clamped_fraction_ = 0.0;
  std::vector<double> lambda_;     // circulant eigenvalues, clamped >= 0
  std::vector<double> amplitude_;  // sqrt(lambda)
};

// One-shot draw: the first increment of the given (seed, stream).
// Bit-identical across calls with equal arguments.
NoiseIncrement sample_increment(const NoiseSampler& sampler, double dt,
                                std::uint64_t seed, std::uint64_t stream);

// Covariance implied exactly by the sampler's eigenvalues at an axis-aligned
// cell lag (the law the increments follow, before Monte Carlo error):
//   (1/n^d) sum_q lambda_q cos(2 pi q.h / n)
double implied_covariance(const NoiseSampler& sampler, int lag_cells);

// Per-lag empirical covariance of mean-zero increments along the first axis
// with wrap-around (the fields are periodic), averaged over cells and
// samples, with jackknife-over-samples standard errors.
struct CovarianceEstimate {
  std::vector<int> lags;       // in cells, along axis 1
  std::vector<double> value;   // empirical covariance per lag
  std::vector<double> se;      // jackknife standard error per lag
  int samples = 0;
};

CovarianceEstimate empirical_covariance(
    const std::vector<NoiseIncrement>& samples, const std::vector<int>& lags);

}  // namespace spde
