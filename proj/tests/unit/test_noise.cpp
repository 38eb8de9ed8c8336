#include <cmath>
#include <vector>

#include "doctest.h"
#include "spde/covariance.hpp"
#include "spde/errors.hpp"
#include "spde/grid.hpp"
#include "spde/noise.hpp"

using namespace spde;

namespace {
NoiseSampler build(const CovarianceModel& m, const GridSpec& g) {
  return NoiseSampler::build(SpectralMeasure::for_model(m), g);
}
}  // namespace

TEST_CASE("white noise eigenvalues are flat at cells/volume") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = build(CovarianceModel::white(1), g);
  const double want = double(g.cells()) / std::pow(g.L, g.d);  // 1/dx
  REQUIRE(sampler.eigenvalues().size() == g.cells());
  for (double lam : sampler.eigenvalues()) {
    CHECK(lam == doctest::Approx(want).epsilon(1e-13));
  }
  CHECK(sampler.clamped_mass_fraction() == 0.0);
}

TEST_CASE("gaussian eigenvalues match the dual density closed form") {
  // with L = 8, rate = 1 the nearest alias image sits at |xi| ~ 50, where
  // the dual density is ~ e^(-632): the lattice rule reduces to the primary
  // term factor * (2 rate)^(-d/2) exp(-|xi_q|^2 / (4 rate))
  const GridSpec g{1, 64, 8.0};
  const double rate = 1.0;
  const auto sampler = build(CovarianceModel::gaussian(1, rate), g);
  const double factor =
      double(g.cells()) * std::pow(2.0 * M_PI, 0.5 * g.d) / std::pow(g.L, g.d);
  const auto& lam = sampler.eigenvalues();
  for (std::size_t q : {std::size_t(0), std::size_t(1), std::size_t(5),
                        std::size_t(17), std::size_t(32)}) {
    const double xi = g.frequency(int(q));
    const double want = factor * std::pow(2.0 * rate, -0.5 * g.d) *
                        std::exp(-xi * xi / (4.0 * rate));
    CHECK(lam[q] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("lattice and covariance_dft routes agree for gaussian") {
  const GridSpec g{2, 32, 12.0};
  const auto mu = SpectralMeasure::for_model(CovarianceModel::gaussian(2, 1.0));
  const auto a = NoiseSampler::build(mu, g, SynthesisRoute::spectral_lattice);
  const auto b = NoiseSampler::build(mu, g, SynthesisRoute::covariance_dft);
  const auto& la = a.eigenvalues();
  const auto& lb = b.eigenvalues();
  REQUIRE(la.size() == lb.size());
  double lmax = 0.0;
  for (double v : la) lmax = std::max(lmax, v);
  double worst = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const double denom = std::max(la[i], 1e-9 * lmax);
    worst = std::max(worst, std::abs(la[i] - lb[i]) / denom);
  }
  CHECK(worst < 1e-6);
}

TEST_CASE("riesz rejects the covariance_dft route") {
  const GridSpec g{2, 32, 8.0};
  const auto mu = SpectralMeasure::for_model(CovarianceModel::riesz(2, 1.0));
  CHECK_THROWS_AS(NoiseSampler::build(mu, g, SynthesisRoute::covariance_dft),
                  invalid_spec);
}

TEST_CASE("riesz eigenvalues: averaged singular bin, monotone decay") {
  const GridSpec g{1, 256, 16.0};
  const auto sampler = build(CovarianceModel::riesz(1, 0.5), g);
  const auto& lam = sampler.eigenvalues();
  CHECK(std::isfinite(lam[0]));
  CHECK(lam[0] > lam[1]);
  CHECK(lam[1] > lam[4]);
  CHECK(lam[4] > lam[16]);
  CHECK(lam[16] > lam[64]);
  CHECK(lam[64] > lam[128]);
  CHECK(sampler.clamped_mass_fraction() < 1e-3);
}

TEST_CASE("increments are reproducible for a fixed (seed, stream)") {
  const GridSpec g{1, 128, 16.0};
  const auto sampler = build(CovarianceModel::gaussian(1, 2.0), g);
  const auto a = sample_increment(sampler, 0.01, 123, 7);
  const auto b = sample_increment(sampler, 0.01, 123, 7);
  const auto c = sample_increment(sampler, 0.01, 123, 8);
  REQUIRE(a.values.size() == g.cells());
  REQUIRE(a.values.size() == b.values.size());
  bool identical = true;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] != b.values[i]) identical = false;
  }
  CHECK(identical);
  bool differs = false;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (a.values[i] != c.values[i]) differs = true;
  }
  CHECK(differs);
  CHECK(a.seed == 123);
  CHECK(a.stream == 7);
  CHECK(a.dt == 0.01);
}

TEST_CASE("increment scales like sqrt(dt) for a fixed white draw") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = build(CovarianceModel::gaussian(1, 1.0), g);
  const auto a = sample_increment(sampler, 0.04, 5, 0);
  const auto b = sample_increment(sampler, 0.01, 5, 0);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    CHECK(a.values[i] == doctest::Approx(2.0 * b.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("implied covariance: even in the lag, maximal at zero") {
  const GridSpec g{1, 64, 8.0};
  const auto sampler = build(CovarianceModel::gaussian(1, 1.5), g);
  const double c0 = implied_covariance(sampler, 0);
  const double cp = implied_covariance(sampler, 5);
  const double cm = implied_covariance(sampler, -5);
  const double cw = implied_covariance(sampler, 64 - 5);  // wrap alias
  CHECK(cp == doctest::Approx(cm).epsilon(1e-12));
  CHECK(cp == doctest::Approx(cw).epsilon(1e-12));
  CHECK(c0 > 0.0);
  CHECK(c0 >= cp);
}

TEST_CASE("empirical covariance of sampled increments matches the law") {
  const GridSpec g{1, 64, 16.0};
  const auto sampler = build(CovarianceModel::gaussian(1, 1.0), g);
  const double dt = 0.02;
  const int count = 2000;
  std::vector<NoiseIncrement> samples;
  samples.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    samples.push_back(sample_increment(sampler, dt, 4242, std::uint64_t(k)));
  }
  std::vector<int> lags{0, 1, 2, 3, 5, 8};
  const auto est = empirical_covariance(samples, lags);
  REQUIRE(est.lags.size() == lags.size());
  CHECK(est.samples == count);
  for (std::size_t i = 0; i < lags.size(); ++i) {
    const double want = dt * implied_covariance(sampler, lags[i]);
    CHECK(std::abs(est.value[i] - want) <= 4.0 * est.se[i]);
    CHECK(est.se[i] > 0.0);
  }
}

TEST_CASE("white increment cell variance is dt/cell_volume") {
  const GridSpec g{1, 128, 8.0};
  const auto sampler = build(CovarianceModel::white(1), g);
  const double dt = 0.05;
  const int count = 1500;
  double acc = 0.0;
  for (int k = 0; k < count; ++k) {
    const auto inc = sample_increment(sampler, dt, 31, std::uint64_t(k));
    for (double v : inc.values) acc += v * v;
  }
  const double emp = acc / (double(count) * double(g.cells()));
  const double want = dt / g.cell_volume();
  // relative SE of a chi-square mean with count*cells dof
  const double se = want * std::sqrt(2.0 / (double(count) * double(g.cells())));
  CHECK(std::abs(emp - want) <= 4.0 * se);
}
