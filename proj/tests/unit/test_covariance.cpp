#include <cmath>
#include <limits>

#include "doctest.h"
#include "spde/covariance.hpp"

using namespace spde;

TEST_CASE("pointwise kernels: singular markers and closed values") {
  const auto white = CovarianceModel::white(1);
  CHECK(!eval_covariance(white, 0.0).has_value());
  CHECK(eval_covariance(white, 0.5).value() == 0.0);

  const auto riesz = CovarianceModel::riesz(2, 0.7);
  CHECK(!eval_covariance(riesz, 0.0).has_value());
  CHECK(eval_covariance(riesz, 2.0).value() ==
        doctest::Approx(std::pow(2.0, -0.7)).epsilon(1e-12));

  const auto gauss = CovarianceModel::gaussian(1, 1.0);
  CHECK(eval_covariance(gauss, 0.0).value() == 1.0);
  CHECK(eval_covariance(gauss, 1.5).value() ==
        doctest::Approx(std::exp(-2.25)).epsilon(1e-12));
}

TEST_CASE("spectral densities match the stated convention") {
  CHECK(spectral_density(CovarianceModel::white(1), 3.7) ==
        doctest::Approx(std::pow(2.0 * M_PI, -0.5)).epsilon(1e-12));
  // numerical transform oracle: (2 pi)^(-1/2) integral e^{-x^2} dx = 2^{-1/2}
  CHECK(spectral_density(CovarianceModel::gaussian(1, 1.0), 0.0) ==
        doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  const auto riesz = CovarianceModel::riesz(1, 0.5);
  const double s1 = spectral_density(riesz, 1.3);
  const double s2 = spectral_density(riesz, 2.6);
  CHECK(s2 / s1 == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  CHECK(std::isinf(spectral_density(riesz, 0.0)));
}

TEST_CASE("bessel kernel closed forms in d=1 at gamma=2") {
  CHECK(bessel_kernel(2.0, 1, 0.0) == doctest::Approx(0.5).epsilon(2e-7));
  CHECK(bessel_kernel(2.0, 1, 1.0) ==
        doctest::Approx(0.5 * std::exp(-1.0)).epsilon(2e-7));
  CHECK(bessel_kernel(2.0, 1, 0.75) == bessel_kernel(2.0, 1, 0.75));
}

TEST_CASE("bessel kernel near-origin blowup has the algebraic exponent") {
  // gamma < d: R(r) * r^(d-gamma) tends to a positive constant
  const double a = bessel_kernel(0.5, 1, 1e-6) * std::pow(1e-6, 0.5);
  const double b = bessel_kernel(0.5, 1, 1e-7) * std::pow(1e-7, 0.5);
  CHECK(a == doctest::Approx(b).epsilon(5e-3));
  CHECK(a > 0.0);
}

TEST_CASE("bessel kernel decays at least exponentially at distance") {
  const double v4 = bessel_kernel(0.8, 1, 4.0);
  const double v8 = bessel_kernel(0.8, 1, 8.0);
  CHECK(v8 < v4 * std::exp(-0.5 * 4.0) * 1.5);
}

TEST_CASE("kernel tables are radially monotone and interpolate power laws") {
  const KernelTable t = tabulate_bessel_kernel(0.5, 1.0, 1, 128, 16.0);
  for (std::size_t j = 1; j + 1 < t.value.size(); ++j)
    CHECK(t.value[j + 1] <= t.value[j] * (1.0 + 1e-12));
  // below the first positive radius the table extends as r^e
  const double e = 0.5 - 1.0;
  const double r = 0.25 * t.radius[1];
  CHECK(t.interpolate(r, e) ==
        doctest::Approx(t.value[1] * std::pow(0.25, e)).epsilon(1e-12));
}

TEST_CASE("integral constants: gaussian A, riesz divergence, white I") {
  const auto gauss = SpectralMeasure::for_model(CovarianceModel::gaussian(1, 1.0));
  const auto cg = estimate_constants(gauss, 0.25, 4.0, 1);
  CHECK(cg.A == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-6));

  const auto riesz = SpectralMeasure::for_model(CovarianceModel::riesz(2, 0.5));
  const auto cr = estimate_constants(riesz, 0.3, 4.0, 2);
  CHECK(!cr.i_finite);
  CHECK(std::isinf(cr.I));

  const auto white = SpectralMeasure::for_model(CovarianceModel::white(1));
  const auto cw = estimate_constants(white, 0.2,
                                     std::numeric_limits<double>::infinity(), 1);
  CHECK(cw.i_finite);
  CHECK(cw.r == 1.0);
  CHECK(cw.I == doctest::Approx(bessel_kernel(1.6, 1, 0.0)).epsilon(0.03));
}

TEST_CASE("sphere surface areas") {
  CHECK(sphere_surface(1) == doctest::Approx(2.0));
  CHECK(sphere_surface(2) == doctest::Approx(2.0 * M_PI));
  CHECK(sphere_surface(3) == doctest::Approx(4.0 * M_PI));
}
