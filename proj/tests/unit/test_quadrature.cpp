#include <cmath>

#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/quadrature.hpp"

using namespace spde;

TEST_CASE("quadrature integrates smooth functions to tight tolerance") {
  const auto r = integrate([](double x) { return std::sin(x); }, 0.0, M_PI);
  CHECK(r.converged);
  CHECK(std::abs(r.value - 2.0) < 1e-10);
}

TEST_CASE("quadrature handles integrable endpoint singularities") {
  // integral_0^1 x^(-1/2) dx = 2
  const double v =
      integrate_or_throw([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
                         1e-10, 1e-9, 8000);
  CHECK(std::abs(v - 2.0) < 1e-7);
}

TEST_CASE("quadrature reports non-convergence instead of a wrong answer") {
  // x^(-0.999) is integrable but brutally slow; a tiny budget must not claim
  // convergence.
  const auto r = integrate([](double x) { return std::pow(x, -0.999); }, 0.0,
                           1.0, 1e-14, 1e-14, 4);
  CHECK(!r.converged);
  CHECK_THROWS_AS(integrate_or_throw([](double x) { return std::pow(x, -0.999); },
                                     0.0, 1.0, 1e-14, 1e-14, 4),
                  numeric_error);
}

TEST_CASE("quadrature matches a known gaussian integral") {
  const double v = integrate_or_throw(
      [](double x) { return std::exp(-x * x); }, -12.0, 12.0);
  CHECK(std::abs(v - std::sqrt(M_PI)) < 1e-9);
}
