#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "spde/fft.hpp"
#include "spde/rng.hpp"

using namespace spde;

TEST_CASE("fft round trip restores the input") {
  const std::size_t n = 256;
  Fft fft(n);
  RngStream rng(11, 0);
  std::vector<cplx> a(n), orig(n);
  for (auto& z : a) z = cplx(rng.gauss(), rng.gauss());
  orig = a;
  fft.forward(a.data());
  fft.inverse(a.data());
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    worst = std::max(worst, std::abs(a[j] - orig[j]));
  CHECK(worst < 1e-12);
}

TEST_CASE("fft of a delta is flat and of a mode is a spike") {
  const std::size_t n = 64;
  Fft fft(n);
  std::vector<cplx> a(n, cplx(0.0, 0.0));
  a[0] = 1.0;
  fft.forward(a.data());
  for (std::size_t q = 0; q < n; ++q)
    CHECK(std::abs(a[q] - cplx(1.0, 0.0)) < 1e-13);

  const int k = 5;
  for (std::size_t j = 0; j < n; ++j)
    a[j] = std::exp(cplx(0.0, 2.0 * M_PI * k * double(j) / double(n)));
  fft.forward(a.data());
  for (std::size_t q = 0; q < n; ++q) {
    const double expect = q == std::size_t(k) ? double(n) : 0.0;
    CHECK(std::abs(a[q] - expect) < 1e-10);
  }
}

TEST_CASE("fft preserves the Parseval identity") {
  const std::size_t n = 128;
  Fft fft(n);
  RngStream rng(3, 1);
  std::vector<cplx> a(n);
  double time_sum = 0.0;
  for (auto& z : a) {
    z = cplx(rng.gauss(), rng.gauss());
    time_sum += std::norm(z);
  }
  fft.forward(a.data());
  double freq_sum = 0.0;
  for (auto& z : a) freq_sum += std::norm(z);
  CHECK(std::abs(freq_sum / double(n) - time_sum) < 1e-9 * time_sum);
}

TEST_CASE("multidimensional transform matches per-axis composition") {
  const int n = 16;
  FftNd fft2(2, n);
  RngStream rng(7, 2);
  std::vector<cplx> a(std::size_t(n) * n), b;
  for (auto& z : a) z = cplx(rng.gauss(), 0.0);
  b = a;

  fft2.forward(a.data());

  Fft fft1(n);
  // rows
  for (int r = 0; r < n; ++r) fft1.forward(b.data() + std::size_t(r) * n);
  // columns
  std::vector<cplx> col(n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < n; ++r) col[std::size_t(r)] = b[std::size_t(r) * n + c];
    fft1.forward(col.data());
    for (int r = 0; r < n; ++r) b[std::size_t(r) * n + c] = col[std::size_t(r)];
  }
  double worst = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j)
    worst = std::max(worst, std::abs(a[j] - b[j]));
  CHECK(worst < 1e-10);
}
