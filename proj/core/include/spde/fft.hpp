#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

using cplx = std::complex<double>;

// Radix-2 complex FFT, power-of-two sizes only.  Conventions:
//   forward:  X_k = sum_j x_j exp(-2*pi*i*j*k/n)      (unnormalized)
//   inverse:  x_j = (1/n) sum_k X_k exp(+2*pi*i*j*k/n)
// Deterministic: fixed butterfly order, no runtime tuning.
class Fft {
 public:
  explicit Fft(std::size_t n);

  std::size_t size() const { return n_; }
  void forward(cplx* a) const { transform(a, false); }
  void inverse(cplx* a) const { transform(a, true); }

 private:
  void transform(cplx* a, bool inverse) const;

  std::size_t n_;
  std::vector<std::size_t> rev_;
  std::vector<cplx> tw_;  // tw_[k] = exp(-2*pi*i*k/n), k < n/2
};

// d-dimensional transform on a row-major hypercube of side n (same
// normalization per axis as Fft).  Holds scratch: one instance per thread.
class FftNd {
 public:
  FftNd(int d, std::size_t n);

  void forward(cplx* data) { transform(data, false); }
  void inverse(cplx* data) { transform(data, true); }
  std::size_t total() const { return total_; }

 private:
  void transform(cplx* data, bool inverse);

  int d_;
  std::size_t n_;
  std::size_t total_;
  Fft fft_;
  std::vector<cplx> line_;
};

}  // namespace spde
