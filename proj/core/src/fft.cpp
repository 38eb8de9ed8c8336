#include "spde/fft.hpp"

#include <cmath>

namespace spde {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

Fft::Fft(std::size_t n) : n_(n) {
  if (n_ == 0 || (n_ & (n_ - 1)) != 0)
    throw invalid_spec("fft: size must be a power of two");
  std::size_t log2n = 0;
  while ((std::size_t{1} << log2n) < n_) ++log2n;

  rev_.resize(n_);
  for (std::size_t i = 0; i < n_; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < log2n; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (log2n - 1 - b);
    rev_[i] = r;
  }

  tw_.resize(n_ / 2 + 1);
  for (std::size_t k = 0; k <= n_ / 2; ++k) {
    double ang = -kTwoPi * static_cast<double>(k) / static_cast<double>(n_);
    tw_[k] = cplx(std::cos(ang), std::sin(ang));
  }
}

void Fft::transform(cplx* a, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i)
    if (i < rev_[i]) std::swap(a[i], a[rev_[i]]);

  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len >> 1;
    const std::size_t step = n_ / len;
    for (std::size_t base = 0; base < n_; base += len) {
      for (std::size_t k = 0; k < half; ++k) {
        cplx w = tw_[k * step];
        if (inverse) w = std::conj(w);
        const cplx u = a[base + k];
        const cplx v = a[base + k + half] * w;
        a[base + k] = u + v;
        a[base + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double s = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) a[i] *= s;
  }
}

FftNd::FftNd(int d, std::size_t n) : d_(d), n_(n), total_(1), fft_(n), line_(n) {
  if (d_ < 1 || d_ > 3) throw invalid_spec("fft: dimension must be 1, 2 or 3");
  for (int a = 0; a < d_; ++a) total_ *= n_;
}

void FftNd::transform(cplx* data, bool inverse) {
  // Apply the 1-d transform along each axis; stride of axis a (row-major,
  // equal sides) is n^(d-1-a).
  std::size_t stride = 1;
  for (int axis = d_ - 1; axis >= 0; --axis) {
    const std::size_t nblocks = total_ / (n_ * stride);
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
      for (std::size_t off = 0; off < stride; ++off) {
        const std::size_t base = blk * n_ * stride + off;
        if (stride == 1) {
          cplx* line = data + base;
          if (inverse)
            fft_.inverse(line);
          else
            fft_.forward(line);
        } else {
          for (std::size_t j = 0; j < n_; ++j) line_[j] = data[base + j * stride];
          if (inverse)
            fft_.inverse(line_.data());
          else
            fft_.forward(line_.data());
          for (std::size_t j = 0; j < n_; ++j) data[base + j * stride] = line_[j];
        }
      }
    }
    stride *= n_;
  }
}

}  // namespace spde
