#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "spde/errors.hpp"

namespace spde {

// Periodic uniform grid on the torus [0, L)^d, n points per axis, row-major
// storage.  n must be a power of two so spectral transforms stay exact
// radix-2; total cell count is capped to keep fields addressable in memory.
struct GridSpec {
  int d = 1;        // spatial dimension, 1..3
  int n = 64;       // points per axis, power of two, >= 16
  double L = 1.0;   // box side length

  void validate() const {
    if (d < 1 || d > 3) throw invalid_spec("grid: d must be 1, 2 or 3");
    if (n < 16 || (n & (n - 1)) != 0)
      throw invalid_spec("grid: n must be a power of two >= 16");
    if (!(L > 0.0)) throw invalid_spec("grid: L must be positive");
    if (cells() > (std::size_t{1} << 24))
      throw invalid_spec("grid: total cell count exceeds 2^24");
  }

  double spacing() const { return L / n; }
  std::size_t cells() const {
    std::size_t c = 1;
    for (int a = 0; a < d; ++a) c *= static_cast<std::size_t>(n);
    return c;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < d; ++a) v *= spacing();
    return v;
  }

  // Row-major flattening of a d-dimensional index.
  std::size_t flatten(const std::array<int, 3>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < d; ++a) f = f * n + static_cast<std::size_t>(idx[a]);
    return f;
  }
  std::array<int, 3> unflatten(std::size_t f) const {
    std::array<int, 3> idx{0, 0, 0};
    for (int a = d - 1; a >= 0; --a) {
      idx[a] = static_cast<int>(f % n);
      f /= n;
    }
    return idx;
  }

  // Row-major stride of one axis in the flattened field.
  std::size_t axis_stride(int axis) const {
    std::size_t s = 1;
    for (int a = d - 1; a > axis; --a) s *= static_cast<std::size_t>(n);
    return s;
  }

  // Centered integer wavenumber for DFT bin q: in [-n/2, n/2).
  int wavenumber(int q) const { return q <= n / 2 - 1 ? q : q - n; }
  // Continuum frequency of bin q along one axis.
  double frequency(int q) const {
    return 2.0 * 3.14159265358979323846 * wavenumber(q) / L;
  }
  // Physical coordinate of cell j along one axis, in [0, L).
  double coord(int j) const { return j * spacing(); }
  // Signed periodic coordinate of cell j, in [-L/2, L/2).
  double coord_centered(int j) const {
    double x = coord(j);
    return x >= L / 2 ? x - L : x;
  }
};

}  // namespace spde
