#pragma once

#include <cstdint>
#include <random>

namespace spde {

// splitmix64 step; advances state and returns the next output word.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Seed-derivation contract: stream s of master seed M is seeded with the
// first splitmix64 output of state M + (s+1) * golden-gamma.  Streams are
// decorrelated by the mixer; identical (M, s) always yields the same seed.
inline std::uint64_t derive_stream_seed(std::uint64_t master,
                                        std::uint64_t stream) {
  std::uint64_t state = master + (stream + 1) * 0x9E3779B97F4A7C15ull;
  return splitmix64(state);
}

// One reproducible Gaussian stream: mt19937_64 seeded per the contract above,
// standard normal draws.  Draw order is part of every sampler's contract.
class RngStream {
 public:
  RngStream(std::uint64_t master, std::uint64_t stream)
      : eng_(derive_stream_seed(master, stream)) {}

  double gauss() { return normal_(eng_); }
  std::uint64_t raw() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace spde
