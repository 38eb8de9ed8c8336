#pragma once

#include <stdexcept>
#include <string>

namespace spde {

// Thrown when a caller-supplied specification (model parameters, grids,
// config files, CLI arguments) is rejected by validation.
class invalid_spec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown when a numerical procedure fails to deliver its contract
// (quadrature non-convergence, linear solver stagnation, non-finite state).
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace spde
