#pragma once

#include <stdexcept>
#include <string>

namespace otshape {

/// Caller-provided data is unusable: bad dimensions, non-finite values,
/// empty measures, zero total mass.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The exact transport solver exhausted its pivot guard without reaching
/// optimality.
struct SolverFailureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sinkhorn scaling produced non-finite potentials; retry with a larger
/// epsilon.
struct EpsilonUnderflowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient descent blew past the cost ceiling; retry with a smaller step
/// size.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A scenario document violated the schema or one of its invariants.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace otshape
