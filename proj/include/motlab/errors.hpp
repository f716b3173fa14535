#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace motlab {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A measure would end up with no positively weighted atom.
struct EmptySupportError : Error {
  using Error::Error;
};

/// An input atom, weight, cost or coefficient is NaN or infinite.
struct NonFiniteError : Error {
  using Error::Error;
};

/// Vector/matrix sizes do not line up.
struct DimensionMismatchError : Error {
  using Error::Error;
};

/// The simplex pivot cap was hit; signals a numerical pathology.
struct IterationLimitError : Error {
  using Error::Error;
};

/// Expression text could not be parsed. `column` is 1-based.
struct ParseError : Error {
  std::size_t column;
  ParseError(std::string message, std::size_t col)
      : Error(std::move(message)), column(col) {}
};

/// Expression evaluation produced a non-finite value.
struct EvalError : Error {
  using Error::Error;
};

/// A perturbation scheme emitted a pair violating convex order.
struct SchemeViolationError : Error {
  using Error::Error;
};

/// A coupling handed to a hemicontinuity sweep is not a martingale
/// coupling of the base pair.
struct NotInMartingaleSetError : Error {
  using Error::Error;
};

}  // namespace motlab
