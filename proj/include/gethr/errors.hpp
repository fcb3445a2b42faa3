#ifndef GETHR_ERRORS_HPP
#define GETHR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace gethr {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad argument or violated precondition (rejected input, invalid flag value).
struct value_error : error {
  using error::error;
};

// Dimension mismatch; message carries expected/actual shapes.
struct shape_error : value_error {
  using value_error::value_error;
};

// File system or parse failure while reading/writing artifacts.
struct io_error : error {
  using error::error;
};

// NaN gradients during training.
struct divergence_error : error {
  using error::error;
};

// Metric has no defined value on the given data (e.g. mAP with no positives).
struct metric_undefined_error : error {
  using error::error;
};

}  // namespace gethr

#endif
