#pragma once

#include <stdexcept>
#include <string>

namespace pae {

// Input or configuration rejected before any numerical work happens.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape mismatch between tensors entering an op.
class ShapeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Non-finite values, divergence, or a singular system.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pae
