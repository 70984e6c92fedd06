#pragma once

#include <stdexcept>
#include <string>

namespace capforge {

/// Malformed or unreadable input (annotation files, predictions, stats,
/// tensors, stream records).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Predictions and references could not be paired up.
class AlignmentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace capforge
