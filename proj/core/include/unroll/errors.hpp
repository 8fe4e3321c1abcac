#pragma once

#include <stdexcept>
#include <string>

namespace unroll {

// Bad arguments, mismatched dimensions, malformed scene specs.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Index or time outside the sampled domain.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed binary or manifest files. layer() is the offending network layer, or -1.
class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what, int layer = -1)
      : std::runtime_error(layer >= 0 ? what + " (layer " + std::to_string(layer) + ")" : what),
        layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

// Missing files, failed external commands.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal contract (monotone loss, endpoint identity, ...) was broken.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A registration could not be resolved because the signal carries no texture.
class IndeterminateShiftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace unroll
