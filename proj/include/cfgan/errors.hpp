#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace cfgan {

/// Invalid configuration: mismatched dimensions, out-of-range meta-parameters,
/// unparseable config files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file. Carries the byte offset at which parsing failed.
class IngestionError : public std::runtime_error {
 public:
  IngestionError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

/// A functional-gradient step could not be inverted: the fixed-point iteration
/// did not converge, so the step is not a contraction at this step size.
class StepTooLargeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Generated points left the configured bounding box during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int iteration)
      : std::runtime_error(what), iteration_(iteration) {}

  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

/// Broken internal bookkeeping (e.g. a pool advanced out of order).
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace cfgan
