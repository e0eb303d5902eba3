#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace rince {

// Error taxonomy. Everything user-facing derives from std::runtime_error or
// std::invalid_argument so callers can catch broadly.
struct invalid_input : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct invalid_parameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct invalid_spec : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct degenerate_embedding : std::runtime_error {
  degenerate_embedding(const std::string& what, int row_index)
      : std::runtime_error(what), row(row_index) {}
  int row;
};

struct batch_too_small : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct theorem_inapplicable : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct assumption_violation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct insufficient_classes : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct training_diverged : std::runtime_error {
  training_diverged(const std::string& what, int epoch_index)
      : std::runtime_error(what), epoch(epoch_index) {}
  int epoch;
};

inline void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) {
    throw invalid_input(std::string(what) + ": non-finite value");
  }
}

}  // namespace rince
