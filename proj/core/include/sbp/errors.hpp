#pragma once

#include <stdexcept>
#include <string>

namespace sbp {

enum class Errc {
  dimension_mismatch,
  index_out_of_range,
  invalid_probability,
  invalid_argument,
  configuration,
  zero_truth,
  parse_error,
  unsupported_field,
  io,
  // numerical failures
  unbounded_below,
  inner_solver_nonconvergence,
  exactness_violated,
};

/// Single exception type for the library; `code()` says what went wrong.
/// Numerical failures are distinguished from bad input so that callers
/// (the CLI in particular) can map them to different exit statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

  bool is_numerical() const noexcept {
    return code_ == Errc::unbounded_below || code_ == Errc::inner_solver_nonconvergence ||
           code_ == Errc::exactness_violated;
  }

 private:
  Errc code_;
};

}  // namespace sbp
