#pragma once

#include <stdexcept>
#include <string>

namespace htss {

enum class ErrorCode {
  invalid_argument,
  cyclic_relations,
  empty_result,
  uncovered_class,
  no_strong_parent,
  shape_mismatch,
  non_finite_input,
  index_out_of_range,
  no_supervised_pixels,
  missing_children,
  stale_cache,
  unsatisfiable_quota,
  io,
  parse,
  config,
  numeric_failure,
};

const char* to_string(ErrorCode code);

/// Exception type thrown by every module of the toolkit. The code is stable
/// and is what the C API and the CLI exit codes are derived from.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Process exit category for an error code: 2 config, 3 data, 4 numeric.
int exit_category(ErrorCode code);

}  // namespace htss
