#include "htss/error.hpp"

namespace htss {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::cyclic_relations: return "CyclicRelations";
    case ErrorCode::empty_result: return "EmptyResult";
    case ErrorCode::uncovered_class: return "UncoveredClass";
    case ErrorCode::no_strong_parent: return "NoStrongParent";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::index_out_of_range: return "IndexOutOfRange";
    case ErrorCode::no_supervised_pixels: return "NoSupervisedPixels";
    case ErrorCode::missing_children: return "MissingChildren";
    case ErrorCode::stale_cache: return "StaleCache";
    case ErrorCode::unsatisfiable_quota: return "UnsatisfiableQuota";
    case ErrorCode::io: return "IoError";
    case ErrorCode::parse: return "ParseError";
    case ErrorCode::config: return "ConfigError";
    case ErrorCode::numeric_failure: return "NumericFailure";
  }
  return "Unknown";
}

int exit_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::config:
    case ErrorCode::unsatisfiable_quota:
    case ErrorCode::invalid_argument:
      return 2;
    case ErrorCode::non_finite_input:
    case ErrorCode::numeric_failure:
      return 4;
    default:
      return 3;
  }
}

}  // namespace htss
