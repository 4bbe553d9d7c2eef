#include "peerfx/error.hpp"

namespace peerfx {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid_input";
    case ErrorKind::UnknownNode: return "unknown_node";
    case ErrorKind::SelfLoop: return "self_loop";
    case ErrorKind::NonPositiveWeight: return "non_positive_weight";
    case ErrorKind::DuplicateEdge: return "duplicate_edge";
    case ErrorKind::MissingValue: return "missing_value";
    case ErrorKind::EmptySample: return "empty_sample";
    case ErrorKind::Separation: return "separation";
    case ErrorKind::RankDeficient: return "rank_deficient";
    case ErrorKind::SingularMatrix: return "singular_matrix";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Io: return "io";
    case ErrorKind::Usage: return "usage";
  }
  return "unknown";
}

}  // namespace peerfx
