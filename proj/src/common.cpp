#include "bciassist/common.hpp"

namespace bciassist {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unknown_type: return "unknown_type";
    case ErrorCode::unknown_symbol: return "unknown_symbol";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::precondition_failed: return "precondition_failed";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::session_finished: return "session_finished";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace bciassist
