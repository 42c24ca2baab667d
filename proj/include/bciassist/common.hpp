#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bciassist {

enum class ErrorCode {
  invalid_argument,
  unknown_type,
  unknown_symbol,
  parse_error,
  precondition_failed,
  not_found,
  session_finished,
  infeasible,
  io_error,
};

std::string_view to_string(ErrorCode code);

// Every module reports contract violations through this one exception type;
// the gateway maps `code()` onto structured wire errors.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Rng = std::mt19937_64;

// Derives independent child seeds from one master seed (splitmix64), so every
// run of a batch is replayable on its own.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace bciassist
