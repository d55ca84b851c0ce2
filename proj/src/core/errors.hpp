#pragma once

#include <stdexcept>
#include <string>

namespace synckit {

// Failure classes map onto process exit codes at the tool boundary:
// usage/parse -> 1, verdict -> 2, numeric -> 3.
enum class ErrorCode { usage = 1, verdict = 2, numeric = 3 };

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_usage(const std::string& msg) { throw Error(ErrorCode::usage, msg); }
[[noreturn]] inline void throw_verdict(const std::string& msg) { throw Error(ErrorCode::verdict, msg); }
[[noreturn]] inline void throw_numeric(const std::string& msg) { throw Error(ErrorCode::numeric, msg); }

}  // namespace synckit
