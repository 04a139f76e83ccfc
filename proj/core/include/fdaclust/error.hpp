#pragma once

#include <stdexcept>
#include <string>

namespace fdaclust {

/// Coarse failure categories. The CLI maps each category to a distinct
/// exit code, so keep the list short and stable.
enum class ErrorCategory {
  io,       // missing or unreadable file
  parse,    // malformed input text
  schema,   // structurally invalid artifact or record
  domain,   // argument outside the operation's domain
  config,   // invalid or contradictory configuration
  numeric,  // conditioning or convergence failure
  data,     // insufficient or degenerate input data
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, const std::string& message) {
  throw Error(c, message);
}

}  // namespace fdaclust
