#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace acecode {

/// Classified result of running a candidate against its tests. Exactly one
/// status applies to every execution.
enum class Status { Pass, TestFailure, CompileError, Timeout };

/// Wire names: "pass", "test_failure", "compile_error", "timeout".
std::string_view to_string(Status status);
std::optional<Status> parse_status(std::string_view text);

/// Base for every error raised by the library. Code-under-test failures are
/// never reported this way; they are statuses.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace acecode
