#include "acecode/status.hpp"

namespace acecode {

std::string_view to_string(Status status) {
  switch (status) {
    case Status::Pass:
      return "pass";
    case Status::TestFailure:
      return "test_failure";
    case Status::CompileError:
      return "compile_error";
    case Status::Timeout:
      return "timeout";
  }
  return "unknown";
}

std::optional<Status> parse_status(std::string_view text) {
  if (text == "pass") return Status::Pass;
  if (text == "test_failure") return Status::TestFailure;
  if (text == "compile_error") return Status::CompileError;
  if (text == "timeout") return Status::Timeout;
  return std::nullopt;
}

}  // namespace acecode
