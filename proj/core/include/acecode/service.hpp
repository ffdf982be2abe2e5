#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "acecode/exec_harness.hpp"
#include "acecode/rewarder.hpp"
#include "acecode/task_corpus.hpp"

namespace acecode {

struct ServiceRequest {
  std::string task_id;
  std::string code;
};

/// Parses {"task_id": str, "code": str}; throws Error with a readable reason.
ServiceRequest parse_request(std::string_view line);

/// {"task_id", "reward", "status", "e_candidate_ns"?, "e_reference_ns"?} as one line (no newline).
std::string response_line(std::string_view task_id, const RewardSignal& signal);
/// {"task_id": str|null, "error": str} as one line (no newline).
std::string error_line(std::optional<std::string_view> task_id, std::string_view message);

/// Online rewarder over standard streams: one response line per input line,
/// in input order. Timing work is always sequential; with parallel_tests the
/// correctness runs of queued requests overlap.
class RewardService {
 public:
  RewardService(const Corpus& corpus, Harness& harness, RewardConfig cfg, ReferenceCache& cache);

  /// Handles one input line completely and returns the response line.
  std::string handle(std::string_view line);

  /// Reads until end of input. Returns the number of lines answered.
  std::size_t serve(std::istream& in, std::ostream& out, bool parallel_tests = false);

 private:
  struct Prepared {
    std::optional<std::string> immediate;  // error response, no further work
    const CodingTask* task = nullptr;
    ServiceRequest request;
  };
  Prepared prepare(std::string_view line) const;
  std::string finish(const Prepared& prepared, const TestVerdict& verdict);

  const Corpus& corpus_;
  Harness& harness_;
  RewardConfig cfg_;
  ReferenceCache& cache_;
};

}  // namespace acecode
