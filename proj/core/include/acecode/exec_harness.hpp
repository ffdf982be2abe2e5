#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "acecode/status.hpp"
#include "acecode/task_types.hpp"

namespace acecode {

using Nanoseconds = std::chrono::nanoseconds;
using Milliseconds = std::chrono::milliseconds;

/// How to start the external driver program. The template is tokenized like
/// a shell command line; the token containing `{job}` receives the job-spec path.
struct RunnerConfig {
  static constexpr std::string_view kJobPlaceholder = "{job}";

  enum class WorkdirPolicy { FreshTempDir };

  std::string command_template;
  WorkdirPolicy workdir_policy = WorkdirPolicy::FreshTempDir;
  std::vector<std::string> env_allowlist{"PATH", "HOME", "LANG", "LC_ALL", "PYTHONPATH"};

  /// Throws Error unless the template holds exactly one placeholder.
  void validate() const;
};

struct TimingConfig {
  std::int64_t n_min = 10;
  Nanoseconds t_max = std::chrono::seconds(3);
  Nanoseconds hard_timeout = std::chrono::seconds(10);
  /// max/min per-repetition ratio above which a measurement is flagged unstable.
  double unstable_ratio = 5.0;
  bool fail_on_unstable = false;
  /// Upper bound on repetitions when executions are too fast to accumulate t_max.
  std::int64_t max_repetitions = 10'000'000;

  void validate() const;
};

struct ExecutionOutcome {
  Status status = Status::CompileError;
  std::optional<std::size_t> failed_test_index;
  std::optional<RuntimeStats> stats;
  std::string diagnostics;
};

/// Correctness-only verdict (no timing). `status` is never Pass with stats here.
struct TestVerdict {
  Status status = Status::CompileError;
  std::optional<std::size_t> failed_test_index;
  std::string diagnostics;
};

class RunnerSpawnError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

class TimingUnstable : public Error {
 public:
  TimingUnstable(const std::string& what, RuntimeStats stats) : Error(what), stats_(std::move(stats)) {}
  const RuntimeStats& stats() const { return stats_; }

 private:
  RuntimeStats stats_;
};

/// A timed batch was killed at the hard timeout.
class MeasurementTimeout : public Error {
 public:
  using Error::Error;
};

/// measure_runtime was asked to time code that has not passed its tests.
class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

/// Repetition count under the adopted reading of the adaptive policy:
/// call `pilot` until at least `n_min` executions are done and the accumulated
/// time has reached `t_max`; the result is max(n_min, executions needed to
/// reach t_max). `max_repetitions` bounds the loop for zero-duration pilots.
std::int64_t compute_repetitions(std::int64_t n_min, Nanoseconds t_max, const std::function<Nanoseconds()>& pilot,
                                 std::int64_t max_repetitions = 10'000'000);

/// Hoists top-level `import` / `from ... import` statements (including
/// parenthesised and backslash-continued forms) out of `code`.
struct SetupSplit {
  std::string setup;
  std::string payload;
};
SetupSplit split_setup(std::string_view code);

/// Correctness run only: spawns the driver in "test" mode.
TestVerdict check_tests(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                        const TimingConfig& timing);

/// Adaptive repeated measurement through the driver's "time" mode. Holds the
/// exclusive timing slot for its whole duration.
RuntimeStats measure_runtime(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                             const TimingConfig& timing);

/// check_tests followed, on Pass, by measure_runtime.
ExecutionOutcome run_tests(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                           const TimingConfig& timing);

/// Runtime-measurement capability handed to reference selection and the
/// rewarder. The subprocess implementation below is the production one; tests
/// substitute scripted fakes.
class Harness {
 public:
  virtual ~Harness() = default;
  virtual TestVerdict check(std::string_view code, std::span<const TestCase> tests) = 0;
  virtual RuntimeStats measure(std::string_view code, std::span<const TestCase> tests) = 0;

  ExecutionOutcome run(std::string_view code, std::span<const TestCase> tests);
};

class SubprocessHarness final : public Harness {
 public:
  SubprocessHarness(RunnerConfig runner, TimingConfig timing);

  TestVerdict check(std::string_view code, std::span<const TestCase> tests) override;
  /// Throws PreconditionViolation unless check() returned Pass for the same inputs.
  RuntimeStats measure(std::string_view code, std::span<const TestCase> tests) override;

  const RunnerConfig& runner() const { return runner_; }
  const TimingConfig& timing() const { return timing_; }

 private:
  RunnerConfig runner_;
  TimingConfig timing_;
  std::mutex mu_;
  std::set<std::size_t> verified_;
};

/// Machine-wide exclusive timing slot: an in-process recursive guard plus an
/// flock on a shared lock file, so nested acquisitions on one thread are free
/// and timed jobs from different processes never overlap.
class TimingSlot {
 public:
  TimingSlot();
  ~TimingSlot();
  TimingSlot(const TimingSlot&) = delete;
  TimingSlot& operator=(const TimingSlot&) = delete;

  static std::string lock_path();
  /// Depth of slot ownership on the calling thread (0 when not held).
  static int held_depth();
};

}  // namespace acecode
