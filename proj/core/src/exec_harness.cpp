#include "acecode/exec_harness.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "acecode/subprocess.hpp"

namespace acecode {
namespace {

using json = nlohmann::json;

// Cap on repetitions requested from the driver in one job; bounds reply size.
constexpr std::int64_t kMaxBatch = 1'000'000;

std::vector<std::string> runner_argv(const RunnerConfig& runner, const std::filesystem::path& job_path) {
  auto argv = split_command_line(runner.command_template);
  for (auto& token : argv) {
    const auto pos = token.find(RunnerConfig::kJobPlaceholder);
    if (pos != std::string::npos) token.replace(pos, RunnerConfig::kJobPlaceholder.size(), job_path.string());
  }
  if (argv.empty()) throw RunnerSpawnError("runner command is empty");
  // The child runs in a fresh directory, so relative program paths are
  // anchored to the caller's working directory first.
  if (argv[0].find('/') != std::string::npos && std::filesystem::path(argv[0]).is_relative()) {
    argv[0] = std::filesystem::absolute(argv[0]).string();
  }
  return argv;
}

std::vector<std::string> filtered_env(const RunnerConfig& runner) {
  std::vector<std::string> env;
  for (const auto& name : runner.env_allowlist) {
    if (const char* value = std::getenv(name.c_str())) env.push_back(name + "=" + value);
  }
  return env;
}

struct DriverReply {
  std::string status;
  std::optional<std::size_t> failed_index;
  std::vector<Nanoseconds> times;
  std::string stderr_text;
};

std::string first_lines(const std::string& text, std::size_t limit = 2000) {
  return text.size() <= limit ? text : text.substr(0, limit) + "...";
}

/// Spawns one driver job. Returns nullopt when the hard timeout fired.
std::optional<DriverReply> run_job(const json& job, const RunnerConfig& runner, const TimingConfig& timing) {
  TempDir workdir("acecode-job-");
  const auto job_path = workdir.path() / "job.json";
  {
    std::ofstream out(job_path, std::ios::binary);
    out << job.dump();
    if (!out) throw RunnerSpawnError("cannot write job spec to " + job_path.string());
  }

  ProcessResult proc;
  try {
    proc = run_process(runner_argv(runner, job_path), workdir.path(), filtered_env(runner),
                       std::chrono::duration_cast<Milliseconds>(timing.hard_timeout));
  } catch (const SpawnError& e) {
    throw RunnerSpawnError(e.what());
  }
  if (proc.timed_out) return std::nullopt;
  if (proc.exit_code != 0) {
    throw ProtocolError("driver exited with code " + std::to_string(proc.exit_code) + ": " +
                        first_lines(proc.err));
  }

  std::string line;
  std::istringstream lines(proc.out);
  std::string candidate;
  int non_empty = 0;
  while (std::getline(lines, candidate)) {
    if (candidate.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++non_empty;
    line = candidate;
  }
  if (non_empty != 1) {
    throw ProtocolError("driver must print exactly one JSON line, got " + std::to_string(non_empty) + ": " +
                        first_lines(proc.out));
  }

  DriverReply reply;
  reply.stderr_text = proc.err;
  try {
    const auto doc = json::parse(line);
    if (!doc.is_object()) throw ProtocolError("driver reply is not a JSON object");
    reply.status = doc.at("status").get<std::string>();
    if (reply.status != "pass" && reply.status != "test_failure" && reply.status != "compile_error") {
      throw ProtocolError("unknown driver status '" + reply.status + "'");
    }
    if (auto it = doc.find("failed_index"); it != doc.end() && !it->is_null()) {
      const auto idx = it->get<std::int64_t>();
      if (idx < 0) throw ProtocolError("negative failed_index");
      reply.failed_index = static_cast<std::size_t>(idx);
    }
    if (auto it = doc.find("times_ns"); it != doc.end() && !it->is_null()) {
      for (const auto& t : *it) {
        const auto ns = t.get<std::int64_t>();
        if (ns < 0) throw ProtocolError("negative entry in times_ns");
        reply.times.emplace_back(ns);
      }
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed driver reply: ") + e.what() + ": " + first_lines(line));
  }
  if (reply.status == "test_failure" && !reply.failed_index) {
    throw ProtocolError("test_failure reply without failed_index");
  }
  return reply;
}

json tests_json(std::span<const TestCase> tests) {
  json arr = json::array();
  for (const auto& t : tests) arr.push_back(t.code);
  return arr;
}

bool is_import_start(std::string_view line) {
  return line.starts_with("import ") || (line.starts_with("from ") && line.find(" import ") != std::string_view::npos);
}

std::size_t hash_inputs(std::string_view code, std::span<const TestCase> tests) {
  std::string key(code);
  for (const auto& t : tests) {
    key.push_back('\x1f');
    key += t.code;
  }
  return std::hash<std::string>{}(key);
}

}  // namespace

void RunnerConfig::validate() const {
  std::size_t count = 0;
  for (std::size_t pos = command_template.find(kJobPlaceholder); pos != std::string::npos;
       pos = command_template.find(kJobPlaceholder, pos + kJobPlaceholder.size())) {
    ++count;
  }
  if (count != 1) {
    throw Error("runner command template must contain exactly one " + std::string(kJobPlaceholder) +
                " placeholder: '" + command_template + "'");
  }
}

void TimingConfig::validate() const {
  if (n_min < 1) throw Error("n_min must be >= 1");
  if (t_max <= Nanoseconds::zero()) throw Error("t_max must be positive");
  if (hard_timeout <= t_max) throw Error("hard_timeout must exceed t_max");
  if (!(unstable_ratio >= 1.0)) throw Error("unstable_ratio must be >= 1");
  if (max_repetitions < n_min) throw Error("max_repetitions must be >= n_min");
}

std::int64_t compute_repetitions(std::int64_t n_min, Nanoseconds t_max, const std::function<Nanoseconds()>& pilot,
                                 std::int64_t max_repetitions) {
  if (n_min < 1) throw Error("n_min must be >= 1");
  if (t_max <= Nanoseconds::zero()) throw Error("t_max must be positive");
  std::int64_t count = 0;
  Nanoseconds accumulated{0};
  while ((count < n_min || accumulated < t_max) && count < max_repetitions) {
    accumulated += pilot();
    ++count;
  }
  return count;
}

SetupSplit split_setup(std::string_view code) {
  SetupSplit out;
  std::istringstream in{std::string(code)};
  std::string line;
  bool continuing = false;
  int depth = 0;
  while (std::getline(in, line)) {
    const bool take = continuing || is_import_start(line);
    if (!take) {
      out.payload += line;
      out.payload.push_back('\n');
      continue;
    }
    out.setup += line;
    out.setup.push_back('\n');
    for (const char c : line) {
      if (c == '(') ++depth;
      if (c == ')') --depth;
    }
    const bool backslash = !line.empty() && line.back() == '\\';
    continuing = depth > 0 || backslash;
    if (!continuing) depth = 0;
  }
  return out;
}

TestVerdict check_tests(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                        const TimingConfig& timing) {
  runner.validate();
  json job{{"mode", "test"}, {"code", std::string(code)}, {"tests", tests_json(tests)}, {"setup", ""}, {"repeat", 1}};
  const auto reply = run_job(job, runner, timing);
  TestVerdict verdict;
  if (!reply) {
    verdict.status = Status::Timeout;
    verdict.diagnostics = "killed after hard timeout of " +
                          std::to_string(std::chrono::duration_cast<Milliseconds>(timing.hard_timeout).count()) +
                          " ms";
    return verdict;
  }
  verdict.diagnostics = reply->stderr_text;
  if (reply->status == "pass") {
    verdict.status = Status::Pass;
  } else if (reply->status == "compile_error") {
    verdict.status = Status::CompileError;
  } else {
    verdict.status = Status::TestFailure;
    verdict.failed_test_index = reply->failed_index;
  }
  return verdict;
}

RuntimeStats measure_runtime(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                             const TimingConfig& timing) {
  runner.validate();
  timing.validate();
  TimingSlot slot;

  const auto split = split_setup(code);
  std::deque<Nanoseconds> buffered;
  std::vector<Nanoseconds> collected;
  Nanoseconds accumulated{0};

  auto fetch_batch = [&] {
    const auto done = static_cast<std::int64_t>(collected.size());
    std::int64_t want = 1;
    if (done < timing.n_min) {
      want = timing.n_min - done;
    } else if (done > 0 && accumulated.count() > 0) {
      const double mean = static_cast<double>(accumulated.count()) / static_cast<double>(done);
      const double left = static_cast<double>((timing.t_max - accumulated).count());
      want = static_cast<std::int64_t>(std::min(left / mean + 1.0, static_cast<double>(kMaxBatch)));
    } else {
      want = std::max<std::int64_t>(done, 1) * 2;
    }
    want = std::clamp<std::int64_t>(want, 1, std::min(kMaxBatch, timing.max_repetitions - done));
    json job{{"mode", "time"},
             {"code", split.payload},
             {"tests", tests_json(tests)},
             {"setup", split.setup},
             {"repeat", want}};
    const auto reply = run_job(job, runner, timing);
    if (!reply) throw MeasurementTimeout("timed batch exceeded the hard timeout");
    if (reply->status != "pass") {
      throw PreconditionViolation("driver reported '" + reply->status + "' in timing mode; code must pass first");
    }
    if (static_cast<std::int64_t>(reply->times.size()) != want) {
      throw ProtocolError("times_ns has " + std::to_string(reply->times.size()) + " entries, expected " +
                          std::to_string(want));
    }
    buffered.insert(buffered.end(), reply->times.begin(), reply->times.end());
  };

  const auto n = compute_repetitions(
      timing.n_min, timing.t_max,
      [&] {
        if (buffered.empty()) fetch_batch();
        const auto t = buffered.front();
        buffered.pop_front();
        collected.push_back(t);
        accumulated += t;
        return t;
      },
      timing.max_repetitions);

  auto stats = RuntimeStats::from_repetitions(std::move(collected));
  if (stats.n != n) throw Error("internal: repetition bookkeeping mismatch");
  stats.unstable = stats.spread_ratio() > timing.unstable_ratio;
  if (stats.unstable && timing.fail_on_unstable) {
    std::ostringstream msg;
    msg << "per-repetition spread " << stats.spread_ratio() << " exceeds " << timing.unstable_ratio;
    throw TimingUnstable(msg.str(), stats);
  }
  return stats;
}

ExecutionOutcome run_tests(std::string_view code, std::span<const TestCase> tests, const RunnerConfig& runner,
                           const TimingConfig& timing) {
  SubprocessHarness harness(runner, timing);
  return harness.run(code, tests);
}

ExecutionOutcome Harness::run(std::string_view code, std::span<const TestCase> tests) {
  auto verdict = check(code, tests);
  ExecutionOutcome outcome;
  outcome.status = verdict.status;
  outcome.failed_test_index = verdict.failed_test_index;
  outcome.diagnostics = std::move(verdict.diagnostics);
  if (outcome.status == Status::Pass) {
    try {
      outcome.stats = measure(code, tests);
    } catch (const MeasurementTimeout& e) {
      outcome.status = Status::Timeout;
      outcome.diagnostics = e.what();
    }
  }
  return outcome;
}

SubprocessHarness::SubprocessHarness(RunnerConfig runner, TimingConfig timing)
    : runner_(std::move(runner)), timing_(timing) {
  runner_.validate();
  timing_.validate();
}

TestVerdict SubprocessHarness::check(std::string_view code, std::span<const TestCase> tests) {
  auto verdict = check_tests(code, tests, runner_, timing_);
  if (verdict.status == Status::Pass) {
    std::lock_guard lock(mu_);
    verified_.insert(hash_inputs(code, tests));
  }
  return verdict;
}

RuntimeStats SubprocessHarness::measure(std::string_view code, std::span<const TestCase> tests) {
  {
    std::lock_guard lock(mu_);
    if (!verified_.contains(hash_inputs(code, tests))) {
      throw PreconditionViolation("measure called before a passing correctness run");
    }
  }
  return measure_runtime(code, tests, runner_, timing_);
}

// ---------------------------------------------------------------------------
// TimingSlot

namespace {
std::mutex g_slot_mutex;
int g_slot_fd = -1;
thread_local int t_slot_depth = 0;
}  // namespace

std::string TimingSlot::lock_path() {
  if (const char* p = std::getenv("ACE_TIMING_LOCK")) return p;
  return (std::filesystem::temp_directory_path() / "acecode-timing.lock").string();
}

int TimingSlot::held_depth() { return t_slot_depth; }

TimingSlot::TimingSlot() {
  if (t_slot_depth++ > 0) return;
  g_slot_mutex.lock();
  g_slot_fd = ::open(lock_path().c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0666);
  if (g_slot_fd >= 0) {
    while (::flock(g_slot_fd, LOCK_EX) != 0 && errno == EINTR) {
    }
  }
}

TimingSlot::~TimingSlot() {
  if (--t_slot_depth > 0) return;
  if (g_slot_fd >= 0) {
    ::flock(g_slot_fd, LOCK_UN);
    ::close(g_slot_fd);
    g_slot_fd = -1;
  }
  g_slot_mutex.unlock();
}

// ---------------------------------------------------------------------------
// RuntimeStats

RuntimeStats RuntimeStats::from_repetitions(std::vector<Nanoseconds> per_rep) {
  if (per_rep.empty()) throw Error("RuntimeStats needs at least one repetition");
  RuntimeStats stats;
  stats.n = static_cast<std::int64_t>(per_rep.size());
  for (const auto t : per_rep) stats.total += t;
  stats.mean = std::chrono::duration<double, std::nano>(static_cast<double>(stats.total.count()) /
                                                        static_cast<double>(stats.n));
  stats.per_rep = std::move(per_rep);
  return stats;
}

double RuntimeStats::spread_ratio() const {
  if (per_rep.empty()) return 1.0;
  const auto [lo, hi] = std::minmax_element(per_rep.begin(), per_rep.end());
  if (lo->count() == 0) return hi->count() == 0 ? 1.0 : std::numeric_limits<double>::infinity();
  return static_cast<double>(hi->count()) / static_cast<double>(lo->count());
}

}  // namespace acecode
