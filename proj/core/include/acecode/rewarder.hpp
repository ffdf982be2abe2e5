#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "acecode/exec_harness.hpp"
#include "acecode/status.hpp"
#include "acecode/task_corpus.hpp"

namespace acecode {

using FloatNanos = std::chrono::duration<double, std::nano>;

struct RewardConfig {
  double k = 1.0;
  double r_compile_error = -0.5;
  double r_test_failure = -0.3;
  double r_correct_base = 0.5;
  double r_efficiency_cap = 0.5;
  TimingConfig timing;

  /// r_compile_error <= r_test_failure < 0 < r_correct_base, cap > 0, k > 0.
  void validate() const;
};

struct RewardSignal {
  double value = 0.0;
  Status status = Status::CompileError;
  std::optional<FloatNanos> e_reference;
  std::optional<FloatNanos> e_candidate;
  /// min((e_reference / e_candidate)^k, 1); present iff status is Pass.
  std::optional<double> ratio_capped;

  bool operator==(const RewardSignal&) const = default;
};

class MissingRuntime : public Error {
 public:
  using Error::Error;
};

class NonPositiveRuntime : public Error {
 public:
  using Error::Error;
};

/// The correctness/efficiency step function.
///   CompileError          -> r_compile_error
///   TestFailure, Timeout  -> r_test_failure
///   Pass                  -> r_correct_base + r_efficiency_cap * min((E_ref / E_cand)^k, 1)
RewardSignal reward_from_outcome(Status status, std::optional<FloatNanos> e_reference,
                                 std::optional<FloatNanos> e_candidate, const RewardConfig& cfg);

/// OS, kernel and machine identity; cached reference timings are only reused
/// on a host with the same fingerprint.
std::string host_fingerprint();

/// Reference runtimes keyed by task id, valid for one host.
class ReferenceCache {
 public:
  explicit ReferenceCache(std::string host = host_fingerprint(), bool enabled = true);

  /// Imports cached selections from a corpus whose host matches ours.
  void seed_from(const Corpus& corpus);

  bool enabled() const { return enabled_; }
  const std::string& host() const { return host_; }

  std::optional<RuntimeStats> lookup(const std::string& task_id) const;
  void store(const std::string& task_id, const RuntimeStats& stats);
  std::size_t size() const;

 private:
  std::string host_;
  bool enabled_;
  mutable std::mutex mu_;
  std::map<std::string, RuntimeStats, std::less<>> entries_;
};

/// Runs the candidate's tests and, when they pass, measures candidate and
/// reference back to back inside one timing slot (the reference measurement
/// is skipped on a cache hit). Uses the task's selected reference when one is
/// recorded, otherwise selects the fastest reference first.
RewardSignal reward_pair(const CodingTask& task, const Solution& candidate, Harness& harness, const RewardConfig& cfg,
                         ReferenceCache* reference_cache);

/// reward_pair after its correctness run; `verdict` must come from
/// harness.check on the candidate.
RewardSignal reward_checked(const CodingTask& task, const Solution& candidate, const TestVerdict& verdict,
                            Harness& harness, const RewardConfig& cfg, ReferenceCache* reference_cache);

}  // namespace acecode
