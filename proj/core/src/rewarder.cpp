#include "acecode/rewarder.hpp"

#include <sys/utsname.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace acecode {

void RewardConfig::validate() const {
  if (!(k > 0.0) || !std::isfinite(k)) throw Error("k must be positive");
  if (!(r_compile_error <= r_test_failure)) throw Error("r_compile_error must not exceed r_test_failure");
  if (!(r_test_failure < 0.0)) throw Error("r_test_failure must be negative");
  if (!(r_correct_base > 0.0)) throw Error("r_correct_base must be positive");
  if (!(r_efficiency_cap > 0.0)) throw Error("r_efficiency_cap must be positive");
  timing.validate();
}

RewardSignal reward_from_outcome(Status status, std::optional<FloatNanos> e_reference,
                                 std::optional<FloatNanos> e_candidate, const RewardConfig& cfg) {
  RewardSignal signal;
  signal.status = status;
  switch (status) {
    case Status::CompileError:
      signal.value = cfg.r_compile_error;
      return signal;
    case Status::TestFailure:
    case Status::Timeout:
      signal.value = cfg.r_test_failure;
      return signal;
    case Status::Pass:
      break;
  }
  if (!e_reference || !e_candidate) throw MissingRuntime("a passing outcome needs both runtimes");
  if (!(e_reference->count() > 0.0) || !(e_candidate->count() > 0.0)) {
    throw NonPositiveRuntime("runtimes must be positive");
  }
  const double ratio = e_reference->count() / e_candidate->count();
  const double capped = std::min(std::pow(ratio, cfg.k), 1.0);
  signal.value = cfg.r_correct_base + cfg.r_efficiency_cap * capped;
  signal.e_reference = e_reference;
  signal.e_candidate = e_candidate;
  signal.ratio_capped = capped;
  return signal;
}

std::string host_fingerprint() {
  std::string fp;
  utsname info{};
  if (::uname(&info) == 0) {
    fp = std::string(info.sysname) + " " + info.release + " " + info.machine;
  }
  std::string id;
  for (const char* path : {"/etc/machine-id", "/var/lib/dbus/machine-id"}) {
    std::ifstream in(path);
    if (in && std::getline(in, id) && !id.empty()) break;
    id.clear();
  }
  if (id.empty()) {
    char name[256] = {};
    if (::gethostname(name, sizeof(name) - 1) == 0) id = name;
  }
  return fp + " " + id;
}

ReferenceCache::ReferenceCache(std::string host, bool enabled) : host_(std::move(host)), enabled_(enabled) {}

void ReferenceCache::seed_from(const Corpus& corpus) {
  if (!enabled_) return;
  std::lock_guard lock(mu_);
  for (const auto& task : corpus.tasks) {
    if (task.cached_reference && task.cached_reference->host == host_) {
      entries_.insert_or_assign(task.id, task.cached_reference->stats);
    }
  }
}

std::optional<RuntimeStats> ReferenceCache::lookup(const std::string& task_id) const {
  if (!enabled_) return std::nullopt;
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(task_id); it != entries_.end()) return it->second;
  return std::nullopt;
}

void ReferenceCache::store(const std::string& task_id, const RuntimeStats& stats) {
  if (!enabled_) return;
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(task_id, stats);
}

std::size_t ReferenceCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

RewardSignal reward_pair(const CodingTask& task, const Solution& candidate, Harness& harness, const RewardConfig& cfg,
                         ReferenceCache* reference_cache) {
  return reward_checked(task, candidate, harness.check(candidate.code, task.tests), harness, cfg, reference_cache);
}

RewardSignal reward_checked(const CodingTask& task, const Solution& candidate, const TestVerdict& verdict,
                            Harness& harness, const RewardConfig& cfg, ReferenceCache* reference_cache) {
  if (verdict.status != Status::Pass) return reward_from_outcome(verdict.status, std::nullopt, std::nullopt, cfg);

  RuntimeStats candidate_stats;
  RuntimeStats reference_stats;
  {
    TimingSlot slot;
    try {
      candidate_stats = harness.measure(candidate.code, task.tests);
    } catch (const MeasurementTimeout&) {
      return reward_from_outcome(Status::Timeout, std::nullopt, std::nullopt, cfg);
    }

    std::optional<RuntimeStats> cached;
    if (reference_cache != nullptr) cached = reference_cache->lookup(task.id);
    if (cached) {
      reference_stats = *std::move(cached);
    } else if (task.cached_reference) {
      const auto& ref = task.references.at(task.cached_reference->index);
      const auto ref_verdict = harness.check(ref.code, task.tests);
      if (ref_verdict.status != Status::Pass) {
        throw NoValidReference("selected reference of task '" + task.id + "' no longer passes its tests");
      }
      reference_stats = harness.measure(ref.code, task.tests);
    } else {
      reference_stats = *select_reference(task, harness).solution.measured;
    }
    if (reference_cache != nullptr) reference_cache->store(task.id, reference_stats);
  }
  return reward_from_outcome(Status::Pass, reference_stats.mean, candidate_stats.mean, cfg);
}

}  // namespace acecode
