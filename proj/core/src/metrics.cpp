#include "acecode/metrics.hpp"

#include <cmath>
#include <map>

namespace acecode {
namespace {

void require_passed_timing(const TaskResult& r) {
  if (r.status != Status::Pass) throw Error("task '" + r.task_id + "' did not pass");
  if (!r.total_time || !r.reps) throw Error("task '" + r.task_id + "' has no timing");
  if (!(*r.total_time > 0.0) || *r.reps < 1) throw NonPositiveTime("task '" + r.task_id + "' has non-positive time");
}

}  // namespace

double TaskResult::mean_time() const {
  if (!total_time || !reps) throw Error("task '" + task_id + "' has no timing");
  return *total_time / static_cast<double>(*reps);
}

TaskResult TaskResult::passed(std::string id, double total_time, std::int64_t reps) {
  return TaskResult{std::move(id), Status::Pass, total_time, reps};
}

TaskResult TaskResult::failed(std::string id, Status status) {
  return TaskResult{std::move(id), status, std::nullopt, std::nullopt};
}

double pass_at_1(std::span<const TaskResult> results) {
  if (results.empty()) throw EmptyResults("pass@1 of an empty result set");
  std::size_t passed = 0;
  for (const auto& r : results) passed += r.status == Status::Pass ? 1 : 0;
  return static_cast<double>(passed) / static_cast<double>(results.size());
}

std::vector<ResultPair> common_correct_filter(std::span<const TaskResult> a, std::span<const TaskResult> b) {
  std::map<std::string_view, const TaskResult*> b_pass;
  for (const auto& r : b) {
    if (r.status == Status::Pass) b_pass.emplace(r.task_id, &r);
  }
  std::vector<ResultPair> out;
  for (const auto& r : a) {
    if (r.status != Status::Pass) continue;
    if (auto it = b_pass.find(r.task_id); it != b_pass.end()) out.push_back(ResultPair{r, *it->second});
  }
  return out;
}

double ecc(std::span<const ResultPair> pairs) {
  if (pairs.empty()) throw EmptyPairs("ECC over no common-correct tasks");
  std::size_t faster = 0;
  for (const auto& p : pairs) {
    require_passed_timing(p.tuned);
    require_passed_timing(p.counterpart);
    if (p.counterpart.mean_time() > p.tuned.mean_time()) ++faster;
  }
  return static_cast<double>(faster) / static_cast<double>(pairs.size());
}

double get(std::span<const TaskResult> results) {
  if (results.empty()) throw EmptyResults("GET of an empty result set");
  double log_sum = 0.0;
  for (const auto& r : results) {
    require_passed_timing(r);
    log_sum += std::log(r.mean_time());
  }
  return std::exp(log_sum / static_cast<double>(results.size()));
}

AetNaet aet_naet(std::span<const ResultPair> pairs) {
  if (pairs.empty()) throw EmptyPairs("AET/NAET over no pairs");
  double time_sum = 0.0;
  double ratio_sum = 0.0;
  for (const auto& p : pairs) {
    require_passed_timing(p.tuned);
    require_passed_timing(p.counterpart);
    time_sum += p.tuned.mean_time();
    ratio_sum += p.tuned.mean_time() / p.counterpart.mean_time();
  }
  const auto n = static_cast<double>(pairs.size());
  return AetNaet{time_sum / n, ratio_sum / n};
}

MetricsReport build_report(std::span<const TaskResult> tuned, std::optional<std::span<const TaskResult>> baseline) {
  MetricsReport report;
  report.pass_at_1 = pass_at_1(tuned);
  report.n_tasks = tuned.size();
  if (!baseline) return report;

  const auto pairs = common_correct_filter(tuned, *baseline);
  report.n_common_correct = pairs.size();
  if (pairs.empty()) return report;

  std::vector<TaskResult> tuned_common;
  tuned_common.reserve(pairs.size());
  for (const auto& p : pairs) tuned_common.push_back(p.tuned);
  report.ecc = ecc(pairs);
  report.get = get(tuned_common);
  const auto an = aet_naet(pairs);
  report.aet = an.aet;
  report.naet = an.naet;
  return report;
}

}  // namespace acecode
