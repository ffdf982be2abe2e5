#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acecode/status.hpp"

namespace acecode {

/// Outcome of one task for one model. Times are in seconds.
struct TaskResult {
  std::string task_id;
  Status status = Status::CompileError;
  std::optional<double> total_time;  // t_i: accumulated over all repetitions
  std::optional<std::int64_t> reps;  // n_i

  /// t_i / n_i; throws Error when the result carries no timing.
  double mean_time() const;

  static TaskResult passed(std::string id, double total_time, std::int64_t reps);
  static TaskResult failed(std::string id, Status status);
};

struct ResultPair {
  TaskResult tuned;
  TaskResult counterpart;
};

struct MetricsReport {
  double pass_at_1 = 0.0;
  std::optional<double> ecc;
  std::optional<double> get;
  std::optional<double> aet;
  std::optional<double> naet;
  std::size_t n_tasks = 0;
  std::size_t n_common_correct = 0;
};

class EmptyResults : public Error {
 public:
  using Error::Error;
};

class EmptyPairs : public Error {
 public:
  using Error::Error;
};

class NonPositiveTime : public Error {
 public:
  using Error::Error;
};

/// Fraction of results whose status is Pass.
double pass_at_1(std::span<const TaskResult> results);

/// Pairs (a, b) for task ids where both sides passed, in the order of `a`.
std::vector<ResultPair> common_correct_filter(std::span<const TaskResult> a, std::span<const TaskResult> b);

/// Fraction of pairs where the counterpart is strictly slower than the tuned
/// result. Compares per-task mean times; accumulated times all land just past
/// t_max under adaptive repetition and stop discriminating.
double ecc(std::span<const ResultPair> pairs);

/// Geometric mean of per-task mean times, evaluated in log space.
double get(std::span<const TaskResult> results);

struct AetNaet {
  double aet = 0.0;
  double naet = 0.0;
};
/// AET: arithmetic mean of tuned per-task means. NAET: arithmetic mean of the
/// per-task ratios tuned mean / counterpart mean.
AetNaet aet_naet(std::span<const ResultPair> pairs);

/// Full report. Efficiency metrics are filled only when a baseline is given
/// and at least one task is correct on both sides; they are computed over the
/// common-correct tasks with the baseline as counterpart.
MetricsReport build_report(std::span<const TaskResult> tuned, std::optional<std::span<const TaskResult>> baseline);

}  // namespace acecode
