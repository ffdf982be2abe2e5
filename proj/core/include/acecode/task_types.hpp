#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace acecode {

/// Per-repetition timings of one measured solution.
struct RuntimeStats {
  std::int64_t n = 0;
  std::chrono::nanoseconds total{0};
  std::chrono::duration<double, std::nano> mean{0};
  std::vector<std::chrono::nanoseconds> per_rep;
  /// Set when max/min per-repetition ratio exceeded the configured threshold.
  bool unstable = false;

  /// Builds stats from raw repetitions; throws Error when `per_rep` is empty.
  static RuntimeStats from_repetitions(std::vector<std::chrono::nanoseconds> per_rep);

  double mean_seconds() const { return mean.count() * 1e-9; }
  double total_seconds() const { return static_cast<double>(total.count()) * 1e-9; }
  /// max/min over per_rep; +inf when the minimum is zero and the maximum is not.
  double spread_ratio() const;

  bool operator==(const RuntimeStats&) const = default;
};

struct TestCase {
  std::string code;
  bool operator==(const TestCase&) const = default;
};

struct Solution {
  enum class Origin { Reference, Generated };

  std::string code;
  Origin origin = Origin::Reference;
  std::optional<RuntimeStats> measured;

  bool operator==(const Solution&) const = default;
};

/// Reference chosen by fastest-reference selection, with the measurement it
/// won on and the host it was taken on.
struct CachedReference {
  std::size_t index = 0;
  RuntimeStats stats;
  std::string host;

  bool operator==(const CachedReference&) const = default;
};

struct ExamplePair {
  std::string description;
  std::string code;
  bool operator==(const ExamplePair&) const = default;
};

struct CodingTask {
  std::string id;
  std::string description;
  std::vector<TestCase> tests;
  std::vector<Solution> references;
  std::optional<ExamplePair> example_pair;
  std::optional<CachedReference> cached_reference;
  /// Recorded by reference selection when no reference survived validation.
  std::optional<std::string> selection_error;

  bool operator==(const CodingTask&) const = default;
};

}  // namespace acecode
