#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acecode/exec_harness.hpp"
#include "acecode/status.hpp"
#include "acecode/task_types.hpp"

namespace acecode {

/// Most references a task may carry.
inline constexpr std::size_t kMaxReferences = 15;

enum class Split { Train, Test, All };

struct Corpus {
  std::vector<CodingTask> tasks;
  Split split = Split::All;

  const CodingTask* find(std::string_view id) const;
  bool operator==(const Corpus&) const = default;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line, std::string field, const std::string& detail);
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class DuplicateTaskId : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  using Error::Error;
};

class NoValidReference : public Error {
 public:
  using Error::Error;
};

class MissingExamplePair : public Error {
 public:
  using Error::Error;
};

/// Parses one newline-delimited JSON record. `line` is used for error reports.
CodingTask parse_task_record(std::string_view text, std::size_t line);
std::string to_record(const CodingTask& task);

/// Reads a corpus file and applies the seeded 8:2 split. Train receives
/// floor(0.8 * N) tasks after a seeded Fisher-Yates shuffle; Test the rest.
Corpus load_corpus(const std::filesystem::path& path, Split split = Split::All, std::uint64_t seed = 0);
Corpus parse_corpus(std::string_view text, Split split = Split::All, std::uint64_t seed = 0);
void write_corpus(const std::filesystem::path& path, const Corpus& corpus);

/// Task indices (into the full corpus) of the Train or Test partition.
std::vector<std::size_t> split_indices(std::size_t n, Split split, std::uint64_t seed);

struct ReferenceChoice {
  std::size_t index = 0;
  Solution solution;  // `measured` populated
};

/// Verifies every reference, measures those that pass, and keeps the fastest
/// by mean runtime (lowest index on ties). Failing references are skipped.
ReferenceChoice select_reference(const CodingTask& task, Harness& harness);

/// One-shot code-generation prompt for `task`. Byte-stable.
std::string render_prompt(const CodingTask& task);

}  // namespace acecode
