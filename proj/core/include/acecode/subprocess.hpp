#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "acecode/status.hpp"

namespace acecode {

/// The program could not be started (missing, not executable, fork failure).
class SpawnError : public Error {
 public:
  using Error::Error;
};

struct ProcessResult {
  int exit_code = -1;  // -1 when terminated by a signal
  bool timed_out = false;
  std::string out;
  std::string err;
  std::chrono::nanoseconds wall{0};
};

/// Runs argv[0] (PATH lookup when it has no slash) in `cwd` with exactly
/// `env` as its environment ("NAME=value" entries). The child leads its own
/// process group; on timeout the whole group is SIGKILLed and reaped before
/// returning.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::vector<std::string>& env, std::chrono::milliseconds timeout,
                          const std::string& stdin_data = {});

/// Splits a command line on whitespace, honouring single and double quotes.
std::vector<std::string> split_command_line(std::string_view command);

/// A directory created with mkdtemp and removed recursively on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "acecode-");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  TempDir(TempDir&& other) noexcept;
  TempDir& operator=(TempDir&& other) noexcept;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace acecode
