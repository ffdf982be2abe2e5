#include "acecode/subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <system_error>

namespace acecode {
namespace {

using Clock = std::chrono::steady_clock;

struct Fd {
  int fd = -1;
  Fd() = default;
  explicit Fd(int f) : fd(f) {}
  ~Fd() { reset(); }
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

void make_pipe(Fd& read_end, Fd& write_end) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) throw SpawnError(std::string("pipe2: ") + std::strerror(errno));
  read_end.fd = fds[0];
  write_end.fd = fds[1];
}

[[noreturn]] void child_fail(int report_fd, int err) {
  // Best effort; the parent treats a short read as success.
  [[maybe_unused]] auto n = ::write(report_fd, &err, sizeof(err));
  ::_exit(127);
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& cwd,
                          const std::vector<std::string>& env, std::chrono::milliseconds timeout,
                          const std::string& stdin_data) {
  if (argv.empty()) throw SpawnError("empty command");

  std::vector<char*> c_argv;
  for (const auto& a : argv) c_argv.push_back(const_cast<char*>(a.c_str()));
  c_argv.push_back(nullptr);
  std::vector<char*> c_env;
  for (const auto& e : env) c_env.push_back(const_cast<char*>(e.c_str()));
  c_env.push_back(nullptr);

  Fd in_r, in_w, out_r, out_w, err_r, err_w, rep_r, rep_w;
  make_pipe(in_r, in_w);
  make_pipe(out_r, out_w);
  make_pipe(err_r, err_w);
  make_pipe(rep_r, rep_w);

  const auto started = Clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw SpawnError(std::string("fork: ") + std::strerror(errno));

  if (pid == 0) {
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    if (::dup2(in_r.fd, STDIN_FILENO) < 0 || ::dup2(out_w.fd, STDOUT_FILENO) < 0 ||
        ::dup2(err_w.fd, STDERR_FILENO) < 0) {
      child_fail(rep_w.fd, errno);
    }
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) child_fail(rep_w.fd, errno);
    // execvpe is a GNU extension; assigning environ keeps PATH lookup honest.
    environ = c_env.data();
    ::execvp(c_argv[0], c_argv.data());
    child_fail(rep_w.fd, errno);
  }

  ::setpgid(pid, pid);
  in_r.reset();
  out_w.reset();
  err_w.reset();
  rep_w.reset();

  int child_errno = 0;
  const ssize_t got = ::read(rep_r.fd, &child_errno, sizeof(child_errno));
  if (got == static_cast<ssize_t>(sizeof(child_errno))) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    throw SpawnError("cannot execute '" + argv[0] + "': " + std::strerror(child_errno));
  }

  if (!stdin_data.empty()) {
    // Inputs are small job payloads; a blocked write here would mean the child
    // stopped reading, which the timeout below still bounds.
    ::signal(SIGPIPE, SIG_IGN);
    std::size_t off = 0;
    while (off < stdin_data.size()) {
      const ssize_t n = ::write(in_w.fd, stdin_data.data() + off, stdin_data.size() - off);
      if (n <= 0) break;
      off += static_cast<std::size_t>(n);
    }
  }
  in_w.reset();

  ProcessResult result;
  const auto deadline = started + timeout;
  std::array<char, 65536> buf{};
  bool out_open = true;
  bool err_open = true;
  while (out_open || err_open) {
    const auto now = Clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      break;
    }
    const auto remaining = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count() + 1;
    std::array<pollfd, 2> pfds{pollfd{out_open ? out_r.fd : -1, POLLIN, 0},
                               pollfd{err_open ? err_r.fd : -1, POLLIN, 0}};
    const int rc = ::poll(pfds.data(), pfds.size(), static_cast<int>(remaining));
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (std::size_t i = 0; i < pfds.size(); ++i) {
      if (pfds[i].fd < 0 || pfds[i].revents == 0) continue;
      const ssize_t n = ::read(pfds[i].fd, buf.data(), buf.size());
      if (n > 0) {
        (i == 0 ? result.out : result.err).append(buf.data(), static_cast<std::size_t>(n));
      } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
        (i == 0 ? out_open : err_open) = false;
      }
    }
  }

  int status = 0;
  if (result.timed_out) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    ::waitpid(pid, &status, 0);
  } else {
    // Pipes closed; the child may still be exiting. Bound the wait by the deadline.
    while (true) {
      const pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid) break;
      if (w < 0 && errno != EINTR) break;
      if (Clock::now() >= deadline) {
        result.timed_out = true;
        ::kill(-pid, SIGKILL);
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        break;
      }
      ::usleep(1000);
    }
    // Stray grandchildren must not outlive the job.
    ::kill(-pid, SIGKILL);
  }
  result.wall = Clock::now() - started;
  if (!result.timed_out) {
    if (WIFEXITED(status)) {
      result.exit_code = WEXITSTATUS(status);
    } else {
      result.exit_code = -1;
    }
  }
  return result;
}

std::vector<std::string> split_command_line(std::string_view command) {
  std::vector<std::string> out;
  std::string current;
  bool in_token = false;
  char quote = 0;
  for (const char c : command) {
    if (quote != 0) {
      if (c == quote) {
        quote = 0;
      } else {
        current.push_back(c);
      }
      continue;
    }
    if (c == '\'' || c == '"') {
      quote = c;
      in_token = true;
    } else if (c == ' ' || c == '\t' || c == '\n') {
      if (in_token) {
        out.push_back(std::move(current));
        current.clear();
        in_token = false;
      }
    } else {
      current.push_back(c);
      in_token = true;
    }
  }
  if (quote != 0) throw Error("unterminated quote in command: " + std::string(command));
  if (in_token) out.push_back(std::move(current));
  return out;
}

TempDir::TempDir(std::string_view prefix) {
  std::string tmpl = (std::filesystem::temp_directory_path() / (std::string(prefix) + "XXXXXX")).string();
  if (::mkdtemp(tmpl.data()) == nullptr) {
    throw Error(std::string("mkdtemp: ") + std::strerror(errno));
  }
  path_ = tmpl;
}

TempDir::~TempDir() {
  if (path_.empty()) return;
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

TempDir::TempDir(TempDir&& other) noexcept : path_(std::move(other.path_)) { other.path_.clear(); }

TempDir& TempDir::operator=(TempDir&& other) noexcept {
  if (this != &other) {
    if (!path_.empty()) {
      std::error_code ec;
      std::filesystem::remove_all(path_, ec);
    }
    path_ = std::move(other.path_);
    other.path_.clear();
  }
  return *this;
}

}  // namespace acecode
