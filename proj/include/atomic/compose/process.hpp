#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace atomic::compose {

/// A spawned child with stdout and stderr appended to a log file. The
/// destructor terminates it if it is still running.
class ChildProcess {
public:
  /// Throws std::system_error when the program cannot be spawned.
  ChildProcess(std::vector<std::string> argv, std::filesystem::path const& log);
  ~ChildProcess();
  ChildProcess(ChildProcess const&) = delete;
  ChildProcess& operator=(ChildProcess const&) = delete;

  pid_t pid() const { return pid_; }
  bool running();
  /// Exit status once reaped; 128 + signal for a signalled child.
  std::optional<int> exit_code();
  /// Blocks until exit or timeout; kills the child on timeout.
  int wait(std::chrono::milliseconds timeout);
  /// SIGTERM, then SIGKILL after `grace`.
  void terminate(std::chrono::milliseconds grace = std::chrono::seconds{5});
  /// SIGKILL, no grace.
  void kill();

  std::string const& name() const { return argv_.at(1); }
  std::filesystem::path const& log() const { return log_; }

private:
  bool reap(bool block);

  std::vector<std::string> argv_;
  std::filesystem::path log_;
  pid_t pid_{-1};
  std::optional<int> status_;
};

/// A port that was free a moment ago on `host`.
int free_port(std::string const& host = "127.0.0.1");

/// The running executable, via /proc/self/exe.
std::filesystem::path self_executable();

}  // namespace atomic::compose
