#include "atomic/compose/process.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <system_error>
#include <thread>

extern char** environ;

namespace atomic::compose {

ChildProcess::ChildProcess(std::vector<std::string> argv, std::filesystem::path const& log)
    : argv_{std::move(argv)}, log_{log} {
  if (argv_.empty()) {
    throw std::invalid_argument{"empty argv"};
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);

  std::vector<char*> args;
  for (auto& a : argv_) {
    args.push_back(a.data());
  }
  args.push_back(nullptr);
  auto const rc = posix_spawn(&pid_, args[0], &actions, nullptr, args.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw std::system_error{rc, std::generic_category(), "spawn " + argv_[0]};
  }
}

ChildProcess::~ChildProcess() {
  if (running()) {
    terminate(std::chrono::seconds{2});
  }
}

bool ChildProcess::reap(bool block) {
  if (status_) {
    return true;
  }
  int status = 0;
  pid_t r;
  do {
    r = waitpid(pid_, &status, block ? 0 : WNOHANG);
  } while (r < 0 && errno == EINTR);
  if (r != pid_) {
    return false;
  }
  status_ = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return true;
}

bool ChildProcess::running() { return !reap(false); }

std::optional<int> ChildProcess::exit_code() {
  reap(false);
  return status_;
}

int ChildProcess::wait(std::chrono::milliseconds timeout) {
  auto const deadline = std::chrono::steady_clock::now() + timeout;
  while (!reap(false)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      kill();
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds{10});
  }
  return *status_;
}

void ChildProcess::terminate(std::chrono::milliseconds grace) {
  if (reap(false)) {
    return;
  }
  ::kill(pid_, SIGTERM);
  auto const deadline = std::chrono::steady_clock::now() + grace;
  while (!reap(false)) {
    if (std::chrono::steady_clock::now() >= deadline) {
      kill();
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds{10});
  }
}

void ChildProcess::kill() {
  if (reap(false)) {
    return;
  }
  ::kill(pid_, SIGKILL);
  reap(true);
}

int free_port(std::string const& host) {
  auto const fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) {
    throw std::system_error{errno, std::generic_category(), "socket"};
  }
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = 0;
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw std::invalid_argument{"not an IPv4 address: " + host};
  }
  socklen_t len = sizeof addr;
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
      ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    auto const err = errno;
    ::close(fd);
    throw std::system_error{err, std::generic_category(), "bind " + host};
  }
  ::close(fd);
  return ntohs(addr.sin_port);
}

std::filesystem::path self_executable() { return std::filesystem::read_symlink("/proc/self/exe"); }

}  // namespace atomic::compose
