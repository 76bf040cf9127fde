#pragma once

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hc::engine {

struct SpawnFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EngineDied : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-oriented child process over two pipes. Reads are timeout-guarded.
class Subprocess {
 public:
  Subprocess(const std::string& path, const std::vector<std::string>& args = {}) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw SpawnFailure("pipe failed: " + std::string(strerror(errno)));

    pid_ = fork();
    if (pid_ < 0) throw SpawnFailure("fork failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> argv;
      argv.push_back(const_cast<char*>(path.c_str()));
      for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execvp(path.c_str(), argv.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = from_child[0];
    out_fd_ = to_child[1];
    signal(SIGPIPE, SIG_IGN);
  }

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  ~Subprocess() { terminate(); }

  void write_line(const std::string& line) {
    const std::string full = line + "\n";
    size_t at = 0;
    while (at < full.size()) {
      const ssize_t n = ::write(out_fd_, full.data() + at, full.size() - at);
      if (n <= 0) throw EngineDied("write to engine failed");
      at += static_cast<size_t>(n);
    }
  }

  // nullopt on timeout; EngineDied at end of stream
  std::optional<std::string> read_line(int timeout_ms) {
    for (;;) {
      const size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        buffer_.erase(0, nl + 1);
        return line;
      }
      pollfd pfd{in_fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, timeout_ms);
      if (pr == 0) return std::nullopt;
      if (pr < 0) throw EngineDied("poll failed");
      char chunk[4096];
      const ssize_t n = ::read(in_fd_, chunk, sizeof chunk);
      if (n <= 0) throw EngineDied("engine closed its output");
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

  bool alive() {
    if (pid_ <= 0) return false;
    int status = 0;
    return waitpid(pid_, &status, WNOHANG) == 0;
  }

  void terminate() {
    if (pid_ <= 0) return;
    close(out_fd_);
    close(in_fd_);
    kill(pid_, SIGTERM);
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      usleep(10000);
    }
    kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1, out_fd_ = -1;
  std::string buffer_;
};

}  // namespace hc::engine
