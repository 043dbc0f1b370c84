#pragma once

#include <chrono>
#include <string>
#include <string_view>
#include <sys/types.h>

namespace stallwatch::detail {

// Child process driven over a line-oriented stdin/stdout pipe pair. The
// command runs under /bin/sh -c; stderr is inherited.
class LineProcess {
 public:
  explicit LineProcess(const std::string& command);
  ~LineProcess();

  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  void write_line(std::string_view line);
  // Throws DetectorTimeout when no full line arrives in time and
  // ProtocolError when the child closes its stdout.
  std::string read_line(std::chrono::milliseconds timeout);

  bool running() const noexcept { return pid_ > 0; }
  void terminate() noexcept;

 private:
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

}  // namespace stallwatch::detail
