#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <mutex>
#include <thread>

#include "sraf/protocol.hpp"

namespace sraf {

namespace {

using Clock = std::chrono::steady_clock;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

int remaining_ms(Clock::time_point end) {
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(end - Clock::now()).count();
  return left <= 0 ? 0 : static_cast<int>(std::min<long long>(left, 1 << 30));
}

void set_nonblocking(int fd) {
  const int flags = ::fcntl(fd, F_GETFL, 0);
  if (flags >= 0) ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

FdLineTransport::FdLineTransport(int read_fd, int write_fd, bool is_socket) {
  attach(read_fd, write_fd, is_socket);
}

void FdLineTransport::attach(int read_fd, int write_fd, bool is_socket) {
  ignore_sigpipe();
  read_fd_ = read_fd;
  write_fd_ = write_fd;
  is_socket_ = is_socket;
  set_nonblocking(read_fd_);
  if (write_fd_ != read_fd_) set_nonblocking(write_fd_);
}

FdLineTransport::~FdLineTransport() { FdLineTransport::close(); }

void FdLineTransport::close() {
  if (read_fd_ >= 0) ::close(read_fd_);
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  read_fd_ = write_fd_ = -1;
}

IoStatus FdLineTransport::send_line(std::string_view line, std::chrono::milliseconds deadline) {
  if (write_fd_ < 0) return IoStatus::kClosed;
  std::string data(line);
  if (data.empty() || data.back() != '\n') data.push_back('\n');
  const auto end = Clock::now() + deadline;
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = is_socket_ ? ::send(write_fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL)
                                 : ::write(write_fd_, data.data() + off, data.size() - off);
    if (n > 0) {
      off += static_cast<std::size_t>(n);
      continue;
    }
    if (n < 0 && errno == EINTR) continue;
    if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      pollfd pfd{write_fd_, POLLOUT, 0};
      const int r = ::poll(&pfd, 1, remaining_ms(end));
      if (r == 0) return IoStatus::kTimeout;
      if (r < 0 && errno != EINTR) return IoStatus::kClosed;
      if (r > 0 && (pfd.revents & (POLLERR | POLLHUP)) && !(pfd.revents & POLLOUT)) return IoStatus::kClosed;
      continue;
    }
    return IoStatus::kClosed;
  }
  return IoStatus::kOk;
}

ReadResult FdLineTransport::read_line(std::chrono::milliseconds deadline) {
  const auto end = Clock::now() + deadline;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      ReadResult r{IoStatus::kOk, buffer_.substr(0, nl)};
      buffer_.erase(0, nl + 1);
      if (!r.line.empty() && r.line.back() == '\r') r.line.pop_back();
      return r;
    }
    if (buffer_.size() > kMaxLine) return {IoStatus::kOverflow, {}};
    if (read_fd_ < 0) return {IoStatus::kClosed, {}};
    pollfd pfd{read_fd_, POLLIN, 0};
    const int r = ::poll(&pfd, 1, remaining_ms(end));
    if (r == 0) return {IoStatus::kTimeout, {}};
    if (r < 0) {
      if (errno == EINTR) continue;
      return {IoStatus::kClosed, {}};
    }
    char chunk[65536];
    const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
    if (n > 0) {
      buffer_.append(chunk, static_cast<std::size_t>(n));
    } else if (n == 0) {
      return {IoStatus::kClosed, {}};
    } else if (errno != EINTR && errno != EAGAIN && errno != EWOULDBLOCK) {
      return {IoStatus::kClosed, {}};
    }
  }
}

ChildProcessTransport::ChildProcessTransport(const std::string& command) {
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw Error(ErrorCode::kIoError, "pipe failed");
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw Error(ErrorCode::kIoError, "pipe failed");
  }
  const char* cmd = command.c_str();
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) ::close(fd);
    throw Error(ErrorCode::kIoError, std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::signal(SIGPIPE, SIG_DFL);
    ::execl("/bin/sh", "sh", "-c", cmd, static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  pid_ = pid;
  attach(from_child[0], to_child[1], false);
}

ChildProcessTransport::~ChildProcessTransport() { ChildProcessTransport::close(); }

void ChildProcessTransport::close() {
  FdLineTransport::close();
  if (pid_ <= 0) return;
  // Closing stdin is the polite stop signal; escalate if the agent lingers.
  int status = 0;
  const auto end = Clock::now() + std::chrono::milliseconds(200);
  bool reaped = false;
  while (Clock::now() < end) {
    if (::waitpid(pid_, &status, WNOHANG) == pid_) {
      reaped = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!reaped) {
    ::kill(-pid_, SIGKILL);
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
  }
  pid_ = -1;
}

std::unique_ptr<Transport> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0)
    throw Error(ErrorCode::kHandshakeFailed,
                "cannot resolve " + host + ":" + service + ": " + ::gai_strerror(rc));
  int fd = -1;
  std::string last_error = "no address";
  for (addrinfo* ai = res; ai; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    last_error = std::strerror(errno);
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0)
    throw Error(ErrorCode::kHandshakeFailed, "cannot connect to " + host + ":" + service + ": " + last_error);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return std::make_unique<FdLineTransport>(fd, fd, true);
}

}  // namespace sraf
