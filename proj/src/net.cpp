// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

namespace lasst::net {
namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

TcpStream::~TcpStream() { close(); }

TcpStream::TcpStream(TcpStream&& other) noexcept : fd_(other.fd_), timeout_(other.timeout_) { other.fd_ = -1; }

TcpStream& TcpStream::operator=(TcpStream&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.fd_;
    timeout_ = other.timeout_;
    other.fd_ = -1;
  }
  return *this;
}

void TcpStream::close() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpStream::connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* found = nullptr;
  const std::string service = std::to_string(port);
  if (int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &found); rc != 0) {
    throw TransportError(TransportError::Kind::kConnect,
                         "cannot resolve " + host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no usable address";
  for (addrinfo* ai = found; ai != nullptr; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype | SOCK_CLOEXEC, ai->ai_protocol);
    if (fd < 0) continue;
    TcpStream stream(fd);
    stream.timeout_ = timeout;
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd, ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd pfd{fd, POLLOUT, 0};
      rc = ::poll(&pfd, 1, int(timeout.count()));
      if (rc == 0) {
        last_error = "connect timed out";
        continue;
      }
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
      errno = err;
    }
    if (rc != 0) {
      last_error = errno_text();
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    ::freeaddrinfo(found);
    return stream;
  }
  ::freeaddrinfo(found);
  throw TransportError(TransportError::Kind::kConnect,
                       "cannot connect to " + host + ":" + service + ": " + last_error);
}

void TcpStream::wait_for(short events) {
  pollfd pfd{fd_, events, 0};
  for (;;) {
    const int rc = ::poll(&pfd, 1, int(timeout_.count()));
    if (rc > 0) return;
    if (rc == 0) throw TransportError(TransportError::Kind::kTimeout, "socket operation timed out");
    if (errno != EINTR) throw TransportError(TransportError::Kind::kIo, "poll failed: " + errno_text());
  }
}

void TcpStream::write_all(std::span<const std::uint8_t> bytes) {
  if (fd_ < 0) throw TransportError(TransportError::Kind::kClosed, "write on a closed socket");
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n > 0) {
      sent += std::size_t(n);
    } else if (n < 0 && (errno == EAGAIN || errno == EWOULDBLOCK)) {
      wait_for(POLLOUT);
    } else if (n < 0 && errno == EINTR) {
      continue;
    } else {
      throw TransportError(TransportError::Kind::kIo, "send failed: " + errno_text());
    }
  }
}

void TcpStream::read_exact(std::span<std::uint8_t> out) {
  if (fd_ < 0) throw TransportError(TransportError::Kind::kClosed, "read on a closed socket");
  std::size_t got = 0;
  while (got < out.size()) {
    const ssize_t n = ::recv(fd_, out.data() + got, out.size() - got, 0);
    if (n > 0) {
      got += std::size_t(n);
    } else if (n == 0) {
      throw TransportError(TransportError::Kind::kClosed, "peer closed the connection");
    } else if (errno == EAGAIN || errno == EWOULDBLOCK) {
      wait_for(POLLIN);
    } else if (errno != EINTR) {
      throw TransportError(TransportError::Kind::kIo, "recv failed: " + errno_text());
    }
  }
}

std::vector<std::uint8_t> TcpStream::read_exact(std::size_t n) {
  std::vector<std::uint8_t> out(n);
  read_exact(std::span<std::uint8_t>(out));
  return out;
}

TcpListener::TcpListener(std::uint16_t port, const std::string& address) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw TransportError(TransportError::Kind::kIo, "socket failed: " + errno_text());
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, address.c_str(), &addr.sin_addr) != 1) {
    close();
    throw TransportError(TransportError::Kind::kIo, "bad listen address " + address);
  }
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd_, 16) != 0) {
    const std::string err = errno_text();
    close();
    throw TransportError(TransportError::Kind::kIo, "cannot listen: " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

TcpListener::~TcpListener() { close(); }

void TcpListener::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

TcpStream TcpListener::accept(std::chrono::milliseconds timeout) {
  if (fd_ < 0) return {};
  pollfd pfd{fd_, POLLIN, 0};
  if (::poll(&pfd, 1, int(timeout.count())) <= 0) return {};
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC | SOCK_NONBLOCK);
  if (fd < 0) return {};
  return TcpStream(fd);
}

}  // namespace lasst::net
