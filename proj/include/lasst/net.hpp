// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lasst::net {

class TransportError : public std::runtime_error {
 public:
  enum class Kind { kConnect, kTimeout, kClosed, kIo };
  TransportError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Blocking TCP stream with per-operation timeouts (POSIX sockets).
class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  ~TcpStream();
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  static TcpStream connect(const std::string& host, std::uint16_t port, std::chrono::milliseconds timeout);

  bool is_open() const { return fd_ >= 0; }
  void close();
  void set_timeout(std::chrono::milliseconds timeout) { timeout_ = timeout; }

  void write_all(std::span<const std::uint8_t> bytes);
  void read_exact(std::span<std::uint8_t> out);
  std::vector<std::uint8_t> read_exact(std::size_t n);

 private:
  void wait_for(short events);

  int fd_ = -1;
  std::chrono::milliseconds timeout_{30000};
};

/// Listening socket bound to 127.0.0.1 (or the given address); port 0 picks an
/// ephemeral port.
class TcpListener {
 public:
  explicit TcpListener(std::uint16_t port = 0, const std::string& address = "127.0.0.1");
  ~TcpListener();
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  std::uint16_t port() const { return port_; }
  /// Waits up to `timeout` for a client; returns a closed stream on timeout.
  TcpStream accept(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace lasst::net
