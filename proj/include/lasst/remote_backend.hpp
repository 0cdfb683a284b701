// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "lasst/net.hpp"
#include "lasst/scorer.hpp"
#include "lasst/wire.hpp"

namespace lasst {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  /// Parses "host:port" (IPv6 hosts in brackets: "[::1]:7000").
  static Endpoint parse(const std::string& text);
  std::string to_string() const { return host + ":" + std::to_string(port); }
};

struct RemoteBackendOptions {
  Endpoint endpoint;
  std::chrono::milliseconds timeout{30000};
  int retries = 2;  // extra attempts after a transport failure
  std::chrono::milliseconds retry_backoff{250};
};

/// Raised once the retry budget is spent; carries the attempt count.
class BackendUnavailable : public std::runtime_error {
 public:
  BackendUnavailable(const std::string& what, int attempts) : std::runtime_error(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

/// Client for the scoring service. Holds one connection and serializes
/// requests on it; a transport failure drops the connection and retries.
class RemoteBackend final : public ScoreBackend<double> {
 public:
  explicit RemoteBackend(RemoteBackendOptions options);

  /// Empty echo round trip; throws ProtocolError(kVersionMismatch) unless the
  /// service speaks version 1.
  void handshake();

  Embedding<double> embed_text(const std::string& prompt) override;
  SemanticScore<double> score_with_image_gradient(std::span<const Image<double>> images,
                                                  const TextQuery<double>& query) override;
  /// Sends a msg_type 3 frame and returns what came back.
  wire::Frame echo(const wire::Frame& frame);

  const RemoteBackendOptions& options() const { return options_; }

 private:
  template <typename Fn>
  auto with_retries(Fn&& fn) -> decltype(fn(std::declval<net::TcpStream&>()));

  RemoteBackendOptions options_;
  std::mutex mutex_;
  net::TcpStream stream_;
};

}  // namespace lasst
