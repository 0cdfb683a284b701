// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/remote_backend.hpp"

#include <charconv>
#include <thread>

namespace lasst {

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw std::invalid_argument("endpoint must look like host:port, got '" + text + "'");
  }
  Endpoint e;
  e.host = text.substr(0, colon);
  if (e.host.size() > 2 && e.host.front() == '[' && e.host.back() == ']') e.host = e.host.substr(1, e.host.size() - 2);
  unsigned port = 0;
  const char* first = text.data() + colon + 1;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, port);
  if (ec != std::errc() || ptr != last || port == 0 || port > 65535) {
    throw std::invalid_argument("bad port in endpoint '" + text + "'");
  }
  e.port = std::uint16_t(port);
  return e;
}

RemoteBackend::RemoteBackend(RemoteBackendOptions options) : options_(std::move(options)) {}

template <typename Fn>
auto RemoteBackend::with_retries(Fn&& fn) -> decltype(fn(std::declval<net::TcpStream&>())) {
  std::lock_guard lock(mutex_);
  const int attempts = 1 + std::max(0, options_.retries);
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    try {
      if (!stream_.is_open()) {
        stream_ = net::TcpStream::connect(options_.endpoint.host, options_.endpoint.port, options_.timeout);
      }
      stream_.set_timeout(options_.timeout);
      return fn(stream_);
    } catch (const net::TransportError& e) {
      stream_.close();
      last_error = e.what();
      if (attempt < attempts) std::this_thread::sleep_for(options_.retry_backoff * attempt);
    } catch (...) {
      // protocol-level failures leave the stream in an unknown position
      stream_.close();
      throw;
    }
  }
  throw BackendUnavailable("scoring service at " + options_.endpoint.to_string() + " unavailable after " +
                               std::to_string(attempts) + " attempt(s): " + last_error,
                           attempts);
}

void RemoteBackend::handshake() {
  wire::Frame probe;
  probe.type = wire::MessageType::kEcho;
  const wire::Frame reply = echo(probe);
  if (reply.version != wire::kProtocolVersion) {
    throw wire::ProtocolError(wire::ProtocolError::Kind::kVersionMismatch,
                              "scoring service speaks protocol version " + std::to_string(reply.version) +
                                  ", expected " + std::to_string(wire::kProtocolVersion));
  }
}

wire::Frame RemoteBackend::echo(const wire::Frame& frame) {
  wire::Frame request = frame;
  request.type = wire::MessageType::kEcho;
  const auto bytes = wire::encode_frame(request);
  return with_retries([&](net::TcpStream& s) {
    s.write_all(bytes);
    return wire::read_echo_response(s);
  });
}

Embedding<double> RemoteBackend::embed_text(const std::string& prompt) {
  wire::Frame request;
  request.type = wire::MessageType::kEmbedText;
  request.header.prompt = prompt;
  const auto bytes = wire::encode_frame(request);
  const std::vector<float> values = with_retries([&](net::TcpStream& s) {
    s.write_all(bytes);
    return wire::read_embed_response(s);
  });
  Embedding<double> e(kEmbeddingDim);
  for (int i = 0; i < kEmbeddingDim; ++i) e(i) = double(values[std::size_t(i)]);
  return e;
}

SemanticScore<double> RemoteBackend::score_with_image_gradient(std::span<const Image<double>> images,
                                                               const TextQuery<double>& query) {
  if (images.empty()) throw std::invalid_argument("no images to score");
  const int h = images.front().height, w = images.front().width;
  wire::Frame request;
  request.type = wire::MessageType::kScoreAndGrad;
  request.header = {query.prompt, std::int64_t(images.size()), h, w};
  request.payload.reserve(request.header.payload_floats());
  for (const Image<double>& img : images) {
    if (img.height != h || img.width != w) throw std::invalid_argument("all images in one request must share a size");
    for (Eigen::Index i = 0; i < img.data.size(); ++i) request.payload.push_back(float(img.data(i)));
  }
  const auto bytes = wire::encode_frame(request);
  const wire::ScoreResponse response = with_retries([&](net::TcpStream& s) {
    s.write_all(bytes);
    return wire::read_score_response(s, request.payload.size());
  });
  SemanticScore<double> out;
  out.loss = double(response.loss);
  const std::size_t per_image = std::size_t(h) * std::size_t(w) * 3;
  for (std::size_t j = 0; j < images.size(); ++j) {
    Image<double> g(h, w);
    for (std::size_t i = 0; i < per_image; ++i) g.data(Eigen::Index(i)) = double(response.gradients[j * per_image + i]);
    out.gradients.push_back(std::move(g));
  }
  return out;
}

}  // namespace lasst
