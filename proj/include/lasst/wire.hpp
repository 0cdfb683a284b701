// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasst/net.hpp"

/// Scoring service wire protocol, version 1. Every integer and float is
/// little-endian.
///
///   request   "LSST" | u8 version | u8 msg_type | u32 header_len | header JSON
///             | payload (n_images*h*w*3 float32, row-major RGB, image-major)
///             | u32 CRC32(payload)
///   embed     u8 status | 512 float32
///   score     u8 status | f32 loss | payload (same layout as the request) | u32 CRC32
///   echo      u8 status | the request frame re-encoded with the server's version
///
/// A non-zero status byte is the whole response.
namespace lasst::wire {

inline constexpr std::uint8_t kProtocolVersion = 1;
inline constexpr char kMagic[4] = {'L', 'S', 'S', 'T'};
inline constexpr int kEmbeddingFloats = 512;

enum class MessageType : std::uint8_t { kEmbedText = 1, kScoreAndGrad = 2, kEcho = 3 };
enum class Status : std::uint8_t { kOk = 0, kBadRequest = 1, kInternalError = 2 };

class ProtocolError : public std::runtime_error {
 public:
  enum class Kind { kMalformed, kVersionMismatch, kChecksum, kStatus };
  ProtocolError(Kind kind, const std::string& what, Status status = Status::kOk)
      : std::runtime_error(what), kind_(kind), status_(status) {}
  Kind kind() const { return kind_; }
  Status status() const { return status_; }

 private:
  Kind kind_;
  Status status_;
};

struct RequestHeader {
  std::string prompt;
  std::int64_t n_images = 0;
  std::int64_t height = 0;
  std::int64_t width = 0;

  std::size_t payload_floats() const { return std::size_t(n_images * height * width * 3); }
};

struct Frame {
  std::uint8_t version = kProtocolVersion;
  MessageType type = MessageType::kEcho;
  RequestHeader header;
  std::vector<float> payload;
};

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> float_bytes(std::span<const float> values);

std::vector<std::uint8_t> encode_frame(const Frame& frame);
/// Reads one request frame from a stream (server side).
Frame read_frame(net::TcpStream& stream, std::size_t max_payload_floats = std::size_t(1) << 28);

std::vector<std::uint8_t> encode_score_response(float loss, std::span<const float> gradients);
std::vector<std::uint8_t> encode_embed_response(std::span<const float> embedding);
std::vector<std::uint8_t> encode_echo_response(const Frame& frame);
std::vector<std::uint8_t> encode_error_response(Status status);

struct ScoreResponse {
  float loss = 0;
  std::vector<float> gradients;
};

/// Client-side readers; `expected_floats` comes from the request header.
ScoreResponse read_score_response(net::TcpStream& stream, std::size_t expected_floats);
std::vector<float> read_embed_response(net::TcpStream& stream);
Frame read_echo_response(net::TcpStream& stream);

}  // namespace lasst::wire
