// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/wire.hpp"

#include <zlib.h>

#include <nlohmann/json.hpp>

#include "binary_io.hpp"

namespace lasst::wire {
namespace {

using detail::append_le;
using detail::ByteReader;
using detail::Bytes;

std::uint8_t read_u8(net::TcpStream& s) {
  std::uint8_t b = 0;
  s.read_exact(std::span<std::uint8_t>(&b, 1));
  return b;
}

template <typename T>
T read_le(net::TcpStream& s) {
  const Bytes raw = s.read_exact(sizeof(T));
  return ByteReader(raw).read<T>();
}

std::vector<float> decode_floats(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  std::vector<float> out(bytes.size() / 4);
  for (float& f : out) f = r.read<float>();
  return out;
}

void check_status(std::uint8_t status) {
  if (status == std::uint8_t(Status::kOk)) return;
  const char* text = status == std::uint8_t(Status::kBadRequest)       ? "bad request"
                     : status == std::uint8_t(Status::kInternalError) ? "internal error"
                                                                        : "unknown status";
  throw ProtocolError(ProtocolError::Kind::kStatus,
                      std::string("scoring service replied with status ") + std::to_string(status) + " (" +
                          text + ")",
                      Status(status));
}

/// Reads payload bytes plus trailing CRC and verifies it.
std::vector<float> read_checked_payload(net::TcpStream& s, std::size_t floats) {
  const Bytes payload = s.read_exact(floats * 4);
  const auto crc = read_le<std::uint32_t>(s);
  if (crc != crc32(payload)) {
    throw ProtocolError(ProtocolError::Kind::kChecksum, "payload CRC32 mismatch");
  }
  return decode_floats(payload);
}

RequestHeader parse_header(std::span<const std::uint8_t> bytes) {
  try {
    const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
    RequestHeader h;
    h.prompt = j.value("prompt", std::string());
    h.n_images = j.value("n_images", std::int64_t(0));
    h.height = j.value("h", std::int64_t(0));
    h.width = j.value("w", std::int64_t(0));
    if (h.n_images < 0 || h.height < 0 || h.width < 0) {
      throw ProtocolError(ProtocolError::Kind::kMalformed, "negative dimension in request header");
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(ProtocolError::Kind::kMalformed, std::string("bad header JSON: ") + e.what());
  }
}

}  // namespace

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto chunk = uInt(std::min<std::size_t>(bytes.size() - done, 1u << 30));
    crc = ::crc32(crc, bytes.data() + done, chunk);
    done += chunk;
  }
  return std::uint32_t(crc);
}

std::vector<std::uint8_t> float_bytes(std::span<const float> values) {
  Bytes out;
  out.reserve(values.size() * 4);
  for (float v : values) append_le(out, v);
  return out;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  const nlohmann::json header = {{"prompt", frame.header.prompt},
                                 {"n_images", frame.header.n_images},
                                 {"h", frame.header.height},
                                 {"w", frame.header.width}};
  const std::string header_text = header.dump();
  const Bytes payload = float_bytes(frame.payload);
  Bytes out;
  out.reserve(14 + header_text.size() + payload.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  append_le(out, frame.version);
  append_le(out, std::uint8_t(frame.type));
  append_le(out, std::uint32_t(header_text.size()));
  detail::append_string(out, header_text);
  detail::append_bytes(out, payload);
  append_le(out, crc32(payload));
  return out;
}

Frame read_frame(net::TcpStream& stream, std::size_t max_payload_floats) {
  const Bytes magic = stream.read_exact(4);
  if (!std::equal(magic.begin(), magic.end(), std::begin(kMagic))) {
    throw ProtocolError(ProtocolError::Kind::kMalformed, "bad frame magic");
  }
  Frame f;
  f.version = read_u8(stream);
  const std::uint8_t type = read_u8(stream);
  if (type < 1 || type > 3) throw ProtocolError(ProtocolError::Kind::kMalformed, "unknown message type");
  f.type = MessageType(type);
  const auto header_len = read_le<std::uint32_t>(stream);
  if (header_len > (1u << 20)) throw ProtocolError(ProtocolError::Kind::kMalformed, "header too large");
  const Bytes header = stream.read_exact(header_len);
  f.header = parse_header(header);
  const std::size_t floats = f.header.payload_floats();
  if (floats > max_payload_floats) throw ProtocolError(ProtocolError::Kind::kMalformed, "payload too large");
  f.payload = read_checked_payload(stream, floats);
  return f;
}

std::vector<std::uint8_t> encode_score_response(float loss, std::span<const float> gradients) {
  Bytes out;
  append_le(out, std::uint8_t(Status::kOk));
  append_le(out, loss);
  const Bytes payload = float_bytes(gradients);
  detail::append_bytes(out, payload);
  append_le(out, crc32(payload));
  return out;
}

std::vector<std::uint8_t> encode_embed_response(std::span<const float> embedding) {
  Bytes out;
  append_le(out, std::uint8_t(Status::kOk));
  detail::append_bytes(out, float_bytes(embedding));
  return out;
}

std::vector<std::uint8_t> encode_echo_response(const Frame& frame) {
  Bytes out;
  append_le(out, std::uint8_t(Status::kOk));
  detail::append_bytes(out, encode_frame(frame));
  return out;
}

std::vector<std::uint8_t> encode_error_response(Status status) { return {std::uint8_t(status)}; }

ScoreResponse read_score_response(net::TcpStream& stream, std::size_t expected_floats) {
  check_status(read_u8(stream));
  ScoreResponse r;
  r.loss = read_le<float>(stream);
  r.gradients = read_checked_payload(stream, expected_floats);
  return r;
}

std::vector<float> read_embed_response(net::TcpStream& stream) {
  check_status(read_u8(stream));
  return decode_floats(stream.read_exact(std::size_t(kEmbeddingFloats) * 4));
}

Frame read_echo_response(net::TcpStream& stream) {
  check_status(read_u8(stream));
  return read_frame(stream);
}

}  // namespace lasst::wire
