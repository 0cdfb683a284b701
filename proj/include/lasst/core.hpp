// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lasst {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// n x 3 row-major block: one row per vertex (positions, colors, color gradients).
template <typename Scalar>
using VertexMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

using FaceMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

using Label = std::uint32_t;
inline constexpr Label kBackgroundLabel = std::numeric_limits<Label>::max();

/// H x W x 3 image stored row-major with interleaved RGB, the same layout the
/// scoring wire protocol uses.
template <typename Scalar>
struct Image {
  int height = 0;
  int width = 0;
  Vector<Scalar> data;

  Image() = default;
  Image(int h, int w, Scalar fill = Scalar(0))
      : height(h), width(w), data(Vector<Scalar>::Constant(Eigen::Index(h) * w * 3, fill)) {}

  Eigen::Index pixel_count() const { return Eigen::Index(height) * width; }
  Eigen::Index offset(int y, int x) const { return (Eigen::Index(y) * width + x) * 3; }

  auto pixel(int y, int x) { return data.template segment<3>(offset(y, x)); }
  auto pixel(int y, int x) const { return data.template segment<3>(offset(y, x)); }

  bool same_shape(const Image& other) const {
    return height == other.height && width == other.width;
  }

  template <typename NewScalar>
  Image<NewScalar> cast() const {
    Image<NewScalar> out;
    out.height = height;
    out.width = width;
    out.data = data.template cast<NewScalar>();
    return out;
  }
};

/// Raised when a NaN/Inf shows up where the math guarantees finite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// SplitMix64 finalizer; used to derive independent seed streams from a job seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) {
  return mix_seed(base ^ mix_seed(a));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return derive_seed(derive_seed(base, a), b);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                                    std::uint64_t c) {
  return derive_seed(derive_seed(base, a, b), c);
}

}  // namespace lasst
