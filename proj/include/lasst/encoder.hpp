// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>

#include "lasst/core.hpp"

namespace lasst {

/// Random Fourier features: PE(v) = [cos(2*pi*B v); sin(2*pi*B v)] with a
/// Gaussian frequency matrix B (n_freq x 3) drawn once from the seed.
template <typename Scalar>
struct FourierEncoder {
  Matrix<Scalar> frequencies;  // n_freq x 3

  static FourierEncoder sample(int n_freq, Scalar sigma, std::uint64_t seed) {
    if (n_freq <= 0) throw std::invalid_argument("n_freq must be positive");
    if (!(sigma > Scalar(0))) throw std::invalid_argument("Fourier sigma must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, double(sigma));
    FourierEncoder enc;
    enc.frequencies.resize(n_freq, 3);
    for (int i = 0; i < n_freq; ++i) {
      for (int j = 0; j < 3; ++j) enc.frequencies(i, j) = Scalar(gauss(rng));
    }
    return enc;
  }

  int n_freq() const { return int(frequencies.rows()); }
  int output_dim() const { return 2 * n_freq(); }

  Vector<Scalar> encode(const Vector3<Scalar>& v) const {
    const Vector<Scalar> phase = Scalar(2 * std::numbers::pi) * (frequencies * v);
    Vector<Scalar> out(output_dim());
    out.head(n_freq()) = phase.array().cos();
    out.tail(n_freq()) = phase.array().sin();
    return out;
  }

  /// Encodes the listed rows of `vertices`; column k holds PE(vertices.row(rows[k])).
  Matrix<Scalar> encode_rows(const VertexMatrix<Scalar>& vertices,
                             std::span<const std::int32_t> rows) const {
    Matrix<Scalar> gathered(3, Eigen::Index(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      gathered.col(Eigen::Index(k)) = vertices.row(rows[k]).transpose();
    }
    return encode_columns(gathered);
  }

  /// Encodes every column of a 3 x N matrix.
  Matrix<Scalar> encode_columns(const Matrix<Scalar>& points) const {
    const Matrix<Scalar> phase = Scalar(2 * std::numbers::pi) * (frequencies * points);
    Matrix<Scalar> out(output_dim(), points.cols());
    out.topRows(n_freq()) = phase.array().cos();
    out.bottomRows(n_freq()) = phase.array().sin();
    return out;
  }
};

}  // namespace lasst
