// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lasst/core.hpp"

namespace lasst {

struct AugmentConfig {
  bool enabled = true;
  double crop_scale_min = 0.6;  // minimum crop area as a fraction of the image
  double crop_scale_max = 1.0;
  double aspect_min = 3.0 / 4.0;
  double aspect_max = 4.0 / 3.0;
  double perspective_distortion = 0.5;
  double perspective_probability = 0.8;
};

/// Geometric parameters of one augmentation draw.
struct AugmentParams {
  double crop_x = 0, crop_y = 0;      // top-left corner of the crop in source pixels
  double crop_w = 0, crop_h = 0;      // crop extent in source pixels
  Eigen::Matrix3d homography = Eigen::Matrix3d::Identity();  // output -> pre-perspective coords
  int out_height = 0, out_width = 0;

  static AugmentParams identity(int height, int width) {
    AugmentParams p;
    p.crop_w = width;
    p.crop_h = height;
    p.out_height = height;
    p.out_width = width;
    return p;
  }
};

/// Homography H with H * src_i ~ dst_i for four point pairs (pixel coords).
inline Eigen::Matrix3d homography_from_points(const std::array<Eigen::Vector2d, 4>& src,
                                              const std::array<Eigen::Vector2d, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[std::size_t(i)].x(), y = src[std::size_t(i)].y();
    const double u = dst[std::size_t(i)].x(), v = dst[std::size_t(i)].y();
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  const Eigen::Matrix<double, 8, 1> h = a.fullPivLu().solve(b);
  Eigen::Matrix3d m;
  m << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0;
  return m;
}

/// Seeded random resized crop followed by a random perspective warp, in the
/// manner of torchvision's RandomResizedCrop + RandomPerspective.
inline AugmentParams sample_augment_params(int height, int width, std::uint64_t seed,
                                           const AugmentConfig& config, int out_height = -1,
                                           int out_width = -1) {
  AugmentParams p = AugmentParams::identity(height, width);
  p.out_height = out_height > 0 ? out_height : height;
  p.out_width = out_width > 0 ? out_width : width;
  if (!config.enabled) return p;
  if (!(config.crop_scale_min > 0.0) || config.crop_scale_min > config.crop_scale_max ||
      config.crop_scale_max > 1.0) {
    throw std::invalid_argument("crop scale bounds must satisfy 0 < min <= max <= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double area = double(height) * width;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double target = area * (config.crop_scale_min +
                                  (config.crop_scale_max - config.crop_scale_min) * unit(rng));
    const double log_ratio = std::log(config.aspect_min) +
                             (std::log(config.aspect_max) - std::log(config.aspect_min)) * unit(rng);
    const double ratio = std::exp(log_ratio);
    const double w = std::sqrt(target * ratio);
    const double h = std::sqrt(target / ratio);
    if (w <= width && h <= height) {
      p.crop_w = w;
      p.crop_h = h;
      p.crop_x = (width - w) * unit(rng);
      p.crop_y = (height - h) * unit(rng);
      break;
    }
  }
  if (unit(rng) < config.perspective_probability && config.perspective_distortion > 0.0) {
    const double W = p.out_width, H = p.out_height;
    const double dx = config.perspective_distortion * W / 2;
    const double dy = config.perspective_distortion * H / 2;
    const std::array<Eigen::Vector2d, 4> corners{Eigen::Vector2d(0, 0), Eigen::Vector2d(W, 0),
                                                 Eigen::Vector2d(W, H), Eigen::Vector2d(0, H)};
    const std::array<Eigen::Vector2d, 4> moved{
        Eigen::Vector2d(dx * unit(rng), dy * unit(rng)),
        Eigen::Vector2d(W - dx * unit(rng), dy * unit(rng)),
        Eigen::Vector2d(W - dx * unit(rng), H - dy * unit(rng)),
        Eigen::Vector2d(dx * unit(rng), H - dy * unit(rng))};
    // sampling runs output -> input, so map the displaced corners back onto the originals
    p.homography = homography_from_points(moved, corners);
  }
  return p;
}

/// Affine resampling map out = A * in + fill_weight * fill, applied per
/// channel, with A built from bilinear taps. pullback() applies A^T.
template <typename Scalar>
class SamplingWarp {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  SamplingWarp() = default;

  static SamplingWarp build(const AugmentParams& params, int in_height, int in_width,
                            const Vector3<Scalar>& fill) {
    SamplingWarp warp;
    warp.in_height_ = in_height;
    warp.in_width_ = in_width;
    warp.out_height_ = params.out_height;
    warp.out_width_ = params.out_width;
    warp.fill_ = fill;
    const Eigen::Index n_out = Eigen::Index(params.out_height) * params.out_width;
    const Eigen::Index n_in = Eigen::Index(in_height) * in_width;
    warp.fill_weight_ = Vector<Scalar>::Zero(n_out);
    std::vector<Eigen::Triplet<Scalar>> taps;
    taps.reserve(std::size_t(n_out) * 4);
    const double sx = params.crop_w / params.out_width;
    const double sy = params.crop_h / params.out_height;
    const bool has_homography = !params.homography.isIdentity(0.0);
    for (int y = 0; y < params.out_height; ++y) {
      for (int x = 0; x < params.out_width; ++x) {
        Eigen::Vector2d q(x + 0.5, y + 0.5);
        if (has_homography) {
          const Eigen::Vector3d h = params.homography * Eigen::Vector3d(q.x(), q.y(), 1.0);
          q = h.head<2>() / h.z();
        }
        const double fx = params.crop_x + q.x() * sx - 0.5;
        const double fy = params.crop_y + q.y() * sy - 0.5;
        const double ix = std::floor(fx), iy = std::floor(fy);
        const double tx = fx - ix, ty = fy - iy;
        const Eigen::Index row = Eigen::Index(y) * params.out_width + x;
        const std::array<std::array<double, 3>, 4> corner{{{ix, iy, (1 - tx) * (1 - ty)},
                                                           {ix + 1, iy, tx * (1 - ty)},
                                                           {ix, iy + 1, (1 - tx) * ty},
                                                           {ix + 1, iy + 1, tx * ty}}};
        for (const auto& [cx, cy, w] : corner) {
          if (w == 0.0) continue;
          if (cx < 0 || cy < 0 || cx >= in_width || cy >= in_height) {
            warp.fill_weight_(row) += Scalar(w);
          } else {
            taps.emplace_back(row, Eigen::Index(cy) * in_width + Eigen::Index(cx), Scalar(w));
          }
        }
      }
    }
    warp.matrix_.resize(n_out, n_in);
    warp.matrix_.setFromTriplets(taps.begin(), taps.end());
    return warp;
  }

  Image<Scalar> apply(const Image<Scalar>& in) const {
    check_shape(in, in_height_, in_width_);
    Image<Scalar> out(out_height_, out_width_);
    out_map(out) = matrix_ * const_map(in);
    out_map(out) += fill_weight_ * fill_.transpose();
    return out;
  }

  Image<Scalar> pullback(const Image<Scalar>& grad_out) const {
    check_shape(grad_out, out_height_, out_width_);
    Image<Scalar> grad_in(in_height_, in_width_);
    out_map(grad_in) = matrix_.transpose() * const_map(grad_out);
    return grad_in;
  }

  const SparseMatrix& matrix() const { return matrix_; }
  const Vector<Scalar>& fill_weight() const { return fill_weight_; }

 private:
  using PixelRows = Eigen::Matrix<Scalar, Eigen::Dynamic, 3, Eigen::RowMajor>;

  static Eigen::Map<PixelRows> out_map(Image<Scalar>& img) {
    return {img.data.data(), img.pixel_count(), 3};
  }
  static Eigen::Map<const PixelRows> const_map(const Image<Scalar>& img) {
    return {img.data.data(), img.pixel_count(), 3};
  }
  static void check_shape(const Image<Scalar>& img, int h, int w) {
    if (img.height != h || img.width != w) throw std::invalid_argument("image shape does not match warp");
  }

  int in_height_ = 0, in_width_ = 0, out_height_ = 0, out_width_ = 0;
  SparseMatrix matrix_;
  Vector<Scalar> fill_weight_;
  Vector3<Scalar> fill_ = Vector3<Scalar>::Zero();
};

template <typename Scalar>
struct AugmentedImage {
  Image<Scalar> image;
  SamplingWarp<Scalar> warp;
};

template <typename Scalar>
AugmentedImage<Scalar> augment(const Image<Scalar>& image, std::uint64_t seed, const AugmentConfig& config,
                               const Vector3<Scalar>& fill) {
  const AugmentParams params = sample_augment_params(image.height, image.width, seed, config);
  AugmentedImage<Scalar> out;
  out.warp = SamplingWarp<Scalar>::build(params, image.height, image.width, fill);
  out.image = out.warp.apply(image);
  return out;
}

}  // namespace lasst
