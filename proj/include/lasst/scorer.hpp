// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lasst/core.hpp"

namespace lasst {

inline constexpr int kEmbeddingDim = 512;

template <typename Scalar>
using Embedding = Vector<Scalar>;

template <typename Scalar>
struct TextQuery {
  std::string prompt;
  Embedding<Scalar> embedding;
};

/// Loss and d loss / d pixel for every submitted image.
template <typename Scalar>
struct SemanticScore {
  Scalar loss = 0;
  std::vector<Image<Scalar>> gradients;
};

/// Vision-language scorer contract. Implementations compute
/// loss = -cos(mean_j E_img(I_j), E_text(prompt)) and its pixel gradients.
template <typename Scalar>
class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;
  virtual Embedding<Scalar> embed_text(const std::string& prompt) = 0;
  virtual SemanticScore<Scalar> score_with_image_gradient(std::span<const Image<Scalar>> images,
                                                          const TextQuery<Scalar>& query) = 0;
};

template <typename Scalar>
TextQuery<Scalar> make_query(ScoreBackend<Scalar>& backend, const std::string& prompt) {
  if (prompt.empty()) throw std::invalid_argument("prompt must be non-empty");
  TextQuery<Scalar> q{prompt, backend.embed_text(prompt)};
  if (q.embedding.size() != kEmbeddingDim || !q.embedding.allFinite() || !(q.embedding.norm() > Scalar(0))) {
    throw NumericalError("backend returned an invalid text embedding for '" + prompt + "'");
  }
  return q;
}

/// Checked wrapper around the backend call: shapes, finiteness and the
/// cosine bound are enforced here so every backend gets the same contract.
template <typename Scalar>
SemanticScore<Scalar> semantic_loss(ScoreBackend<Scalar>& backend, std::span<const Image<Scalar>> images,
                                    const TextQuery<Scalar>& query) {
  if (images.empty()) throw std::invalid_argument("semantic_loss needs at least one image");
  SemanticScore<Scalar> score = backend.score_with_image_gradient(images, query);
  if (!std::isfinite(double(score.loss))) throw NumericalError("backend returned a non-finite loss");
  if (std::abs(double(score.loss)) > 1.0 + 1e-5) {
    throw NumericalError("backend loss " + std::to_string(double(score.loss)) + " lies outside [-1, 1]");
  }
  if (score.gradients.size() != images.size()) throw NumericalError("backend returned the wrong gradient count");
  for (std::size_t j = 0; j < images.size(); ++j) {
    if (!score.gradients[j].same_shape(images[j])) throw NumericalError("gradient shape differs from its image");
    if (!score.gradients[j].data.allFinite()) throw NumericalError("backend returned a non-finite pixel gradient");
  }
  return score;
}

/// FNV-1a, used to turn prompts into seeds.
constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

struct MockBackendOptions {
  int grid = 8;                        // images are area-pooled to grid x grid x 3
  bool normalize_before_mean = true;
};

/// Closed-form stand-in for CLIP: E_img(I) = normalize(W * pool(I) + b) with
/// a seeded Gaussian W, and text embeddings drawn from a seed hashed from the
/// prompt. Linear before normalization, so every derivative is exact.
template <typename Scalar>
class MockLinearBackend final : public ScoreBackend<Scalar> {
 public:
  explicit MockLinearBackend(std::uint64_t seed, MockBackendOptions options = {})
      : seed_(seed), options_(options) {
    if (options_.grid <= 0) throw std::invalid_argument("mock backend grid must be positive");
    const int features = 3 * options_.grid * options_.grid;
    std::mt19937_64 rng(derive_seed(seed, 0x11));
    std::normal_distribution<double> gauss(0.0, 1.0);
    weights_.resize(kEmbeddingDim, features);
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      for (Eigen::Index i = 0; i < weights_.rows(); ++i) weights_(i, j) = Scalar(gauss(rng) / std::sqrt(double(features)));
    }
    bias_.resize(kEmbeddingDim);
    for (Eigen::Index i = 0; i < bias_.size(); ++i) bias_(i) = Scalar(0.1 * gauss(rng));
  }

  const Matrix<Scalar>& weights() const { return weights_; }
  const Vector<Scalar>& bias() const { return bias_; }
  const MockBackendOptions& options() const { return options_; }

  Embedding<Scalar> embed_text(const std::string& prompt) override {
    std::mt19937_64 rng(derive_seed(seed_, 0x7e47, fnv1a(prompt)));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Embedding<Scalar> e(kEmbeddingDim);
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = Scalar(gauss(rng));
    return e.normalized();
  }

  /// Area-average of each channel over a grid x grid partition of the image.
  Vector<Scalar> pool(const Image<Scalar>& img) const {
    const int g = options_.grid;
    Vector<Scalar> f = Vector<Scalar>::Zero(3 * g * g);
    const auto counts = cell_counts(img);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        const int cell = cell_of(y, x, img);
        f.template segment<3>(3 * cell) += img.pixel(y, x);
      }
    }
    for (int c = 0; c < g * g; ++c) {
      if (counts[std::size_t(c)] > 0) f.template segment<3>(3 * c) /= Scalar(counts[std::size_t(c)]);
    }
    return f;
  }

  /// Adjoint of pool().
  Image<Scalar> pool_adjoint(const Vector<Scalar>& grad_features, int height, int width) const {
    Image<Scalar> out(height, width);
    const auto counts = cell_counts(out);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const int cell = cell_of(y, x, out);
        out.pixel(y, x) = grad_features.template segment<3>(3 * cell) / Scalar(counts[std::size_t(cell)]);
      }
    }
    return out;
  }

  Vector<Scalar> embed_image_linear(const Image<Scalar>& img) const { return weights_ * pool(img) + bias_; }
  Embedding<Scalar> embed_image(const Image<Scalar>& img) const { return embed_image_linear(img).normalized(); }

  SemanticScore<Scalar> score_with_image_gradient(std::span<const Image<Scalar>> images,
                                                  const TextQuery<Scalar>& query) override {
    const auto n = Scalar(images.size());
    std::vector<Vector<Scalar>> pre(images.size());
    std::vector<Vector<Scalar>> emb(images.size());
    Vector<Scalar> mean = Vector<Scalar>::Zero(kEmbeddingDim);
    for (std::size_t j = 0; j < images.size(); ++j) {
      pre[j] = embed_image_linear(images[j]);
      emb[j] = options_.normalize_before_mean ? Vector<Scalar>(pre[j].normalized()) : pre[j];
      mean += emb[j] / n;
    }
    const Vector<Scalar>& t = query.embedding;
    const Scalar mean_norm = mean.norm();
    const Scalar text_norm = t.norm();
    if (!(mean_norm > Scalar(0)) || !(text_norm > Scalar(0))) {
      throw NumericalError("mock backend: zero-length embedding");
    }
    SemanticScore<Scalar> out;
    const Scalar cosine = mean.dot(t) / (mean_norm * text_norm);
    out.loss = -cosine;
    // d(-cos)/d mean
    const Vector<Scalar> d_mean = -(t / (mean_norm * text_norm) - cosine * mean / (mean_norm * mean_norm));
    for (std::size_t j = 0; j < images.size(); ++j) {
      const Vector<Scalar> d_emb = d_mean / n;
      Vector<Scalar> d_pre = d_emb;
      if (options_.normalize_before_mean) {
        const Scalar len = pre[j].norm();
        d_pre = (d_emb - emb[j] * emb[j].dot(d_emb)) / len;
      }
      out.gradients.push_back(pool_adjoint(weights_.transpose() * d_pre, images[j].height, images[j].width));
    }
    return out;
  }

 private:
  int cell_of(int y, int x, const Image<Scalar>& img) const {
    const int g = options_.grid;
    const int gy = int(std::int64_t(y) * g / img.height);
    const int gx = int(std::int64_t(x) * g / img.width);
    return gy * g + gx;
  }

  std::vector<int> cell_counts(const Image<Scalar>& img) const {
    std::vector<int> counts(std::size_t(options_.grid * options_.grid), 0);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) ++counts[std::size_t(cell_of(y, x, img))];
    }
    return counts;
  }

  std::uint64_t seed_;
  MockBackendOptions options_;
  Matrix<Scalar> weights_;
  Vector<Scalar> bias_;
};

}  // namespace lasst
