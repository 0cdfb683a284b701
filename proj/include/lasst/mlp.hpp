// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasst/core.hpp"

namespace lasst {

/// Flat list of parameter tensors; biases are stored as n x 1 matrices.
template <typename Scalar>
using ParameterList = std::vector<Matrix<Scalar>>;

struct MlpShape {
  int input_dim = 256;
  int hidden_layers = 4;
  int hidden_width = 256;
  int output_dim = 3;
  double output_scale = 0.5;  // residues lie in (-output_scale, output_scale)
};

/// Activations recorded by forward() and consumed by backward().
template <typename Scalar>
struct MlpCache {
  std::vector<Matrix<Scalar>> inputs;  // input to layer i (columns = batch)
  Matrix<Scalar> output_tanh;          // tanh of the final pre-activation
};

/// ReLU MLP whose final linear layer is squashed to (-scale, scale) by
/// scale * tanh(.). params[2i] is W_i (out x in), params[2i+1] is b_i.
template <typename Scalar>
class ColorMLP {
 public:
  ColorMLP() = default;

  /// Kaiming-uniform weights (bound sqrt(6 / fan_in)) on ReLU layers, the
  /// 1/sqrt(fan_in) bound on the output layer, biases U(-1/sqrt(fan_in), .).
  static ColorMLP initialize(const MlpShape& shape, std::uint64_t seed) {
    if (shape.input_dim <= 0 || shape.hidden_layers < 0 || shape.hidden_width <= 0 ||
        shape.output_dim <= 0) {
      throw std::invalid_argument("invalid MLP shape");
    }
    ColorMLP net;
    net.shape_ = shape;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    int fan_in = shape.input_dim;
    for (int layer = 0; layer <= shape.hidden_layers; ++layer) {
      const bool last = layer == shape.hidden_layers;
      const int fan_out = last ? shape.output_dim : shape.hidden_width;
      const double w_bound = last ? 1.0 / std::sqrt(double(fan_in)) : std::sqrt(6.0 / fan_in);
      const double b_bound = 1.0 / std::sqrt(double(fan_in));
      Matrix<Scalar> w(fan_out, fan_in);
      Matrix<Scalar> b(fan_out, 1);
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = Scalar(w_bound * unit(rng));
      }
      for (Eigen::Index i = 0; i < b.rows(); ++i) b(i, 0) = Scalar(b_bound * unit(rng));
      net.params_.push_back(std::move(w));
      net.params_.push_back(std::move(b));
      fan_in = fan_out;
    }
    return net;
  }

  /// Wraps existing tensors; shapes must chain from input_dim to output_dim.
  static ColorMLP from_parameters(ParameterList<Scalar> params, double output_scale = 0.5) {
    if (params.size() < 2 || params.size() % 2 != 0) {
      throw std::invalid_argument("MLP parameters must come in (weight, bias) pairs");
    }
    ColorMLP net;
    net.params_ = std::move(params);
    net.shape_.input_dim = int(net.params_.front().cols());
    net.shape_.output_dim = int(net.params_[net.params_.size() - 2].rows());
    net.shape_.hidden_layers = int(net.params_.size() / 2) - 1;
    net.shape_.hidden_width = net.shape_.hidden_layers > 0 ? int(net.params_.front().rows()) : 0;
    net.shape_.output_scale = output_scale;
    Eigen::Index width = net.shape_.input_dim;
    for (std::size_t i = 0; i < net.params_.size(); i += 2) {
      if (net.params_[i].cols() != width || net.params_[i + 1].rows() != net.params_[i].rows() ||
          net.params_[i + 1].cols() != 1) {
        throw std::invalid_argument("MLP parameter shapes do not chain");
      }
      width = net.params_[i].rows();
    }
    return net;
  }

  const MlpShape& shape() const { return shape_; }
  int layer_count() const { return int(params_.size() / 2); }
  const ParameterList<Scalar>& parameters() const { return params_; }
  ParameterList<Scalar>& parameters() { return params_; }

  Eigen::Index parameter_count() const {
    Eigen::Index n = 0;
    for (const auto& p : params_) n += p.size();
    return n;
  }

  /// encodings: input_dim x N. Returns output_dim x N residues.
  Matrix<Scalar> forward(const Matrix<Scalar>& encodings, MlpCache<Scalar>* cache = nullptr) const {
    if (encodings.rows() != shape_.input_dim) {
      throw std::invalid_argument("encoding width " + std::to_string(encodings.rows()) +
                                  " does not match MLP input " + std::to_string(shape_.input_dim));
    }
    if (cache) cache->inputs.clear();
    Matrix<Scalar> x = encodings;
    const int layers = layer_count();
    for (int l = 0; l < layers; ++l) {
      const auto& w = params_[std::size_t(2 * l)];
      const auto& b = params_[std::size_t(2 * l + 1)];
      Matrix<Scalar> z = w * x;
      z.colwise() += b.col(0);
      if (cache) cache->inputs.push_back(std::move(x));
      if (l + 1 < layers) {
        x = z.cwiseMax(Scalar(0));
      } else {
        x = z.array().tanh().matrix();
      }
    }
    if (!x.allFinite()) throw NumericalError("non-finite activation in color MLP forward pass");
    if (cache) cache->output_tanh = x;
    return Scalar(shape_.output_scale) * x;
  }

  /// Reverse pass for a batch. grad_residues: output_dim x N.
  ParameterList<Scalar> backward(const MlpCache<Scalar>& cache,
                                 const Matrix<Scalar>& grad_residues) const {
    const int layers = layer_count();
    if (int(cache.inputs.size()) != layers || grad_residues.rows() != cache.output_tanh.rows() ||
        grad_residues.cols() != cache.output_tanh.cols()) {
      throw std::invalid_argument("MLP backward: gradient shape does not match forward cache");
    }
    ParameterList<Scalar> grads(params_.size());
    // d/dz of scale * tanh(z) = scale * (1 - tanh^2)
    Matrix<Scalar> delta = (Scalar(shape_.output_scale) * grad_residues.array() *
                            (Scalar(1) - cache.output_tanh.array().square()))
                               .matrix();
    for (int l = layers - 1; l >= 0; --l) {
      const Matrix<Scalar>& x = cache.inputs[std::size_t(l)];
      grads[std::size_t(2 * l)] = delta * x.transpose();
      grads[std::size_t(2 * l + 1)] = delta.rowwise().sum();
      if (l > 0) {
        Matrix<Scalar> upstream = params_[std::size_t(2 * l)].transpose() * delta;
        // x is relu(z) for hidden layers, so x > 0 exactly where z > 0
        delta = (upstream.array() * (x.array() > Scalar(0)).template cast<Scalar>()).matrix();
      }
    }
    return grads;
  }

 private:
  MlpShape shape_;
  ParameterList<Scalar> params_;
};

}  // namespace lasst
