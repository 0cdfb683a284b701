// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "lasst/mlp.hpp"

namespace lasst {

struct AdamConfig {
  double learning_rate = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  AdamConfig config;
  std::uint64_t step = 0;
  ParameterList<Scalar> first_moment;
  ParameterList<Scalar> second_moment;

  static AdamState zeros_like(const ParameterList<Scalar>& params, const AdamConfig& config) {
    AdamState s;
    s.config = config;
    for (const auto& p : params) {
      s.first_moment.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
      s.second_moment.push_back(Matrix<Scalar>::Zero(p.rows(), p.cols()));
    }
    return s;
  }
};

/// Bias-corrected Adam update applied in place.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, ParameterList<Scalar>& params,
               const ParameterList<Scalar>& grads) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment lists differ in length");
  }
  ++state.step;
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double t = double(state.step);
  const Scalar correction1 = Scalar(1.0 - std::pow(b1, t));
  const Scalar correction2 = Scalar(1.0 - std::pow(b2, t));
  const Scalar lr = Scalar(state.config.learning_rate);
  const Scalar eps = Scalar(state.config.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& g = grads[i];
    if (g.rows() != params[i].rows() || g.cols() != params[i].cols() || m.rows() != g.rows() ||
        m.cols() != g.cols()) {
      throw std::invalid_argument("adam_step: shape mismatch in tensor " + std::to_string(i));
    }
    m = Scalar(b1) * m + Scalar(1.0 - b1) * g;
    v = Scalar(b2) * v + Scalar(1.0 - b2) * g.cwiseProduct(g);
    params[i].array() -= lr * (m.array() / correction1) /
                         ((v.array() / correction2).sqrt() + eps);
  }
}

}  // namespace lasst
