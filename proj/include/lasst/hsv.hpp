// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "lasst/core.hpp"
#include "lasst/mesh.hpp"

namespace lasst {

/// kStandard: H = 60 * (a - b) / (max - min) + offset.
/// kLiteral:  H = 60 + (a - b) / (max - min) + offset, without the scale.
enum class HueFormula { kStandard, kLiteral };

/// kSigned averages signed differences; kAbsolute averages their magnitudes.
enum class HsvLossForm { kSigned, kAbsolute };

/// Whether the mean runs over the target vertices or over the whole mesh.
enum class HsvMeanScope { kTarget, kAll };

struct HsvWeights {
  double hue = 0.2;
  double saturation = 0.3;
  double value = 0.3;
};

struct HsvOptions {
  HsvWeights weights;
  HueFormula hue_formula = HueFormula::kStandard;
  HsvLossForm form = HsvLossForm::kSigned;
  HsvMeanScope scope = HsvMeanScope::kTarget;
};

template <typename Scalar>
struct HsvColor {
  Scalar h = 0;  // degrees, [0, 360)
  Scalar s = 0;
  Scalar v = 0;
};

/// Partial derivatives of (H, S, V) with respect to (R, G, B). Hue and
/// saturation derivatives are zero on the max == min and max == 0 branches.
template <typename Scalar>
struct HsvJacobian {
  Vector3<Scalar> dh = Vector3<Scalar>::Zero();  // degrees per unit channel
  Vector3<Scalar> ds = Vector3<Scalar>::Zero();
  Vector3<Scalar> dv = Vector3<Scalar>::Zero();
};

/// Index of the largest channel with R > G > B priority on ties.
template <typename Scalar>
int argmax_channel(const Vector3<Scalar>& c) {
  int k = 0;
  if (c[1] > c[k]) k = 1;
  if (c[2] > c[k]) k = 2;
  return k;
}

/// Index of the smallest channel with R > G > B priority on ties.
template <typename Scalar>
int argmin_channel(const Vector3<Scalar>& c) {
  int k = 0;
  if (c[1] < c[k]) k = 1;
  if (c[2] < c[k]) k = 2;
  return k;
}

template <typename Scalar>
HsvColor<Scalar> rgb_to_hsv(const Vector3<Scalar>& c, HueFormula formula = HueFormula::kStandard,
                            HsvJacobian<Scalar>* jacobian = nullptr) {
  const int hi = argmax_channel(c);
  const int lo = argmin_channel(c);
  const Scalar mx = c[hi];
  const Scalar mn = c[lo];
  HsvColor<Scalar> out;
  out.v = mx;
  if (jacobian) {
    *jacobian = HsvJacobian<Scalar>{};
    jacobian->dv[hi] = Scalar(1);
  }
  if (mx > Scalar(0)) {
    out.s = Scalar(1) - mn / mx;
    if (jacobian && mx != mn) {
      jacobian->ds[hi] = mn / (mx * mx);
      jacobian->ds[lo] = -Scalar(1) / mx;
    }
  }
  if (mx == mn) return out;

  // hue = scale * (c[a] - c[b]) / (max - min) + offset
  int a = 1, b = 2;
  Scalar offset = Scalar(0);
  if (hi == 0) {
    a = 1, b = 2;
    offset = c[2] > c[1] ? Scalar(360) : Scalar(0);
  } else if (hi == 1) {
    a = 2, b = 0;
    offset = Scalar(120);
  } else {
    a = 0, b = 1;
    offset = Scalar(240);
  }
  const Scalar range = mx - mn;
  const Scalar num = c[a] - c[b];
  const Scalar scale = formula == HueFormula::kStandard ? Scalar(60) : Scalar(1);
  const Scalar base = formula == HueFormula::kStandard ? Scalar(0) : Scalar(60);
  Scalar h = base + scale * num / range + offset;
  h = std::fmod(h, Scalar(360));
  if (h < Scalar(0)) h += Scalar(360);
  out.h = h;
  if (jacobian) {
    // d/dc of num / range, with range = c[hi] - c[lo]
    Vector3<Scalar> d = Vector3<Scalar>::Zero();
    d[a] += Scalar(1) / range;
    d[b] -= Scalar(1) / range;
    d[hi] -= num / (range * range);
    d[lo] += num / (range * range);
    jacobian->dh = scale * d;
  }
  return out;
}

/// cos and sin of a hue given in degrees, after reduction to [0, 360).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> hue_direction(Scalar hue_degrees) {
  Scalar h = std::fmod(hue_degrees, Scalar(360));
  if (h < Scalar(0)) h += Scalar(360);
  const Scalar rad = h * Scalar(std::numbers::pi / 180.0);
  return {std::cos(rad), std::sin(rad)};
}

template <typename Scalar>
struct HsvLossResult {
  Scalar loss = 0;
  VertexMatrix<Scalar> grad;  // d loss / d stylized colors, n x 3
};

/// Weighted mean of hue (through cos/sin), saturation and value differences
/// between initial and stylized colors. Gradients outside the target set are
/// zero.
template <typename Scalar>
HsvLossResult<Scalar> hsv_loss(const VertexMatrix<Scalar>& initial, const VertexMatrix<Scalar>& stylized,
                               const LabelSplit& target, const HsvOptions& options = {}) {
  if (initial.rows() != stylized.rows() || Eigen::Index(target.vertex_count()) != initial.rows()) {
    throw std::invalid_argument("hsv_loss: color arrays and label split differ in size");
  }
  const HsvWeights& w = options.weights;
  if (w.hue < 0 || w.saturation < 0 || w.value < 0) throw std::invalid_argument("HSV weights must be non-negative");

  HsvLossResult<Scalar> result;
  result.grad = VertexMatrix<Scalar>::Zero(initial.rows(), 3);
  if (target.target_empty) return result;

  const bool absolute = options.form == HsvLossForm::kAbsolute;
  auto sign = [](Scalar x) { return Scalar((x > Scalar(0)) - (x < Scalar(0))); };
  auto term = [&](Scalar diff) { return absolute ? std::abs(diff) : diff; };
  // derivative of term(diff) with respect to diff
  auto dterm = [&](Scalar diff) { return absolute ? sign(diff) : Scalar(1); };

  const Scalar count = options.scope == HsvMeanScope::kTarget ? Scalar(target.target.size())
                                                               : Scalar(initial.rows());
  const Scalar deg_to_rad = Scalar(std::numbers::pi / 180.0);
  Scalar hue_sum = 0, sat_sum = 0, val_sum = 0;

  auto accumulate = [&](Eigen::Index i, bool with_grad) {
    const HsvColor<Scalar> a = rgb_to_hsv<Scalar>(initial.row(i).transpose(), options.hue_formula);
    HsvJacobian<Scalar> jac;
    const HsvColor<Scalar> b =
        rgb_to_hsv<Scalar>(stylized.row(i).transpose(), options.hue_formula, with_grad ? &jac : nullptr);
    const auto da = hue_direction(a.h);
    const auto db = hue_direction(b.h);
    const Scalar dcos = da[0] - db[0];
    const Scalar dsin = da[1] - db[1];
    hue_sum += absolute ? std::abs(dcos) + std::abs(dsin) : dcos + dsin;
    sat_sum += term(a.s - b.s);
    val_sum += term(a.v - b.v);
    if (!with_grad) return;
    // d(cos a - cos b)/dh_b = sin b and d(sin a - sin b)/dh_b = -cos b, per radian
    const Scalar dhue = (dterm(dcos) * db[1] - dterm(dsin) * db[0]) * deg_to_rad;
    const Vector3<Scalar> g = Scalar(w.hue) * dhue * jac.dh -
                              Scalar(w.saturation) * dterm(a.s - b.s) * jac.ds -
                              Scalar(w.value) * dterm(a.v - b.v) * jac.dv;
    result.grad.row(i) = g.transpose() / count;
  };

  if (options.scope == HsvMeanScope::kTarget) {
    for (std::int32_t i : target.target) accumulate(i, true);
  } else {
    for (Eigen::Index i = 0; i < initial.rows(); ++i) accumulate(i, target.contains(std::int32_t(i)));
  }
  result.loss = (Scalar(w.hue) * hue_sum + Scalar(w.saturation) * sat_sum + Scalar(w.value) * val_sum) / count;
  return result;
}

}  // namespace lasst
