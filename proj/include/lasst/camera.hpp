// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

#include "lasst/core.hpp"

namespace lasst {

class DegenerateViewError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pinhole camera. `focal` is measured on the normalized image plane, where the
/// shorter image side spans [-1, 1]; the field of view is 2 * atan(1 / focal).
template <typename Scalar>
struct CameraView {
  Vector3<Scalar> position = Vector3<Scalar>(0, 0, 1);
  Scalar focal = Scalar(1);
  Vector3<Scalar> up = Vector3<Scalar>(0, 1, 0);
  Vector3<Scalar> look_at = Vector3<Scalar>::Zero();
};

/// Up vector that keeps the horizon level for a camera at `position` looking at
/// the origin: (-z*x, -z*y, x^2 + y^2), normalized. Orthogonal to `position`.
template <typename Scalar>
Vector3<Scalar> compute_up_vector(const Vector3<Scalar>& position, Scalar epsilon = Scalar(1e-6)) {
  const Scalar x = position.x(), y = position.y(), z = position.z();
  const Scalar planar = x * x + y * y;
  if (!(planar > epsilon)) {
    throw DegenerateViewError("camera position lies on the z-axis; up vector is undefined");
  }
  return Vector3<Scalar>(-z * x, -z * y, planar).normalized();
}

/// Orthonormal camera basis; camera-space depth is measured along `forward`.
template <typename Scalar>
struct CameraFrame {
  Vector3<Scalar> origin;
  Vector3<Scalar> right;
  Vector3<Scalar> up;
  Vector3<Scalar> forward;
  Scalar focal;

  static CameraFrame from_view(const CameraView<Scalar>& view) {
    if (!(view.focal > Scalar(0))) throw DegenerateViewError("focal length must be positive");
    CameraFrame f;
    f.origin = view.position;
    f.focal = view.focal;
    const Vector3<Scalar> dir = view.look_at - view.position;
    if (!(dir.norm() > Scalar(0))) throw DegenerateViewError("camera sits on its look-at point");
    f.forward = dir.normalized();
    const Vector3<Scalar> side = f.forward.cross(view.up);
    if (!(side.norm() > Scalar(1e-9) * view.up.norm())) {
      throw DegenerateViewError("up vector is parallel to the viewing direction");
    }
    f.right = side.normalized();
    f.up = f.right.cross(f.forward);
    return f;
  }

  Vector3<Scalar> to_camera(const Vector3<Scalar>& p) const {
    const Vector3<Scalar> d = p - origin;
    return {d.dot(right), d.dot(up), d.dot(forward)};
  }
};

/// Maps normalized image-plane coordinates to continuous pixel coordinates
/// (row 0 at the top, pixel centers at +0.5).
template <typename Scalar>
struct Viewport {
  int height = 224;
  int width = 224;

  Scalar half_extent() const { return Scalar(std::min(height, width)) / Scalar(2); }

  Eigen::Matrix<Scalar, 2, 1> to_pixel(Scalar u, Scalar v) const {
    return {Scalar(width) / 2 + u * half_extent(), Scalar(height) / 2 - v * half_extent()};
  }
  Eigen::Matrix<Scalar, 2, 1> to_plane(Scalar px, Scalar py) const {
    return {(px - Scalar(width) / 2) / half_extent(), (Scalar(height) / 2 - py) / half_extent()};
  }
};

}  // namespace lasst
