// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lasst/camera.hpp"
#include "lasst/mesh.hpp"

namespace lasst {

inline constexpr std::int32_t kNoFace = -1;

template <typename Scalar>
struct RenderSettings {
  int height = 224;
  int width = 224;
  Vector3<Scalar> background = Vector3<Scalar>::Constant(Scalar(0.5));
  Scalar near_plane = Scalar(1e-3);
};

/// Majority vote over the three vertex labels; ties go to the smallest id.
inline Label face_label(Label a, Label b, Label c) {
  if (a == b || a == c) return a;
  if (b == c) return b;
  return std::min({a, b, c});
}

template <typename Scalar>
std::vector<Label> face_labels(const SceneMesh<Scalar>& mesh) {
  std::vector<Label> out(std::size_t(mesh.face_count()));
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    out[std::size_t(f)] = face_label(mesh.labels[std::size_t(mesh.faces(f, 0))],
                                     mesh.labels[std::size_t(mesh.faces(f, 1))],
                                     mesh.labels[std::size_t(mesh.faces(f, 2))]);
  }
  return out;
}

/// Color-independent part of a rendering: which face and which barycentric
/// weights feed every pixel. Pixels are indexed row-major (y * width + x).
template <typename Scalar>
struct Fragments {
  int height = 0;
  int width = 0;
  Eigen::Index vertex_count = 0;
  std::vector<std::int32_t> face;     // kNoFace for background
  FaceMatrix corners;                 // vertex ids of the source face (P x 3)
  VertexMatrix<Scalar> barycentric;   // perspective-correct weights (P x 3)
  std::vector<Scalar> depth;          // camera-space depth, +inf for background
  std::vector<Label> label;           // kBackgroundLabel for background

  Eigen::Index pixel_count() const { return Eigen::Index(height) * width; }
  bool covered(Eigen::Index p) const { return face[std::size_t(p)] != kNoFace; }
};

template <typename Scalar>
struct RenderResult {
  Image<Scalar> image;
  Fragments<Scalar> fragments;
};

/// Z-buffered rasterization with pixel-center sampling. Faces with a vertex
/// behind the near plane are skipped; no back-face culling; on equal depth
/// the lower face index wins.
template <typename Scalar>
Fragments<Scalar> rasterize(const SceneMesh<Scalar>& mesh, const CameraView<Scalar>& view,
                            const RenderSettings<Scalar>& settings) {
  if (settings.height <= 0 || settings.width <= 0) throw std::invalid_argument("empty render target");
  const CameraFrame<Scalar> frame = CameraFrame<Scalar>::from_view(view);
  const Viewport<Scalar> viewport{settings.height, settings.width};
  const Eigen::Index n_pixels = Eigen::Index(settings.height) * settings.width;

  Fragments<Scalar> frags;
  frags.height = settings.height;
  frags.width = settings.width;
  frags.vertex_count = mesh.vertex_count();
  frags.face.assign(std::size_t(n_pixels), kNoFace);
  frags.corners = FaceMatrix::Constant(n_pixels, 3, -1);
  frags.barycentric = VertexMatrix<Scalar>::Zero(n_pixels, 3);
  frags.depth.assign(std::size_t(n_pixels), std::numeric_limits<Scalar>::infinity());
  frags.label.assign(std::size_t(n_pixels), kBackgroundLabel);

  // camera-space positions and pixel coordinates of every vertex
  const Eigen::Index nv = mesh.vertex_count();
  VertexMatrix<Scalar> cam(nv, 3);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2, Eigen::RowMajor> screen(nv, 2);
  for (Eigen::Index i = 0; i < nv; ++i) {
    const Vector3<Scalar> c = frame.to_camera(mesh.vertices.row(i).transpose());
    cam.row(i) = c.transpose();
    if (c.z() > settings.near_plane) {
      screen.row(i) = viewport.to_pixel(frame.focal * c.x() / c.z(), frame.focal * c.y() / c.z()).transpose();
    }
  }

  const std::vector<Label> labels = face_labels(mesh);
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const std::int32_t a = mesh.faces(f, 0), b = mesh.faces(f, 1), c = mesh.faces(f, 2);
    const Scalar za = cam(a, 2), zb = cam(b, 2), zc = cam(c, 2);
    if (za <= settings.near_plane || zb <= settings.near_plane || zc <= settings.near_plane) continue;
    const Scalar ax = screen(a, 0), ay = screen(a, 1);
    const Scalar bx = screen(b, 0), by = screen(b, 1);
    const Scalar cx = screen(c, 0), cy = screen(c, 1);
    const Scalar area = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
    if (!(std::abs(area) > Scalar(1e-12))) continue;

    const int x0 = std::max(0, int(std::floor(std::min({ax, bx, cx}) - Scalar(0.5))));
    const int x1 = std::min(settings.width - 1, int(std::ceil(std::max({ax, bx, cx}) - Scalar(0.5))));
    const int y0 = std::max(0, int(std::floor(std::min({ay, by, cy}) - Scalar(0.5))));
    const int y1 = std::min(settings.height - 1, int(std::ceil(std::max({ay, by, cy}) - Scalar(0.5))));
    const Scalar inv_area = Scalar(1) / area;

    for (int y = y0; y <= y1; ++y) {
      const Scalar py = Scalar(y) + Scalar(0.5);
      for (int x = x0; x <= x1; ++x) {
        const Scalar px = Scalar(x) + Scalar(0.5);
        // screen-space barycentrics via signed sub-areas
        const Scalar wa = ((bx - px) * (cy - py) - (by - py) * (cx - px)) * inv_area;
        const Scalar wb = ((cx - px) * (ay - py) - (cy - py) * (ax - px)) * inv_area;
        const Scalar wc = ((ax - px) * (by - py) - (ay - py) * (bx - px)) * inv_area;
        if (wa < Scalar(0) || wb < Scalar(0) || wc < Scalar(0)) continue;
        const Scalar pa = wa / za, pb = wb / zb, pc = wc / zc;
        const Scalar sum = pa + pb + pc;
        const Scalar depth = Scalar(1) / sum;
        const auto p = std::size_t(y) * std::size_t(settings.width) + std::size_t(x);
        if (!(depth < frags.depth[p])) continue;
        frags.depth[p] = depth;
        frags.face[p] = std::int32_t(f);
        frags.corners.row(Eigen::Index(p)) << a, b, c;
        frags.barycentric.row(Eigen::Index(p)) << pa / sum, pb / sum, pc / sum;
        frags.label[p] = labels[std::size_t(f)];
      }
    }
  }
  return frags;
}

/// Flat shading: each covered pixel is the barycentric blend of its face's
/// vertex colors. Affine in `colors`.
template <typename Scalar>
Image<Scalar> shade(const Fragments<Scalar>& frags, const VertexMatrix<Scalar>& colors,
                    const Vector3<Scalar>& background) {
  if (colors.rows() != frags.vertex_count) {
    throw std::invalid_argument("shade: color count does not match the rasterized mesh");
  }
  Image<Scalar> img(frags.height, frags.width);
  for (Eigen::Index p = 0; p < frags.pixel_count(); ++p) {
    auto out = img.data.template segment<3>(3 * p);
    if (!frags.covered(p)) {
      out = background;
      continue;
    }
    out = frags.barycentric(p, 0) * colors.row(frags.corners(p, 0)).transpose() +
          frags.barycentric(p, 1) * colors.row(frags.corners(p, 1)).transpose() +
          frags.barycentric(p, 2) * colors.row(frags.corners(p, 2)).transpose();
  }
  return img;
}

template <typename Scalar>
RenderResult<Scalar> render(const VertexMatrix<Scalar>& colors, const SceneMesh<Scalar>& mesh,
                            const CameraView<Scalar>& view, const RenderSettings<Scalar>& settings) {
  RenderResult<Scalar> out;
  out.fragments = rasterize(mesh, view, settings);
  out.image = shade(out.fragments, colors, settings.background);
  return out;
}

/// Transpose of shade() restricted to the target set: every covered pixel
/// sends weight * grad to each corner vertex that carries the target label.
/// Complement vertices receive exactly zero.
template <typename Scalar>
VertexMatrix<Scalar> backprop_to_colors(const Fragments<Scalar>& frags, const Image<Scalar>& grad_image,
                                        const LabelSplit& target) {
  if (grad_image.height != frags.height || grad_image.width != frags.width) {
    throw std::invalid_argument("backprop_to_colors: gradient image shape differs from the render");
  }
  if (Eigen::Index(target.vertex_count()) != frags.vertex_count) {
    throw std::invalid_argument("backprop_to_colors: label split covers a different vertex count");
  }
  VertexMatrix<Scalar> grads = VertexMatrix<Scalar>::Zero(frags.vertex_count, 3);
  for (Eigen::Index p = 0; p < frags.pixel_count(); ++p) {
    if (!frags.covered(p)) continue;
    const auto g = grad_image.data.template segment<3>(3 * p);
    for (int k = 0; k < 3; ++k) {
      const std::int32_t v = frags.corners(p, k);
      if (target.contains(v)) grads.row(v) += frags.barycentric(p, k) * g.transpose();
    }
  }
  return grads;
}

template <typename Scalar>
VertexMatrix<Scalar> backprop_to_colors(const RenderResult<Scalar>& result, const Image<Scalar>& grad_image,
                                        const LabelSplit& target) {
  return backprop_to_colors(result.fragments, grad_image, target);
}

}  // namespace lasst
