// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

// Writes a small labeled room (floor, two walls, a box) as a PLY.

#include <iostream>

#include "lasst/mesh.hpp"

using lasst::Label;

namespace {

struct Builder {
  std::vector<Eigen::Vector3d> vertices, colors;
  std::vector<Label> labels;
  std::vector<std::array<int, 3>> faces;

  // subdivided quad spanned by origin + s*u + t*v
  void quad(const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v, int n,
            const Eigen::Vector3d& color, Label label) {
    const int base = int(vertices.size());
    for (int j = 0; j <= n; ++j) {
      for (int i = 0; i <= n; ++i) {
        vertices.push_back(origin + u * (double(i) / n) + v * (double(j) / n));
        colors.push_back(color);
        labels.push_back(label);
      }
    }
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const int a = base + j * (n + 1) + i;
        faces.push_back({a, a + 1, a + n + 2});
        faces.push_back({a, a + n + 2, a + n + 1});
      }
    }
  }

  lasst::SceneMesh<double> mesh() const {
    lasst::SceneMesh<double> m;
    m.vertices.resize(Eigen::Index(vertices.size()), 3);
    m.colors.resize(Eigen::Index(vertices.size()), 3);
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      m.vertices.row(Eigen::Index(i)) = vertices[i].transpose();
      m.colors.row(Eigen::Index(i)) = colors[i].transpose();
    }
    m.labels = labels;
    m.faces.resize(Eigen::Index(faces.size()), 3);
    for (std::size_t f = 0; f < faces.size(); ++f) m.faces.row(Eigen::Index(f)) << faces[f][0], faces[f][1], faces[f][2];
    return m;
  }
};

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_scene OUT.ply\n";
    return 2;
  }
  Builder b;
  const int n = 12;
  // z is up; floor on z = 0
  b.quad({-2, -2, 0}, {4, 0, 0}, {0, 4, 0}, n, {0.55, 0.45, 0.35}, 1);                   // floor
  b.quad({-2, 2, 0}, {4, 0, 0}, {0, 0, 2.5}, n, {0.85, 0.85, 0.8}, 2);                   // back wall
  b.quad({-2, -2, 0}, {0, 4, 0}, {0, 0, 2.5}, n, {0.8, 0.82, 0.85}, 2);                  // side wall
  // box, 1.8 x 1.8 x 1.2, sitting on the floor
  const Eigen::Vector3d lo{-0.6, -0.7, 0};
  const Eigen::Vector3d red{0.6, 0.2, 0.2};
  const Eigen::Vector3d ex{1.8, 0, 0}, ey{0, 1.8, 0}, ez{0, 0, 1.2};
  b.quad(lo + ez, ex, ey, 6, red, 3);
  b.quad(lo, ex, ez, 6, red, 3);
  b.quad(lo + ex, ey, ez, 6, red, 3);
  b.quad(lo + ey, ex, ez, 6, red, 3);
  b.quad(lo, ey, ez, 6, red, 3);
  try {
    lasst::save_mesh(b.mesh(), lasst::UnitBallTransform<double>{}, argv[1], lasst::PlyEncoding::kAscii);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
