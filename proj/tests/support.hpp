// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

// Shared fixtures for the test binaries.

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "lasst/mesh.hpp"
#include "lasst/render.hpp"

namespace lasst::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lasst_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Random triangle soup inside the ball of radius 0.8, labels in {0, 1, 2}.
inline SceneMesh<double> random_scene(std::uint64_t seed, int n_vertices, int n_faces) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-0.8, 0.8), unit(0.0, 1.0);
  std::uniform_int_distribution<int> vertex(0, n_vertices - 1), label(0, 2);
  SceneMesh<double> m;
  m.vertices.resize(n_vertices, 3);
  m.colors.resize(n_vertices, 3);
  for (int i = 0; i < n_vertices; ++i) {
    Vector3<double> p;
    do {
      p = Vector3<double>(coord(rng), coord(rng), coord(rng));
    } while (p.norm() > 0.8);
    m.vertices.row(i) = p.transpose();
    m.colors.row(i) << unit(rng), unit(rng), unit(rng);
    m.labels.push_back(Label(label(rng)));
  }
  m.faces.resize(n_faces, 3);
  for (int f = 0; f < n_faces; ++f) {
    int a = vertex(rng), b = vertex(rng), c = vertex(rng);
    while (b == a) b = vertex(rng);
    while (c == a || c == b) c = vertex(rng);
    m.faces.row(f) << a, b, c;
  }
  return m;
}

/// Camera on a slanted axis looking at the origin from distance 3.
inline CameraView<double> front_view(double focal = 1.6) {
  CameraView<double> v;
  v.position = Vector3<double>(0.4, -2.6, 1.4);
  v.focal = focal;
  v.up = compute_up_vector(v.position);
  return v;
}

/// Subdivided axis-aligned rectangle; returns the index of its first vertex.
inline int add_quad(SceneMesh<double>& m, const Vector3<double>& origin, const Vector3<double>& u,
                    const Vector3<double>& v, int n, const Vector3<double>& color, Label label) {
  const auto base = int(m.vertex_count());
  const int added = (n + 1) * (n + 1);
  m.vertices.conservativeResize(base + added, 3);
  m.colors.conservativeResize(base + added, 3);
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      const int row = base + j * (n + 1) + i;
      m.vertices.row(row) = (origin + u * (double(i) / n) + v * (double(j) / n)).transpose();
      m.colors.row(row) = color.transpose();
      m.labels.push_back(label);
    }
  }
  const auto f0 = int(m.face_count());
  m.faces.conservativeResize(f0 + 2 * n * n, 3);
  int f = f0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const int a = base + j * (n + 1) + i;
      m.faces.row(f++) << a, a + 1, a + n + 2;
      m.faces.row(f++) << a, a + n + 2, a + n + 1;
    }
  }
  return base;
}

/// Floor (label 1), two walls (label 2) and a box (label 3), z up.
inline SceneMesh<double> toy_room(int n = 6) {
  SceneMesh<double> m;
  m.vertices.resize(0, 3);
  m.colors.resize(0, 3);
  m.faces.resize(0, 3);
  add_quad(m, {-2, -2, 0}, {4, 0, 0}, {0, 4, 0}, n, {0.55, 0.45, 0.35}, 1);
  add_quad(m, {-2, 2, 0}, {4, 0, 0}, {0, 0, 2.5}, n, {0.85, 0.85, 0.8}, 2);
  add_quad(m, {-2, -2, 0}, {0, 4, 0}, {0, 0, 2.5}, n, {0.8, 0.82, 0.85}, 2);
  const Vector3<double> lo(-0.6, -0.7, 0), ex(1.8, 0, 0), ey(0, 1.8, 0), ez(0, 0, 1.2), red(0.6, 0.2, 0.2);
  const int k = std::max(2, n / 2);
  add_quad(m, lo + ez, ex, ey, k, red, 3);
  add_quad(m, lo, ex, ez, k, red, 3);
  add_quad(m, lo + ex, ey, ez, k, red, 3);
  add_quad(m, lo + ey, ex, ez, k, red, 3);
  add_quad(m, lo, ey, ez, k, red, 3);
  return m;
}

}  // namespace lasst::testing
