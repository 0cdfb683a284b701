// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lasst/core.hpp"

namespace lasst {

/// Labeled, vertex-colored triangle mesh. Face indices are 0-based; the PLY
/// boundary is the only place any other convention could appear.
template <typename Scalar>
struct SceneMesh {
  VertexMatrix<Scalar> vertices;
  FaceMatrix faces;
  VertexMatrix<Scalar> colors;  // RGB in [0,1]
  std::vector<Label> labels;

  Eigen::Index vertex_count() const { return vertices.rows(); }
  Eigen::Index face_count() const { return faces.rows(); }

  template <typename NewScalar>
  SceneMesh<NewScalar> cast() const {
    SceneMesh<NewScalar> out;
    out.vertices = vertices.template cast<NewScalar>();
    out.faces = faces;
    out.colors = colors.template cast<NewScalar>();
    out.labels = labels;
    return out;
  }
};

class MeshError : public std::runtime_error {
 public:
  enum class Kind {
    kFileNotFound,
    kMalformedHeader,
    kMalformedBody,
    kMissingProperty,
    kMissingLabels,
    kIndexOutOfRange,
    kLabelFileMismatch,
    kInvalidMesh,
    kDegenerateMesh,
    kIo,
  };

  MeshError(Kind kind, const std::string& what, std::int64_t index = -1)
      : std::runtime_error(what), kind_(kind), index_(index) {}

  Kind kind() const { return kind_; }
  /// Offending face/vertex index for kIndexOutOfRange, -1 otherwise.
  std::int64_t index() const { return index_; }

 private:
  Kind kind_;
  std::int64_t index_;
};

/// Throws MeshError(kInvalidMesh / kIndexOutOfRange) if any type invariant fails.
template <typename Scalar>
void validate_mesh(const SceneMesh<Scalar>& mesh);

/// Reads a PLY (ascii, binary_little_endian or binary_big_endian). Labels come
/// from the per-vertex `label` property unless `label_file` is given, in which
/// case the sidecar wins. Colors are stored as bytes and divided by 255.
template <typename Scalar>
SceneMesh<Scalar> load_mesh(const std::filesystem::path& path,
                            const std::optional<std::filesystem::path>& label_file = std::nullopt);

/// One base-10 integer per line; the count must match `vertex_count`.
std::vector<Label> load_label_file(const std::filesystem::path& path, Eigen::Index vertex_count);

enum class PlyEncoding { kBinaryLittleEndian, kAscii };

/// x = scale * (v + translation); the inverse is v = x / scale - translation.
template <typename Scalar>
struct UnitBallTransform {
  Scalar scale = Scalar(1);
  Vector3<Scalar> translation = Vector3<Scalar>::Zero();

  VertexMatrix<Scalar> apply(const VertexMatrix<Scalar>& v) const {
    return ((v.rowwise() + translation.transpose()) * scale).eval();
  }
  VertexMatrix<Scalar> invert(const VertexMatrix<Scalar>& x) const {
    return ((x / scale).rowwise() - translation.transpose()).eval();
  }
};

template <typename Scalar>
void save_mesh(const SceneMesh<Scalar>& mesh, const UnitBallTransform<Scalar>& transform,
               const std::filesystem::path& path,
               PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian);

template <typename Scalar>
struct NormalizedMesh {
  SceneMesh<Scalar> mesh;
  UnitBallTransform<Scalar> transform;
};

/// Centers the vertex centroid at the origin and scales so the farthest vertex
/// has norm 1.
template <typename Scalar>
NormalizedMesh<Scalar> normalize_to_unit_ball(const SceneMesh<Scalar>& mesh) {
  if (mesh.vertex_count() == 0) {
    throw MeshError(MeshError::Kind::kDegenerateMesh, "cannot normalize an empty mesh");
  }
  NormalizedMesh<Scalar> out{mesh, {}};
  const Vector3<Scalar> centroid = mesh.vertices.colwise().mean().transpose();
  const VertexMatrix<Scalar> centered = mesh.vertices.rowwise() - centroid.transpose();
  const Scalar radius = centered.rowwise().norm().maxCoeff();
  if (!(radius > Scalar(0))) {
    throw MeshError(MeshError::Kind::kDegenerateMesh,
                    "all vertices coincide; no unit-ball normalization exists");
  }
  out.transform.translation = -centroid;
  out.transform.scale = Scalar(1) / radius;
  out.mesh.vertices = out.transform.apply(mesh.vertices);
  return out;
}

/// Partition of vertex indices into a target label and everything else.
struct LabelSplit {
  Label label = 0;
  std::vector<std::int32_t> target;
  std::vector<std::int32_t> complement;
  std::vector<std::uint8_t> in_target;  // per-vertex membership mask
  bool target_empty = true;

  std::size_t vertex_count() const { return in_target.size(); }
  bool contains(std::int32_t vertex) const { return in_target[std::size_t(vertex)] != 0; }

  static LabelSplit all(std::size_t vertex_count, Label label = 0) {
    LabelSplit s;
    s.label = label;
    s.in_target.assign(vertex_count, 1);
    for (std::size_t i = 0; i < vertex_count; ++i) s.target.push_back(std::int32_t(i));
    s.target_empty = vertex_count == 0;
    return s;
  }
  static LabelSplit none(std::size_t vertex_count, Label label = 0) {
    LabelSplit s;
    s.label = label;
    s.in_target.assign(vertex_count, 0);
    for (std::size_t i = 0; i < vertex_count; ++i) s.complement.push_back(std::int32_t(i));
    return s;
  }
};

inline LabelSplit split_by_label(const std::vector<Label>& labels, Label label) {
  LabelSplit s;
  s.label = label;
  s.in_target.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool hit = labels[i] == label;
    s.in_target[i] = hit ? 1 : 0;
    (hit ? s.target : s.complement).push_back(std::int32_t(i));
  }
  s.target_empty = s.target.empty();
  return s;
}

template <typename Scalar>
LabelSplit split_by_label(const SceneMesh<Scalar>& mesh, Label label) {
  return split_by_label(mesh.labels, label);
}

}  // namespace lasst
