// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>

#include "lasst/adam.hpp"
#include "lasst/encoder.hpp"
#include "lasst/mesh.hpp"
#include "lasst/mlp.hpp"

namespace lasst {

struct VcdnConfig {
  int n_freq = 128;
  double fourier_sigma = 5.0;
  int hidden_layers = 4;
  int hidden_width = 256;
  double residue_scale = 0.5;
  AdamConfig adam;
};

/// Vertex color deviation network: Fourier encoder, residue MLP and the Adam
/// state that owns its parameters for one optimization job.
template <typename Scalar>
struct ColorDeviationNet {
  FourierEncoder<Scalar> encoder;
  ColorMLP<Scalar> mlp;
  AdamState<Scalar> adam;

  static ColorDeviationNet create(const VcdnConfig& config, std::uint64_t seed) {
    ColorDeviationNet net;
    net.encoder =
        FourierEncoder<Scalar>::sample(config.n_freq, Scalar(config.fourier_sigma), derive_seed(seed, 1));
    MlpShape shape;
    shape.input_dim = net.encoder.output_dim();
    shape.hidden_layers = config.hidden_layers;
    shape.hidden_width = config.hidden_width;
    shape.output_dim = 3;
    shape.output_scale = config.residue_scale;
    net.mlp = ColorMLP<Scalar>::initialize(shape, derive_seed(seed, 2));
    net.adam = AdamState<Scalar>::zeros_like(net.mlp.parameters(), config.adam);
    return net;
  }

  /// Residues (N x 3) for the listed vertex rows.
  VertexMatrix<Scalar> residues(const VertexMatrix<Scalar>& vertices,
                                std::span<const std::int32_t> rows,
                                MlpCache<Scalar>* cache = nullptr) const {
    return mlp.forward(encoder.encode_rows(vertices, rows), cache).transpose();
  }

  void step(const ParameterList<Scalar>& grads) { adam_step(adam, mlp.parameters(), grads); }
};

/// clamp(initial + residue, 0, 1) componentwise.
template <typename Scalar>
VertexMatrix<Scalar> clamp_colors(const VertexMatrix<Scalar>& pre_clamp) {
  return pre_clamp.cwiseMax(Scalar(0)).cwiseMin(Scalar(1));
}

/// Pulls a color gradient back through the clamp: zero where the input was
/// clamped (strictly outside [0,1]), identity elsewhere.
template <typename Scalar>
VertexMatrix<Scalar> clamp_pullback(const VertexMatrix<Scalar>& pre_clamp,
                                    const VertexMatrix<Scalar>& grad_colors) {
  const auto inside = (pre_clamp.array() >= Scalar(0) && pre_clamp.array() <= Scalar(1));
  return (grad_colors.array() * inside.template cast<Scalar>()).matrix();
}

/// Stylized colors for every vertex of a normalized mesh.
template <typename Scalar>
VertexMatrix<Scalar> stylized_colors(const SceneMesh<Scalar>& mesh, const ColorDeviationNet<Scalar>& net) {
  std::vector<std::int32_t> rows(std::size_t(mesh.vertex_count()));
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = std::int32_t(i);
  return clamp_colors<Scalar>(mesh.colors + net.residues(mesh.vertices, rows));
}

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary dump: "VCDN" | u32 version | u32 tensor count | tensors, each as
/// u32 rows | u32 cols | rows*cols float32 (row-major), all little-endian.
/// Tensor order: B, MLP (W0, b0, ...), Adam meta [lr, b1, b2, eps, step,
/// residue scale], first moments, second moments.
template <typename Scalar>
void save_checkpoint(const ColorDeviationNet<Scalar>& net, const std::filesystem::path& path);

template <typename Scalar>
ColorDeviationNet<Scalar> load_checkpoint(const std::filesystem::path& path);

}  // namespace lasst
