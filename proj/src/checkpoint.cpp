// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include <fstream>
#include <iterator>

#include "binary_io.hpp"
#include "lasst/vcdn.hpp"

namespace lasst {
namespace {

using detail::append_le;
using detail::ByteReader;
using detail::Bytes;

template <typename Scalar>
void append_tensor(Bytes& out, const Matrix<Scalar>& m) {
  append_le(out, std::uint32_t(m.rows()));
  append_le(out, std::uint32_t(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) append_le(out, float(m(i, j)));
  }
}

template <typename Scalar>
Matrix<Scalar> read_tensor(ByteReader& in) {
  const auto rows = in.read<std::uint32_t>();
  const auto cols = in.read<std::uint32_t>();
  if (std::uint64_t(rows) * cols * 4 > in.remaining()) {
    throw CheckpointError("checkpoint tensor header claims more data than the file holds");
  }
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = Scalar(in.read<float>());
  }
  return m;
}

}  // namespace

template <typename Scalar>
void save_checkpoint(const ColorDeviationNet<Scalar>& net, const std::filesystem::path& path) {
  const auto& params = net.mlp.parameters();
  Bytes out;
  detail::append_string(out, "VCDN");
  append_le(out, kCheckpointVersion);
  append_le(out, std::uint32_t(1 + params.size() * 3 + 1));
  append_tensor<Scalar>(out, net.encoder.frequencies);
  for (const auto& p : params) append_tensor<Scalar>(out, p);
  Matrix<Scalar> meta(1, 6);
  const AdamConfig& c = net.adam.config;
  meta << Scalar(c.learning_rate), Scalar(c.beta1), Scalar(c.beta2), Scalar(c.epsilon),
      Scalar(net.adam.step), Scalar(net.mlp.shape().output_scale);
  append_tensor<Scalar>(out, meta);
  for (const auto& m : net.adam.first_moment) append_tensor<Scalar>(out, m);
  for (const auto& v : net.adam.second_moment) append_tensor<Scalar>(out, v);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
  if (!f) throw CheckpointError("failed to write checkpoint " + path.string());
}

template <typename Scalar>
ColorDeviationNet<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot open checkpoint " + path.string());
  const Bytes bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  try {
    ByteReader in(bytes);
    auto magic = in.take(4);
    if (std::string(magic.begin(), magic.end()) != "VCDN") throw CheckpointError("bad checkpoint magic");
    if (const auto version = in.read<std::uint32_t>(); version != kCheckpointVersion) {
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = in.read<std::uint32_t>();
    // count = 1 (B) + 3 * n_params + 1 (meta)
    if (count < 2 + 6 || (count - 2) % 3 != 0 || ((count - 2) / 3) % 2 != 0) {
      throw CheckpointError("inconsistent checkpoint tensor count " + std::to_string(count));
    }
    const std::size_t n_params = (count - 2) / 3;
    ColorDeviationNet<Scalar> net;
    net.encoder.frequencies = read_tensor<Scalar>(in);
    if (net.encoder.frequencies.cols() != 3) throw CheckpointError("Fourier matrix must have 3 columns");
    ParameterList<Scalar> params;
    for (std::size_t i = 0; i < n_params; ++i) params.push_back(read_tensor<Scalar>(in));
    const Matrix<Scalar> meta = read_tensor<Scalar>(in);
    if (meta.size() != 6) throw CheckpointError("bad Adam metadata tensor");
    net.mlp = ColorMLP<Scalar>::from_parameters(std::move(params), double(meta(0, 5)));
    if (net.mlp.shape().input_dim != net.encoder.output_dim()) {
      throw CheckpointError("MLP input width does not match the Fourier encoding width");
    }
    net.adam.config = {double(meta(0, 0)), double(meta(0, 1)), double(meta(0, 2)), double(meta(0, 3))};
    net.adam.step = std::uint64_t(meta(0, 4));
    for (std::size_t i = 0; i < n_params; ++i) net.adam.first_moment.push_back(read_tensor<Scalar>(in));
    for (std::size_t i = 0; i < n_params; ++i) net.adam.second_moment.push_back(read_tensor<Scalar>(in));
    for (std::size_t i = 0; i < n_params; ++i) {
      const auto& p = net.mlp.parameters()[i];
      for (const auto* moments : {&net.adam.first_moment, &net.adam.second_moment}) {
        const auto& m = (*moments)[i];
        if (m.rows() != p.rows() || m.cols() != p.cols()) {
          throw CheckpointError("Adam moment shape differs from its parameter");
        }
      }
    }
    return net;
  } catch (const std::out_of_range&) {
    throw CheckpointError("truncated checkpoint " + path.string());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
}

template void save_checkpoint<float>(const ColorDeviationNet<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const ColorDeviationNet<double>&, const std::filesystem::path&);
template ColorDeviationNet<float> load_checkpoint<float>(const std::filesystem::path&);
template ColorDeviationNet<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace lasst
