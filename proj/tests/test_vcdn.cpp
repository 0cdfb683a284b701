// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "lasst/vcdn.hpp"
#include "support.hpp"

using namespace lasst;

namespace {

Matrix<double> random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix<double> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = g(rng);
  }
  return m;
}

// Forward pass written with explicit loops only.
Matrix<double> naive_forward(const ParameterList<double>& p, const Matrix<double>& x, double scale) {
  Matrix<double> out(p[p.size() - 2].rows(), x.cols());
  for (Eigen::Index n = 0; n < x.cols(); ++n) {
    std::vector<double> a(std::size_t(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) a[std::size_t(i)] = x(i, n);
    for (std::size_t l = 0; l < p.size(); l += 2) {
      const Matrix<double>& w = p[l];
      std::vector<double> z(std::size_t(w.rows()));
      for (Eigen::Index r = 0; r < w.rows(); ++r) {
        double acc = p[l + 1](r, 0);
        for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * a[std::size_t(c)];
        const bool last = l + 2 == p.size();
        z[std::size_t(r)] = last ? scale * std::tanh(acc) : std::max(0.0, acc);
      }
      a = z;
    }
    for (std::size_t r = 0; r < a.size(); ++r) out(Eigen::Index(r), n) = a[r];
  }
  return out;
}

bool close(double analytic, double numeric, double rel, double abs_floor) {
  return std::abs(analytic - numeric) <= rel * std::max(std::abs(analytic), std::abs(numeric)) + abs_floor;
}

}  // namespace

TEST_CASE("Fourier encoding values") {
  FourierEncoder<double> enc = FourierEncoder<double>::sample(16, 5.0, 3);
  const Vector<double> zero = enc.encode(Vector3<double>::Zero());
  CHECK(zero.head(16) == Vector<double>::Ones(16));
  CHECK(zero.tail(16) == Vector<double>::Zero(16));

  FourierEncoder<double> one;
  one.frequencies.resize(1, 3);
  one.frequencies << 1, 0, 0;
  const Vector<double> q = one.encode(Vector3<double>(0.25, 0, 0));
  CHECK(std::abs(q(0)) < 1e-15);
  CHECK(q(1) == doctest::Approx(1.0));
}

TEST_CASE("Fourier encoding matches a scalar loop") {
  const auto enc = FourierEncoder<double>::sample(32, 5.0, 99);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-0.6, 0.6);
  VertexMatrix<double> pts(20, 3);
  for (Eigen::Index i = 0; i < 20; ++i) pts.row(i) << u(rng), u(rng), u(rng);
  std::vector<std::int32_t> rows{19, 0, 7, 7, 3};
  const Matrix<double> batch = enc.encode_rows(pts, rows);
  REQUIRE(batch.rows() == 64);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (int f = 0; f < 32; ++f) {
      double phase = 0;
      for (int c = 0; c < 3; ++c) phase += enc.frequencies(f, c) * pts(rows[k], c);
      phase *= 2.0 * M_PI;
      CHECK(std::abs(batch(f, Eigen::Index(k)) - std::cos(phase)) < 1e-12);
      CHECK(std::abs(batch(32 + f, Eigen::Index(k)) - std::sin(phase)) < 1e-12);
    }
  }
  CHECK(batch.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("Fourier frequencies are seeded Gaussians") {
  const auto a = FourierEncoder<double>::sample(4000, 5.0, 42);
  const auto b = FourierEncoder<double>::sample(4000, 5.0, 42);
  const auto c = FourierEncoder<double>::sample(4000, 5.0, 43);
  CHECK(a.frequencies == b.frequencies);
  CHECK(a.frequencies != c.frequencies);
  const double mean = a.frequencies.mean();
  const double sd = std::sqrt((a.frequencies.array() - mean).square().mean());
  CHECK(std::abs(mean) < 0.15);
  CHECK(sd == doctest::Approx(5.0).epsilon(0.03));
  CHECK_THROWS_AS(FourierEncoder<double>::sample(0, 5.0, 1), std::invalid_argument);
}

TEST_CASE("MLP forward: trivial cases") {
  SUBCASE("all-zero parameters give zero residues") {
    ColorMLP<double> net = ColorMLP<double>::initialize({8, 2, 5, 3, 0.5}, 1);
    for (auto& p : net.parameters()) p.setZero();
    std::mt19937_64 rng(0);
    CHECK(net.forward(random_matrix(8, 4, rng)).isZero(0));
  }
  SUBCASE("single linear layer by hand") {
    Matrix<double> w(3, 1), b(3, 1);
    w << 1, -2, 0;
    b << 0, 0.5, 0;
    ColorMLP<double> net = ColorMLP<double>::from_parameters({w, b}, 0.5);
    Matrix<double> x(1, 1);
    x << 0.3;
    const Matrix<double> y = net.forward(x);
    CHECK(y(0, 0) == doctest::Approx(0.5 * std::tanh(0.3)));
    CHECK(y(1, 0) == doctest::Approx(0.5 * std::tanh(-0.1)));
    CHECK(y(2, 0) == 0.0);
  }
}

TEST_CASE("MLP forward matches a loop oracle") {
  ColorMLP<double> net = ColorMLP<double>::initialize({16, 3, 12, 3, 0.5}, 7);
  std::mt19937_64 rng(2);
  for (auto& p : net.parameters()) p = random_matrix(p.rows(), p.cols(), rng, 0.5);
  const Matrix<double> x = random_matrix(16, 9, rng);
  const Matrix<double> y = net.forward(x);
  CHECK((y - naive_forward(net.parameters(), x, 0.5)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(y.cwiseAbs().maxCoeff() < 0.5);
}

TEST_CASE("MLP initialization bounds and determinism") {
  const MlpShape shape{256, 4, 256, 3, 0.5};
  const auto a = ColorMLP<double>::initialize(shape, 5);
  const auto b = ColorMLP<double>::initialize(shape, 5);
  REQUIRE(a.parameters().size() == 10);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) CHECK(a.parameters()[i] == b.parameters()[i]);
  const double hidden_bound = std::sqrt(6.0 / 256);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.parameters()[std::size_t(2 * l)].cwiseAbs().maxCoeff() <= hidden_bound);
    CHECK(a.parameters()[std::size_t(2 * l)].cwiseAbs().maxCoeff() > 0.9 * hidden_bound);
  }
  CHECK(a.parameters()[8].cwiseAbs().maxCoeff() <= 1.0 / 16);
  CHECK(a.parameter_count() == 256 * 256 * 4 + 256 * 4 + 3 * 256 + 3);
}

TEST_CASE("MLP forward rejects non-finite activations") {
  ColorMLP<double> net = ColorMLP<double>::initialize({4, 1, 4, 3, 0.5}, 1);
  Matrix<double> x = Matrix<double>::Ones(4, 2);
  x(1, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(net.forward(x), NumericalError);
  CHECK_THROWS_AS(net.forward(Matrix<double>::Ones(5, 1)), std::invalid_argument);
}

TEST_CASE("MLP backward matches central differences") {
  ColorMLP<double> net = ColorMLP<double>::initialize({8, 2, 6, 3, 0.5}, 11);
  std::mt19937_64 rng(4);
  const Matrix<double> x = random_matrix(8, 10, rng);  // 10 "vertices"
  const Matrix<double> upstream = random_matrix(3, 10, rng);
  MlpCache<double> cache;
  net.forward(x, &cache);
  const ParameterList<double> grads = net.backward(cache, upstream);

  auto loss = [&](const ColorMLP<double>& n) { return (n.forward(x).array() * upstream.array()).sum(); };
  const double h = 1e-4;
  int checked = 0, failures = 0;
  for (std::size_t t = 0; t < net.parameters().size(); ++t) {
    for (Eigen::Index i = 0; i < net.parameters()[t].size(); ++i) {
      ColorMLP<double> plus = net, minus = net;
      plus.parameters()[t].data()[i] += h;
      minus.parameters()[t].data()[i] -= h;
      const double fd = (loss(plus) - loss(minus)) / (2 * h);
      ++checked;
      if (!close(grads[t].data()[i], fd, 1e-4, 1e-8)) ++failures;
    }
  }
  CHECK(checked == net.parameter_count());
  CHECK(failures == 0);
}

TEST_CASE("MLP backward is linear in the upstream gradient") {
  ColorMLP<double> net = ColorMLP<double>::initialize({8, 2, 6, 3, 0.5}, 12);
  std::mt19937_64 rng(5);
  const Matrix<double> x = random_matrix(8, 5, rng);
  MlpCache<double> cache;
  net.forward(x, &cache);
  const Matrix<double> g = random_matrix(3, 5, rng);
  const auto g1 = net.backward(cache, g);
  const auto g2 = net.backward(cache, 2.0 * g);
  const auto g0 = net.backward(cache, Matrix<double>::Zero(3, 5));
  for (std::size_t t = 0; t < g1.size(); ++t) {
    CHECK((g2[t] - 2.0 * g1[t]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(g0[t].isZero(0));
  }
  CHECK_THROWS_AS(net.backward(cache, Matrix<double>::Zero(3, 4)), std::invalid_argument);
}

TEST_CASE("Adam first step moves by the learning rate") {
  AdamConfig config;
  config.learning_rate = 0.1;
  ParameterList<double> params{Matrix<double>::Constant(2, 2, 3.0)};
  auto state = AdamState<double>::zeros_like(params, config);
  adam_step(state, params, {Matrix<double>::Ones(2, 2)});
  CHECK(state.step == 1);
  CHECK(params[0](0, 0) == doctest::Approx(3.0 - 0.1).epsilon(1e-7));

  ParameterList<double> still{Matrix<double>::Constant(1, 3, -1.0)};
  auto s2 = AdamState<double>::zeros_like(still, config);
  adam_step(s2, still, {Matrix<double>::Zero(1, 3)});
  CHECK(still[0] == Matrix<double>::Constant(1, 3, -1.0));
}

TEST_CASE("Adam matches a scalar trace") {
  AdamConfig config;
  config.learning_rate = 0.05;
  ParameterList<double> params{Matrix<double>::Constant(1, 1, 0.7)};
  auto state = AdamState<double>::zeros_like(params, config);
  const double g_seq[] = {0.3, -1.2, 0.8};
  double x = 0.7, m = 0, v = 0;
  for (int t = 1; t <= 3; ++t) {
    const double g = g_seq[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    adam_step(state, params, {Matrix<double>::Constant(1, 1, g)});
    CHECK(params[0](0, 0) == doctest::Approx(x).epsilon(1e-13));
  }
  CHECK(state.step == 3);
  CHECK_THROWS_AS(adam_step(state, params, {Matrix<double>::Zero(2, 1)}), std::invalid_argument);
}

TEST_CASE("stylized colors and the clamp") {
  VertexMatrix<double> pre(2, 3);
  pre << 1.4, 0.9, 0.9, -0.2, 0.0, 1.0;
  const VertexMatrix<double> c = clamp_colors(pre);
  CHECK(c.row(0) == Eigen::RowVector3d(1.0, 0.9, 0.9));
  CHECK(c.row(1) == Eigen::RowVector3d(0.0, 0.0, 1.0));
  const VertexMatrix<double> g = clamp_pullback<double>(pre, VertexMatrix<double>::Ones(2, 3));
  CHECK(g.row(0) == Eigen::RowVector3d(0, 1, 1));
  CHECK(g.row(1) == Eigen::RowVector3d(0, 1, 1));  // 0 and 1 are inside

  SceneMesh<double> mesh = lasst::testing::random_scene(1, 30, 5);
  auto net = ColorDeviationNet<double>::create(VcdnConfig{}, 9);
  for (auto& p : net.mlp.parameters()) p.setZero();
  CHECK(stylized_colors(mesh, net) == mesh.colors);

  std::mt19937_64 rng(8);
  for (auto& p : net.mlp.parameters()) p = random_matrix(p.rows(), p.cols(), rng, 2.0);
  const VertexMatrix<double> s = stylized_colors(mesh, net);
  CHECK(s.minCoeff() >= 0.0);
  CHECK(s.maxCoeff() <= 1.0);
  CHECK((s - mesh.colors).cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("network creation is deterministic per seed") {
  const auto a = ColorDeviationNet<double>::create(VcdnConfig{}, 77);
  const auto b = ColorDeviationNet<double>::create(VcdnConfig{}, 77);
  CHECK(a.encoder.frequencies == b.encoder.frequencies);
  CHECK(a.encoder.output_dim() == 256);
  for (std::size_t i = 0; i < a.mlp.parameters().size(); ++i) CHECK(a.mlp.parameters()[i] == b.mlp.parameters()[i]);
}

TEST_CASE("checkpoint round trip and corruption") {
  lasst::testing::TempDir dir;
  VcdnConfig config;
  config.n_freq = 8;
  config.hidden_layers = 2;
  config.hidden_width = 16;
  auto net = ColorDeviationNet<float>::create(config, 3);
  std::mt19937_64 rng(0);
  ParameterList<float> grads;
  for (const auto& p : net.mlp.parameters()) grads.push_back(random_matrix(p.rows(), p.cols(), rng).cast<float>());
  net.step(grads);
  net.step(grads);
  save_checkpoint(net, dir / "net.bin");

  const auto back = load_checkpoint<float>(dir / "net.bin");
  CHECK(back.encoder.frequencies == net.encoder.frequencies);
  REQUIRE(back.mlp.parameters().size() == net.mlp.parameters().size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    CHECK(back.mlp.parameters()[i] == net.mlp.parameters()[i]);
    CHECK(back.adam.first_moment[i] == net.adam.first_moment[i]);
    CHECK(back.adam.second_moment[i] == net.adam.second_moment[i]);
  }
  CHECK(back.adam.step == 2);
  CHECK(back.adam.config.learning_rate == doctest::Approx(config.adam.learning_rate));
  CHECK(back.mlp.shape().output_scale == doctest::Approx(0.5));

  std::string bytes = lasst::testing::read_file(dir / "net.bin");
  CHECK(bytes.substr(0, 4) == "VCDN");
  std::string bad = bytes;
  bad[4] = 9;  // version
  lasst::testing::write_file(dir / "v.bin", bad);
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "v.bin"), CheckpointError);
  bad = bytes;
  bad[0] = 'X';
  lasst::testing::write_file(dir / "m.bin", bad);
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "m.bin"), CheckpointError);
  lasst::testing::write_file(dir / "t.bin", bytes.substr(0, bytes.size() - 7));
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "t.bin"), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint<float>(dir / "missing.bin"), CheckpointError);
}
