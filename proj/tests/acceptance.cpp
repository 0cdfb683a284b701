// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks for the recoloring engine. Prints one PASS/FAIL line per
// criterion and exits non-zero if any fail. Tolerances are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lasst/pipeline.hpp"
#include "support.hpp"

using namespace lasst;
using lasst::testing::TempDir;

namespace {

// rasterizer gradient
constexpr int kRasterScenes = 25;
constexpr int kRasterMaxVertices = 10;
constexpr int kRasterImage = 8;
constexpr double kRasterTolerance = 1e-4;  // absolute
constexpr double kRasterSeconds = 10;

// end-to-end gradient
constexpr int kE2eImage = 4;
constexpr double kE2eRelative = 1e-3;
constexpr double kE2eFraction = 0.95;
constexpr double kE2eStep = 1e-6;
constexpr double kE2eSeconds = 60;

// stop-gradient
constexpr int kStopIterations = 50;

// hsv
constexpr int kHsvColors = 10000;
constexpr double kHsvTolerance = 1e-6;

// viewpoint
constexpr double kCoverageMin = 0.25, kCoverageMax = 0.70;
constexpr int kViewSeeds = 10;
constexpr int kUpSamples = 10000;
constexpr double kUpTolerance = 1e-6;

// progress
constexpr int kProgressTrials = 20;
constexpr int kProgressRequired = 19;
constexpr int kProgressIterations = 50;

// round trip
constexpr double kColorTolerance = 1.0 / 255;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Settings shared by the toy-room runs: small images, default everything else.
StyleJob toy_job(const TempDir& dir, std::uint64_t seed, int iterations) {
  StyleJob job;
  job.mesh_path = dir / "room.ply";
  if (!std::filesystem::exists(job.mesh_path)) {
    save_mesh(lasst::testing::toy_room(), UnitBallTransform<double>{}, job.mesh_path);
  }
  job.prompts = {{3, "a bright blue box"}};
  job.iterations = iterations;
  job.resolution = 64;
  job.seed = seed;
  job.output_path = dir / "out.ply";
  job.metrics_path = dir / "metrics.jsonl";
  return job;
}

Outcome rasterizer_gradient() {
  const auto t0 = Clock::now();
  double worst = 0;
  bool complement_zero = true;
  int covered_scenes = 0;
  for (int scene = 0; scene < kRasterScenes; ++scene) {
    const int nv = 4 + scene % (kRasterMaxVertices - 3);
    const SceneMesh<double> m = lasst::testing::random_scene(1000 + std::uint64_t(scene), nv, nv);
    RenderSettings<double> s;
    s.height = s.width = kRasterImage;
    const Fragments<double> f = rasterize(m, lasst::testing::front_view(3.5), s);
    covered_scenes += std::any_of(f.face.begin(), f.face.end(), [](std::int32_t x) { return x != kNoFace; });

    std::mt19937_64 rng{std::uint64_t(scene)};
    std::normal_distribution<double> g;
    Image<double> upstream(kRasterImage, kRasterImage);
    for (Eigen::Index i = 0; i < upstream.data.size(); ++i) upstream.data(i) = g(rng);
    const LabelSplit split = split_by_label(m, 1);
    const VertexMatrix<double> grad = backprop_to_colors(f, upstream, split);
    for (std::int32_t v : split.complement) complement_zero &= grad.row(v).isZero(0);

    const double h = 1e-4;
    for (std::int32_t v : split.target) {
      for (int c = 0; c < 3; ++c) {
        VertexMatrix<double> plus = m.colors, minus = m.colors;
        plus(v, c) += h;
        minus(v, c) -= h;
        const double fd =
            (shade(f, plus, s.background).data.dot(upstream.data) - shade(f, minus, s.background).data.dot(upstream.data)) /
            (2 * h);
        worst = std::max(worst, std::abs(fd - grad(v, c)));
      }
    }
  }
  const double secs = since(t0);
  return {worst <= kRasterTolerance && complement_zero && covered_scenes == kRasterScenes && secs < kRasterSeconds,
          std::to_string(kRasterScenes) + " scenes (" + std::to_string(covered_scenes) + " with coverage), max |fd-an| " +
              fmt(worst) + ", complement zero: " + (complement_zero ? "yes" : "no") + ", " + fmt(secs) + " s"};
}

// Square pyramid: four base corners and an apex.
SceneMesh<double> pyramid() {
  SceneMesh<double> m;
  m.vertices.resize(5, 3);
  m.vertices << -0.6, -0.6, 0, 0.6, -0.6, 0, 0.6, 0.6, 0, -0.6, 0.6, 0, 0.05, -0.1, 0.7;
  m.colors.resize(5, 3);
  m.colors << 0.3, 0.5, 0.6, 0.7, 0.4, 0.3, 0.45, 0.6, 0.35, 0.55, 0.35, 0.65, 0.4, 0.45, 0.5;
  m.faces.resize(6, 3);
  m.faces << 0, 1, 4, 1, 2, 4, 2, 3, 4, 3, 0, 4, 0, 2, 1, 0, 3, 2;
  m.labels = {1, 1, 2, 2, 1};
  return m;
}

Outcome end_to_end_gradient() {
  const auto t0 = Clock::now();
  const SceneMesh<double> mesh = pyramid();
  const LabelSplit split = split_by_label(mesh, 1);
  MockLinearBackend<double> backend(3, {2, true});
  ObjectiveContext ctx;
  ctx.mesh = &mesh;
  ctx.split = &split;
  ctx.query = make_query<double>(backend, "a stone pyramid");
  RenderSettings<double> s;
  s.height = s.width = kE2eImage;
  AugmentConfig augment;
  const Vector3<double> positions[] = {{0.3, -1.6, 1.4}, {-1.5, 0.6, 1.2}};
  for (std::size_t j = 0; j < 2; ++j) {
    CameraView<double> v;
    v.position = positions[j];
    v.focal = 2.0;
    v.up = compute_up_vector(v.position);
    ctx.fragments.push_back(rasterize(mesh, v, s));
    ctx.warps.push_back(SamplingWarp<double>::build(sample_augment_params(kE2eImage, kE2eImage, j, augment),
                                                    kE2eImage, kE2eImage, ctx.background));
  }

  VcdnConfig config;
  config.n_freq = 32;  // default depth, narrower so every parameter can be probed
  config.hidden_width = 32;
  auto net = ColorDeviationNet<double>::create(config, 11);
  const ObjectiveValue value = evaluate_objective(ctx, net, backend, true);

  auto loss_at = [&](std::size_t t, Eigen::Index i, double delta) {
    auto probe = net;
    probe.mlp.parameters()[t].data()[i] += delta;
    return evaluate_objective(ctx, probe, backend, false).loss_total;
  };
  const double h = kE2eStep;
  const double base = value.loss_total;
  int total = 0, matched = 0, excluded = 0, nonzero = 0;
  std::ostringstream log;
  for (std::size_t t = 0; t < net.mlp.parameters().size(); ++t) {
    for (Eigen::Index i = 0; i < net.mlp.parameters()[t].size(); ++i) {
      ++total;
      const double up = loss_at(t, i, h), down = loss_at(t, i, -h);
      const double fd = (up - down) / (2 * h);
      const double an = value.grads[t].data()[i];
      nonzero += an != 0.0;
      if (std::abs(fd - an) <= kE2eRelative * std::max(std::abs(fd), std::abs(an)) + 1e-10) {
        ++matched;
        continue;
      }
      // one-sided slopes that disagree mean a kink (ReLU, clamp, max channel) inside the stencil
      const double right = (up - base) / h, left = (base - down) / h;
      if (std::abs(right - left) > kE2eRelative * std::max(std::abs(right), std::abs(left))) {
        ++excluded;
        log << "    excluded tensor " << t << " index " << i << ": one-sided slopes " << fmt(left) << " / "
            << fmt(right) << "\n";
      } else {
        log << "    mismatch tensor " << t << " index " << i << ": fd " << fmt(fd) << " analytic " << fmt(an) << "\n";
      }
    }
  }
  const double secs = since(t0);
  const int considered = total - excluded;
  const double fraction = considered > 0 ? double(matched) / considered : 0.0;
  std::fputs(log.str().c_str(), stdout);
  return {fraction >= kE2eFraction && nonzero > total / 2 && secs < kE2eSeconds,
          std::to_string(matched) + "/" + std::to_string(considered) + " parameters within " + fmt(kE2eRelative) +
              " relative (" + std::to_string(excluded) + " branch-boundary exclusions of " + std::to_string(total) +
              ", " + std::to_string(nonzero) + " non-zero), " + fmt(secs) + " s"};
}

Outcome stop_gradient() {
  TempDir dir;
  const StyleJob job = toy_job(dir, 5, kStopIterations);
  const SceneMesh<double> input = load_mesh<double>(job.mesh_path);
  MockLinearBackend<double> backend(job.seed);
  const StyleResult r = run_style_transfer(input, job, backend);
  int differing = 0, target_changed = 0;
  for (Eigen::Index v = 0; v < input.vertex_count(); ++v) {
    const bool same = r.mesh.colors.row(v) == input.colors.row(v);
    if (input.labels[std::size_t(v)] == 3) {
      target_changed += !same;
    } else {
      differing += !same;
    }
  }
  return {differing == 0 && r.metrics.iterations.size() == std::size_t(kStopIterations),
          std::to_string(kStopIterations) + " iterations on label 3: " + std::to_string(differing) +
              " non-target vertices differ, " + std::to_string(target_changed) + " target vertices changed"};
}

// Written from the hexcone description, independent of rgb_to_hsv.
void reference_hsv(double r, double g, double b, double& h, double& s, double& v) {
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b}), d = mx - mn;
  v = mx;
  s = mx > 0 ? d / mx : 0;
  if (d == 0) {
    h = 0;
    return;
  }
  double sector;
  if (mx == r) {
    sector = std::fmod((g - b) / d + 6.0, 6.0);
  } else if (mx == g) {
    sector = (b - r) / d + 2.0;
  } else {
    sector = (r - g) / d + 4.0;
  }
  h = sector / 6.0 * 2.0 * M_PI;  // radians
}

Outcome hsv_oracle() {
  std::mt19937_64 rng(2026);
  std::uniform_real_distribution<double> u(0, 1);
  double worst = 0;
  VertexMatrix<double> colors(kHsvColors, 3);
  for (int i = 0; i < kHsvColors; ++i) {
    const Vector3<double> c(u(rng), u(rng), u(rng));
    // a few exact ties and grays
    Vector3<double> col = c;
    if (i % 50 == 0) col[1] = col[0];
    if (i % 97 == 0) col = Vector3<double>::Constant(c[2]);
    colors.row(i) = col.transpose();
    const auto got = rgb_to_hsv<double>(col);
    double h, s, v;
    reference_hsv(col[0], col[1], col[2], h, s, v);
    const auto dir = hue_direction(got.h);
    worst = std::max({worst, std::abs(dir[0] - std::cos(h)), std::abs(dir[1] - std::sin(h)), std::abs(got.s - s),
                      std::abs(got.v - v)});
  }
  const LabelSplit all = LabelSplit::all(kHsvColors);
  double identity_loss = 0;
  for (HsvLossForm form : {HsvLossForm::kSigned, HsvLossForm::kAbsolute}) {
    for (HsvMeanScope scope : {HsvMeanScope::kTarget, HsvMeanScope::kAll}) {
      HsvOptions o;
      o.form = form;
      o.scope = scope;
      identity_loss = std::max(identity_loss, std::abs(hsv_loss(colors, colors, all, o).loss));
    }
  }
  return {worst <= kHsvTolerance && identity_loss == 0.0,
          std::to_string(kHsvColors) + " colors, max deviation " + fmt(worst) + ", hsv_loss(c,c) = " +
              fmt(identity_loss)};
}

// Floor of area 4 (label 1) plus two walls of area 3 each: the floor holds 40%.
SceneMesh<double> forty_percent_scene() {
  SceneMesh<double> m;
  m.vertices.resize(0, 3);
  m.colors.resize(0, 3);
  m.faces.resize(0, 3);
  lasst::testing::add_quad(m, {-1, -1, 0}, {2, 0, 0}, {0, 2, 0}, 8, {0.5, 0.4, 0.3}, 1);
  lasst::testing::add_quad(m, {-1, 1, 0}, {2, 0, 0}, {0, 0, 1.5}, 8, {0.8, 0.8, 0.8}, 2);
  lasst::testing::add_quad(m, {-1, -1, 0}, {0, 2, 0}, {0, 0, 1.5}, 8, {0.7, 0.7, 0.75}, 2);
  return normalize_to_unit_ball(m).mesh;
}

Outcome viewpoint_bounds() {
  const SceneMesh<double> scene = forty_percent_scene();
  RenderSettings<double> s;  // 224 x 224
  ViewSamplerConfig config;
  config.coverage_min = kCoverageMin;
  config.coverage_max = kCoverageMax;
  int views = 0, inside = 0;
  double lo = 1, hi = 0;
  for (int seed = 0; seed < kViewSeeds; ++seed) {
    const auto sel = select_views(scene, 1, config, std::uint64_t(seed), s);
    for (const auto& v : sel.views) {
      const double r = coverage_ratio(rasterize(scene, v, s), 1);
      ++views;
      inside += r > kCoverageMin && r < kCoverageMax;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3, 3);
  double worst = 0;
  int drawn = 0;
  while (drawn < kUpSamples) {
    const Vector3<double> p(u(rng), u(rng), u(rng));
    if (p.x() * p.x() + p.y() * p.y() <= 1e-6) continue;
    ++drawn;
    worst = std::max(worst, std::abs(compute_up_vector(p).dot(p)));
  }
  return {views > 0 && inside == views && worst <= kUpTolerance,
          std::to_string(inside) + "/" + std::to_string(views) + " views inside (" + fmt(kCoverageMin) + ", " +
              fmt(kCoverageMax) + "), measured range [" + fmt(lo) + ", " + fmt(hi) + "]; max |up.p| " + fmt(worst) +
              " over " + std::to_string(kUpSamples) + " positions"};
}

Outcome optimization_progress() {
  TempDir dir;
  const SceneMesh<double> input = load_mesh<double>(toy_job(dir, 0, 1).mesh_path);
  int improved = 0;
  std::ostringstream trace;
  for (int trial = 0; trial < kProgressTrials; ++trial) {
    const StyleJob job = toy_job(dir, std::uint64_t(100 + trial), kProgressIterations);
    MockLinearBackend<double> backend(job.seed);
    const StyleResult r = run_style_transfer(input, job, backend);
    const double first = r.metrics.iterations.front().loss_total;
    const double last = r.metrics.iterations.back().loss_total;
    improved += last < first;
    if (!(last < first)) trace << "    seed " << job.seed << ": " << fmt(first) << " -> " << fmt(last) << "\n";
  }
  std::fputs(trace.str().c_str(), stdout);
  return {improved >= kProgressRequired, "loss(iter 50) < loss(iter 1) in " + std::to_string(improved) + "/" +
                                             std::to_string(kProgressTrials) + " seeds"};
}

// Metrics lines with the wall-clock fields removed.
std::string metrics_without_timing(const std::filesystem::path& path) {
  std::istringstream in(lasst::testing::read_file(path));
  std::string out;
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    j.erase("seconds");
    out += j.dump() + "\n";
  }
  return out;
}

Outcome reproducibility() {
  TempDir a, b;
  StyleJob ja = toy_job(a, 42, 5), jb = toy_job(b, 42, 5);
  ja.prompts = jb.prompts = {{1, "a wooden floor"}, {3, "a bright blue box"}};
  run_job(ja);
  run_job(jb);
  const bool mesh_same = lasst::testing::read_file(ja.output_path) == lasst::testing::read_file(jb.output_path);
  const bool metrics_same = metrics_without_timing(*ja.metrics_path) == metrics_without_timing(*jb.metrics_path);
  return {mesh_same && metrics_same, std::string("output PLY bytes ") + (mesh_same ? "identical" : "differ") +
                                         ", metrics (wall-clock fields excluded) " +
                                         (metrics_same ? "identical" : "differ")};
}

Outcome mesh_round_trip() {
  TempDir dir;
  int checked = 0;
  bool exact = true;
  double worst_color = 0;
  for (PlyEncoding enc : {PlyEncoding::kAscii, PlyEncoding::kBinaryLittleEndian}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      SceneMesh<double> m = lasst::testing::random_scene(seed, 60, 80);
      if (seed == 3) m = lasst::testing::toy_room();
      const auto first = dir / "first.ply", second = dir / "second.ply";
      save_mesh(m, UnitBallTransform<double>{}, first, enc);
      const SceneMesh<double> a = load_mesh<double>(first);
      save_mesh(a, UnitBallTransform<double>{}, second, enc);
      const SceneMesh<double> b = load_mesh<double>(second);
      exact &= a.vertices == b.vertices && a.faces == b.faces && a.labels == b.labels;
      exact &= m.faces == a.faces && m.labels == a.labels;
      exact &= (m.vertices - a.vertices).cwiseAbs().maxCoeff() <= 1e-6;  // float32 storage of the original
      worst_color = std::max({worst_color, (m.colors - a.colors).cwiseAbs().maxCoeff(),
                              (a.colors - b.colors).cwiseAbs().maxCoeff()});
      ++checked;
    }
  }
  return {exact && worst_color <= kColorTolerance,
          std::to_string(checked) + " meshes, positions/faces/labels " + (exact ? "exact" : "changed") +
              ", max color error " + fmt(worst_color)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"rasterizer gradient exactness", rasterizer_gradient},
      {"end-to-end gradient check", end_to_end_gradient},
      {"stop-gradient invariant", stop_gradient},
      {"HSV oracle", hsv_oracle},
      {"viewpoint bounds", viewpoint_bounds},
      {"optimization progress", optimization_progress},
      {"reproducibility", reproducibility},
      {"mesh round trip", mesh_round_trip},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s  %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
