// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "lasst/viewpoint.hpp"
#include "support.hpp"

using namespace lasst;

namespace {

SceneMesh<double> normalized_room() { return normalize_to_unit_ball(lasst::testing::toy_room()).mesh; }

RenderSettings<double> small_render() {
  RenderSettings<double> s;
  s.height = s.width = 64;
  return s;
}

}  // namespace

TEST_CASE("zero jitter keeps the base draw") {
  ViewSamplerConfig config;
  config.position_jitter = 0;
  config.focal_jitter = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto d = draw_candidate<double>(config, seed);
    CHECK(d.view.position == d.base_position);
    CHECK(d.view.focal == d.base_focal);
  }
}

TEST_CASE("candidates respect the sampling bounds") {
  const ViewSamplerConfig config;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto d = draw_candidate<double>(config, seed);
    const double r = d.base_position.norm();
    CHECK(r >= config.radius_min - 1e-12);
    CHECK(r <= config.radius_max + 1e-12);
    CHECK(d.base_position.z() / r >= config.min_direction_z - 1e-12);
    CHECK(d.view.focal >= config.focal_min);
    CHECK(d.view.focal <= config.focal_max);
    CHECK(d.base_focal >= config.focal_min);
    CHECK(std::abs(d.view.up.dot(d.view.position)) < 1e-6);
    CHECK(d.view.up.norm() == doctest::Approx(1.0));
    CHECK(d.view.look_at == Vector3<double>::Zero());
  }
}

TEST_CASE("text2mesh sampling uses the whole sphere and a fixed up") {
  ViewSamplerConfig config;
  config.sampling = ViewSampling::kText2Mesh;
  int below = 0;
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    const auto v = sample_candidate<double>(config, seed);
    CHECK(v.up == Vector3<double>(0, 1, 0));
    below += v.position.z() < 0;
  }
  CHECK(below > 100);
}

TEST_CASE("sampling is a function of the seed") {
  const ViewSamplerConfig config;
  const auto a = sample_candidate<double>(config, 9);
  const auto b = sample_candidate<double>(config, 9);
  const auto c = sample_candidate<double>(config, 10);
  CHECK(a.position == b.position);
  CHECK(a.focal == b.focal);
  CHECK(a.position != c.position);
}

TEST_CASE("coverage ratio counts label pixels over all pixels") {
  Fragments<double> f;
  f.height = f.width = 8;
  f.label.assign(64, kBackgroundLabel);
  CHECK(coverage_ratio(f, 3) == 0.0);
  f.label[10] = 3;
  CHECK(coverage_ratio(f, 3) == 1.0 / 64);
  for (int i = 0; i < 16; ++i) f.label[std::size_t(i)] = 3;
  for (int i = 16; i < 40; ++i) f.label[std::size_t(i)] = 1;
  CHECK(coverage_ratio(f, 3) == 0.25);
  CHECK(coverage_ratio(f, 1) == 24.0 / 64);
}

TEST_CASE("selected views lie strictly inside the coverage bounds") {
  const SceneMesh<double> room = normalized_room();
  const auto s = small_render();
  for (Label label : {Label(1), Label(2)}) {
    const auto sel = select_views(room, label, ViewSamplerConfig{}, 5, s);
    REQUIRE(sel.views.size() == 5);
    CHECK(sel.candidates_tried >= 5);
    for (std::size_t j = 0; j < sel.views.size(); ++j) {
      const double again = coverage_ratio(rasterize(room, sel.views[j], s), label);
      CHECK(again == sel.coverage[j]);
      CHECK(again > 0.25);
      CHECK(again < 0.70);
    }
    const auto repeat = select_views(room, label, ViewSamplerConfig{}, 5, s);
    CHECK(repeat.candidates_tried == sel.candidates_tried);
    for (std::size_t j = 0; j < 5; ++j) CHECK(repeat.views[j].position == sel.views[j].position);
  }
}

TEST_CASE("accepted views are the first in-bounds candidates in index order") {
  const SceneMesh<double> room = normalized_room();
  const auto s = small_render();
  ViewSamplerConfig config;
  config.n_views = 3;
  const auto sel = select_views(room, 2, config, 21, s);
  std::vector<Vector3<double>> expect;
  for (std::size_t i = 0; expect.size() < 3; ++i) {
    const auto v = sample_candidate<double>(config, derive_seed(21, i));
    const double r = coverage_ratio(rasterize(room, v, s), 2);
    if (r > 0.25 && r < 0.70) expect.push_back(v.position);
  }
  for (std::size_t j = 0; j < 3; ++j) CHECK(sel.views[j].position == expect[j]);
}

TEST_CASE("selection gives up after the attempt budget") {
  SceneMesh<double> m = normalized_room();
  ViewSamplerConfig config;
  config.max_attempts = 3;
  config.n_views = 2;
  config.coverage_min = 0.95;
  config.coverage_max = 0.99;
  try {
    select_views(m, 3, config, 1, small_render());
    FAIL("expected ViewSelectionError");
  } catch (const ViewSelectionError<double>& e) {
    CHECK(e.best().views.size() == 2);
    CHECK(std::string(e.what()).find("6 candidates") != std::string::npos);
  }
  CHECK_THROWS_AS(select_views(m, 42, ViewSamplerConfig{}, 1, small_render()), ViewSelectionError<double>);
  config.coverage_min = 0.8;
  config.coverage_max = 0.7;
  CHECK_THROWS_AS(select_views(m, 1, config, 1, small_render()), std::invalid_argument);
}
