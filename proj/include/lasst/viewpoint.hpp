// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lasst/camera.hpp"
#include "lasst/render.hpp"

namespace lasst {

/// kLasst: upper-hemisphere positions with the level-horizon up vector.
/// kText2Mesh: positions over the whole sphere with a fixed world up (0,1,0).
enum class ViewSampling { kLasst, kText2Mesh };

struct ViewSamplerConfig {
  int n_views = 5;
  double coverage_min = 0.25;
  double coverage_max = 0.70;
  double focal_min = 0.8;
  double focal_max = 2.5;
  double radius_min = 1.0;
  double radius_max = 1.8;
  double min_direction_z = 0.05;
  double position_jitter = 0.05;  // std-dev of the positional disturbance
  double focal_jitter = 0.1;      // std-dev of the focal disturbance
  int max_attempts = 200;         // candidates allowed per requested view
  double axis_epsilon = 1e-6;
  ViewSampling sampling = ViewSampling::kLasst;

  void validate() const {
    if (n_views < 1) throw std::invalid_argument("n_views must be at least 1");
    if (!(coverage_min > 0.0 && coverage_min < coverage_max && coverage_max <= 1.0)) {
      throw std::invalid_argument("coverage bounds must satisfy 0 < min < max <= 1");
    }
    if (!(focal_min > 0.0 && focal_min <= focal_max)) throw std::invalid_argument("bad focal range");
    if (!(radius_min > 0.0 && radius_min <= radius_max)) throw std::invalid_argument("bad radius range");
    if (!(min_direction_z >= -1.0 && min_direction_z < 1.0)) throw std::invalid_argument("bad elevation bound");
    if (position_jitter < 0 || focal_jitter < 0) throw std::invalid_argument("jitter must be non-negative");
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be positive");
  }
};

/// A candidate before and after the random disturbance.
template <typename Scalar>
struct CandidateDraw {
  Vector3<Scalar> base_position;
  Scalar base_focal;
  CameraView<Scalar> view;
};

template <typename Scalar>
CandidateDraw<Scalar> draw_candidate(const ViewSamplerConfig& config, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool lasst = config.sampling == ViewSampling::kLasst;
  const Vector3<Scalar> fixed_up(0, 1, 0);
  for (;;) {
    // uniform direction on the spherical cap z >= z_min (or the whole sphere)
    const double z_min = lasst ? config.min_direction_z : -1.0;
    const double z = z_min + (1.0 - z_min) * unit(rng);
    const double phi = 2.0 * std::numbers::pi * unit(rng);
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double radius = config.radius_min + (config.radius_max - config.radius_min) * unit(rng);
    const double focal = config.focal_min + (config.focal_max - config.focal_min) * unit(rng);

    CandidateDraw<Scalar> d;
    d.base_position = Vector3<Scalar>(Scalar(radius * rho * std::cos(phi)),
                                      Scalar(radius * rho * std::sin(phi)), Scalar(radius * z));
    d.base_focal = Scalar(focal);
    d.view.position = d.base_position;
    d.view.focal = d.base_focal;
    if (config.position_jitter > 0) {
      for (int k = 0; k < 3; ++k) d.view.position[k] += Scalar(config.position_jitter * gauss(rng));
    }
    if (config.focal_jitter > 0) {
      d.view.focal = Scalar(std::clamp(focal + config.focal_jitter * gauss(rng), config.focal_min,
                                       config.focal_max));
    }
    const Vector3<Scalar>& p = d.view.position;
    if (lasst) {
      if (!(p.x() * p.x() + p.y() * p.y() > Scalar(config.axis_epsilon))) continue;
      d.view.up = compute_up_vector(p, Scalar(config.axis_epsilon));
    } else {
      if (!(p.cross(fixed_up).squaredNorm() > Scalar(config.axis_epsilon))) continue;
      d.view.up = fixed_up;
    }
    d.view.look_at = Vector3<Scalar>::Zero();
    return d;
  }
}

template <typename Scalar>
CameraView<Scalar> sample_candidate(const ViewSamplerConfig& config, std::uint64_t seed) {
  return draw_candidate<Scalar>(config, seed).view;
}

/// Fraction of all pixels whose source face carries `label`.
template <typename Scalar>
double coverage_ratio(const Fragments<Scalar>& frags, Label label) {
  if (frags.pixel_count() == 0) return 0.0;
  const auto hits = std::count(frags.label.begin(), frags.label.end(), label);
  return double(hits) / double(frags.pixel_count());
}

template <typename Scalar>
double coverage_ratio(const RenderResult<Scalar>& result, Label label) {
  return coverage_ratio(result.fragments, label);
}

template <typename Scalar>
struct ViewSelection {
  std::vector<CameraView<Scalar>> views;
  std::vector<double> coverage;
  std::size_t candidates_tried = 0;
};

template <typename Scalar>
class ViewSelectionError : public std::runtime_error {
 public:
  ViewSelectionError(const std::string& what, ViewSelection<Scalar> best)
      : std::runtime_error(what), best_(std::move(best)) {}
  /// Closest candidates found (by distance to the coverage interval).
  const ViewSelection<Scalar>& best() const { return best_; }

 private:
  ViewSelection<Scalar> best_;
};

/// Rejection-samples candidates until n_views of them have coverage strictly
/// inside (coverage_min, coverage_max). Candidate i is drawn from
/// derive_seed(seed, i), so the result depends only on the inputs.
template <typename Scalar>
ViewSelection<Scalar> select_views(const SceneMesh<Scalar>& mesh, Label label, const ViewSamplerConfig& config,
                                   std::uint64_t seed, const RenderSettings<Scalar>& settings = {}) {
  config.validate();
  const std::size_t budget = std::size_t(config.max_attempts) * std::size_t(config.n_views);
  const std::size_t batch = std::max(1u, std::thread::hardware_concurrency());

  struct Scored {
    CameraView<Scalar> view;
    double ratio;
    std::size_t index;
  };
  auto evaluate = [&](std::size_t index) {
    const CameraView<Scalar> view = sample_candidate<Scalar>(config, derive_seed(seed, index));
    return Scored{view, coverage_ratio(rasterize(mesh, view, settings), label), index};
  };

  ViewSelection<Scalar> accepted;
  std::vector<Scored> rejected;
  const bool label_present = std::find(mesh.labels.begin(), mesh.labels.end(), label) != mesh.labels.end();
  std::size_t next = 0;
  while (label_present && accepted.views.size() < std::size_t(config.n_views) && next < budget) {
    const std::size_t count = std::min(batch, budget - next);
    std::vector<Scored> results;
    if (count == 1) {
      results.push_back(evaluate(next));
    } else {
      std::vector<std::future<Scored>> jobs;
      for (std::size_t k = 0; k < count; ++k) jobs.push_back(std::async(std::launch::async, evaluate, next + k));
      for (auto& j : jobs) results.push_back(j.get());
    }
    next += count;
    for (const Scored& s : results) {
      if (accepted.views.size() == std::size_t(config.n_views)) break;
      accepted.candidates_tried = s.index + 1;
      if (s.ratio > config.coverage_min && s.ratio < config.coverage_max) {
        accepted.views.push_back(s.view);
        accepted.coverage.push_back(s.ratio);
      } else {
        rejected.push_back(s);
      }
    }
  }
  if (accepted.views.size() == std::size_t(config.n_views)) return accepted;

  auto distance = [&](double r) {
    return r <= config.coverage_min ? config.coverage_min - r
                                    : (r >= config.coverage_max ? r - config.coverage_max : 0.0);
  };
  std::stable_sort(rejected.begin(), rejected.end(),
                   [&](const Scored& a, const Scored& b) { return distance(a.ratio) < distance(b.ratio); });
  ViewSelection<Scalar> best = accepted;
  for (const Scored& s : rejected) {
    if (best.views.size() == std::size_t(config.n_views)) break;
    best.views.push_back(s.view);
    best.coverage.push_back(s.ratio);
  }
  throw ViewSelectionError<Scalar>(
      label_present ? "view selection exhausted " + std::to_string(budget) + " candidates with only " +
                          std::to_string(accepted.views.size()) + " of " + std::to_string(config.n_views) +
                          " inside the coverage bounds"
                    : "label " + std::to_string(label) + " does not occur in the mesh",
      std::move(best));
}

}  // namespace lasst
