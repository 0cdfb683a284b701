// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lasst/augment.hpp"
#include "lasst/hsv.hpp"
#include "lasst/mesh.hpp"
#include "lasst/render.hpp"
#include "lasst/scorer.hpp"
#include "lasst/vcdn.hpp"
#include "lasst/viewpoint.hpp"

namespace lasst {

struct CategoryPrompt {
  Label label = 0;
  std::string prompt;
};

/// kResample draws fresh views every iteration; kFixed selects once per category.
enum class ViewReuse { kResample, kFixed };
enum class BackendKind { kMock, kRemote };

struct StyleJob {
  std::filesystem::path mesh_path;
  std::optional<std::filesystem::path> labels_path;
  std::vector<CategoryPrompt> prompts;

  int iterations = 700;
  int resolution = 224;
  Vector3<double> background = Vector3<double>::Constant(0.5);
  std::uint64_t seed = 0;
  VcdnConfig vcdn;
  ViewSamplerConfig views;
  ViewReuse view_reuse = ViewReuse::kResample;
  HsvOptions hsv;
  AugmentConfig augment;

  BackendKind backend = BackendKind::kMock;
  std::string endpoint;
  int timeout_ms = 30000;
  MockBackendOptions mock;

  std::filesystem::path output_path;
  std::optional<std::filesystem::path> metrics_path;
  std::optional<std::filesystem::path> debug_render_dir;

  /// Throws std::invalid_argument naming the first bad field.
  void validate() const;

  RenderSettings<double> render_settings() const {
    RenderSettings<double> s;
    s.height = resolution;
    s.width = resolution;
    s.background = background;
    return s;
  }
};

struct IterationRecord {
  Label label = 0;
  int iteration = 0;
  double loss_sem = 0;
  double loss_hsv = 0;
  double loss_total = 0;
  std::vector<double> coverage;
};

struct PhaseSeconds {
  double select_views = 0;
  double render = 0;
  double score = 0;
  double backward = 0;
  double total = 0;
};

struct CategorySummary {
  Label label = 0;
  std::string prompt;
  bool skipped = false;
  std::string note;
  int iterations = 0;
  double clip_score = 0;
  PhaseSeconds seconds;
};

struct RunMetrics {
  std::vector<IterationRecord> iterations;
  std::vector<CategorySummary> categories;
};

/// One JSON object per line: an "iteration" record per optimization step and
/// a "category" record closing each category. Iteration records carry no
/// timing, so two identical runs produce identical iteration lines.
void write_metrics_jsonl(const RunMetrics& metrics, const std::filesystem::path& path);

/// Everything the loss needs besides the network: fixed geometry per view,
/// fixed augmentation warps, the text query and the regularizer settings.
struct ObjectiveContext {
  const SceneMesh<double>* mesh = nullptr;  // normalized, initial colors
  const LabelSplit* split = nullptr;
  std::vector<Fragments<double>> fragments;
  std::vector<SamplingWarp<double>> warps;
  TextQuery<double> query;
  HsvOptions hsv;
  Vector3<double> background = Vector3<double>::Constant(0.5);
  Eigen::Index chunk_size = 4096;  // vertices per MLP batch
};

struct ObjectiveValue {
  double loss_sem = 0;
  double loss_hsv = 0;
  double loss_total = 0;
  ParameterList<double> grads;           // empty unless requested
  VertexMatrix<double> colors;           // composite colors fed to the renderer
  std::vector<Image<double>> renders;    // pre-augmentation images
};

/// Full objective L_sem + L_hsv for one iteration. Vertices outside the split
/// keep their initial colors in the forward pass and receive no gradient.
ObjectiveValue evaluate_objective(const ObjectiveContext& ctx, const ColorDeviationNet<double>& net,
                                  ScoreBackend<double>& backend, bool with_gradient);

/// Target-set colors after the residue and clamp; other rows copied from `base`.
VertexMatrix<double> composite_colors(const SceneMesh<double>& mesh, const VertexMatrix<double>& base,
                                      const LabelSplit& split, const ColorDeviationNet<double>& net,
                                      Eigen::Index chunk_size = 4096);

/// Mean over views of cos(E_img(render), E_text(prompt)), with each view scored
/// on its own so any backend can provide it.
double compute_clip_score(ScoreBackend<double>& backend, const SceneMesh<double>& mesh,
                          std::span<const CameraView<double>> views, const std::string& prompt,
                          const RenderSettings<double>& settings);

using LogSink = std::function<void(std::string_view)>;

struct StyleResult {
  SceneMesh<double> mesh;  // input coordinates, stylized colors
  RunMetrics metrics;
};

/// Backend failure mid-job; holds the categories committed before it.
class JobAborted : public std::runtime_error {
 public:
  JobAborted(const std::string& what, StyleResult partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const StyleResult& partial() const { return partial_; }

 private:
  StyleResult partial_;
};

/// Optimizes each (label, prompt) in order with a fresh network and commits
/// only that label's vertices. Every random stream is derived from
/// (job.seed, label), so disjoint categories commute.
StyleResult run_style_transfer(const SceneMesh<double>& input, const StyleJob& job, ScoreBackend<double>& backend,
                               const LogSink& log = {});

/// Loads the mesh, connects the backend, runs, and writes mesh + metrics.
/// Partial results are written before a JobAborted propagates.
StyleResult run_job(const StyleJob& job, const LogSink& log = {});

}  // namespace lasst
