// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <set>

#include <nlohmann/json.hpp>

#include "lasst/png.hpp"
#include "lasst/remote_backend.hpp"

namespace lasst {
namespace {

// stream tags for derive_seed(job seed, label, tag, ...)
constexpr std::uint64_t kNetStream = 1;
constexpr std::uint64_t kViewStream = 2;
constexpr std::uint64_t kAugmentStream = 3;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Runs fn(j) for j in [0, n) on worker threads; results land in index order.
template <typename Fn>
auto parallel_map(std::size_t n, Fn fn) -> std::vector<decltype(fn(std::size_t(0)))> {
  using T = decltype(fn(std::size_t(0)));
  std::vector<T> out;
  out.reserve(n);
  if (n <= 1 || std::thread::hardware_concurrency() <= 1) {
    for (std::size_t j = 0; j < n; ++j) out.push_back(fn(j));
    return out;
  }
  std::vector<std::future<T>> jobs;
  for (std::size_t j = 0; j < n; ++j) jobs.push_back(std::async(std::launch::async, fn, j));
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

std::span<const std::int32_t> chunk(const std::vector<std::int32_t>& rows, std::size_t begin, Eigen::Index size) {
  const std::size_t end = std::min(rows.size(), begin + std::size_t(size));
  return std::span<const std::int32_t>(rows.data() + begin, end - begin);
}

VertexMatrix<double> gather_rows(const VertexMatrix<double>& m, std::span<const std::int32_t> rows) {
  VertexMatrix<double> out(Eigen::Index(rows.size()), 3);
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(Eigen::Index(k)) = m.row(rows[k]);
  return out;
}

void accumulate(ParameterList<double>& total, const ParameterList<double>& part) {
  if (total.empty()) {
    total = part;
    return;
  }
  for (std::size_t i = 0; i < total.size(); ++i) total[i] += part[i];
}

std::vector<SamplingWarp<double>> make_warps(const StyleJob& job, Label label, int iteration, int n_views) {
  const RenderSettings<double> settings = job.render_settings();
  std::vector<SamplingWarp<double>> warps;
  for (int j = 0; j < n_views; ++j) {
    const std::uint64_t seed = derive_seed(job.seed, label, kAugmentStream, std::uint64_t(iteration) * 1024 + j);
    const AugmentParams params = sample_augment_params(settings.height, settings.width, seed, job.augment);
    warps.push_back(SamplingWarp<double>::build(params, settings.height, settings.width, job.background));
  }
  return warps;
}

nlohmann::json to_json(const IterationRecord& r, const std::string& prompt) {
  return {{"type", "iteration"}, {"label", r.label},       {"prompt", prompt},
          {"iteration", r.iteration}, {"loss_sem", r.loss_sem}, {"loss_hsv", r.loss_hsv},
          {"loss_total", r.loss_total}, {"coverage", r.coverage}};
}

nlohmann::json to_json(const CategorySummary& s) {
  return {{"type", "category"},
          {"label", s.label},
          {"prompt", s.prompt},
          {"skipped", s.skipped},
          {"note", s.note},
          {"iterations", s.iterations},
          {"clip_score", s.clip_score},
          {"seconds",
           {{"select_views", s.seconds.select_views},
            {"render", s.seconds.render},
            {"score", s.seconds.score},
            {"backward", s.seconds.backward},
            {"total", s.seconds.total}}}};
}

}  // namespace

void StyleJob::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  std::set<Label> seen;
  for (const CategoryPrompt& p : prompts) {
    if (p.prompt.empty()) fail("prompt for label " + std::to_string(p.label) + " is empty");
    if (!seen.insert(p.label).second) fail("label " + std::to_string(p.label) + " has more than one prompt");
  }
  if (iterations < 1) fail("iters must be at least 1");
  if (resolution < 1) fail("resolution must be positive");
  if (!background.allFinite() || (background.array() < 0).any() || (background.array() > 1).any()) {
    fail("background must lie in [0,1]");
  }
  if (vcdn.n_freq < 1) fail("fourier-features must be positive");
  if (!(vcdn.fourier_sigma > 0)) fail("fourier-sigma must be positive");
  if (vcdn.hidden_layers < 0 || vcdn.hidden_width < 1) fail("bad MLP shape");
  if (!(vcdn.residue_scale > 0)) fail("residue-scale must be positive");
  if (!(vcdn.adam.learning_rate > 0)) fail("lr must be positive");
  if (!(vcdn.adam.beta1 >= 0 && vcdn.adam.beta1 < 1 && vcdn.adam.beta2 >= 0 && vcdn.adam.beta2 < 1)) {
    fail("Adam betas must lie in [0,1)");
  }
  if (!(vcdn.adam.epsilon > 0)) fail("Adam epsilon must be positive");
  views.validate();
  if (hsv.weights.hue < 0 || hsv.weights.saturation < 0 || hsv.weights.value < 0) {
    fail("hsv weights must be non-negative");
  }
  if (backend == BackendKind::kRemote && endpoint.empty()) fail("remote backend needs an endpoint");
  if (timeout_ms < 1) fail("timeout-ms must be positive");
  if (mock.grid < 1) fail("mock-grid must be positive");
  if (output_path.empty()) fail("out is required");
}

void write_metrics_jsonl(const RunMetrics& metrics, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  // iteration records grouped under their category, in run order
  std::size_t next = 0;
  for (const CategorySummary& s : metrics.categories) {
    while (next < metrics.iterations.size() && metrics.iterations[next].label == s.label) {
      out << to_json(metrics.iterations[next], s.prompt).dump() << '\n';
      ++next;
    }
    out << to_json(s).dump() << '\n';
  }
  for (; next < metrics.iterations.size(); ++next) out << to_json(metrics.iterations[next], "").dump() << '\n';
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

VertexMatrix<double> composite_colors(const SceneMesh<double>& mesh, const VertexMatrix<double>& base,
                                      const LabelSplit& split, const ColorDeviationNet<double>& net,
                                      Eigen::Index chunk_size) {
  VertexMatrix<double> out = base;
  for (std::size_t begin = 0; begin < split.target.size(); begin += std::size_t(chunk_size)) {
    const auto rows = chunk(split.target, begin, chunk_size);
    const VertexMatrix<double> pre = gather_rows(mesh.colors, rows) + net.residues(mesh.vertices, rows);
    const VertexMatrix<double> clamped = clamp_colors(pre);
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(rows[k]) = clamped.row(Eigen::Index(k));
  }
  return out;
}

ObjectiveValue evaluate_objective(const ObjectiveContext& ctx, const ColorDeviationNet<double>& net,
                                  ScoreBackend<double>& backend, bool with_gradient) {
  if (!ctx.mesh || !ctx.split) throw std::invalid_argument("objective context is missing the mesh or split");
  if (ctx.fragments.empty() || ctx.fragments.size() != ctx.warps.size()) {
    throw std::invalid_argument("objective needs one warp per view");
  }
  const SceneMesh<double>& mesh = *ctx.mesh;
  const LabelSplit& split = *ctx.split;
  const Eigen::Index chunk_size = std::max<Eigen::Index>(1, ctx.chunk_size);

  ObjectiveValue value;
  value.colors = composite_colors(mesh, mesh.colors, split, net, chunk_size);

  const std::size_t n_views = ctx.fragments.size();
  value.renders = parallel_map(n_views, [&](std::size_t j) {
    return shade(ctx.fragments[j], value.colors, ctx.background);
  });
  std::vector<Image<double>> augmented;
  for (std::size_t j = 0; j < n_views; ++j) augmented.push_back(ctx.warps[j].apply(value.renders[j]));

  const SemanticScore<double> score = semantic_loss<double>(backend, augmented, ctx.query);
  const HsvLossResult<double> reg = hsv_loss(mesh.colors, value.colors, split, ctx.hsv);
  value.loss_sem = score.loss;
  value.loss_hsv = reg.loss;
  value.loss_total = score.loss + reg.loss;
  if (!std::isfinite(value.loss_total)) throw NumericalError("non-finite loss");
  if (!with_gradient || split.target_empty) return value;

  const std::vector<VertexMatrix<double>> per_view = parallel_map(n_views, [&](std::size_t j) {
    return backprop_to_colors(ctx.fragments[j], ctx.warps[j].pullback(score.gradients[j]), split);
  });
  VertexMatrix<double> grad_colors = reg.grad;
  for (const auto& g : per_view) grad_colors += g;

  // recompute each chunk with a cache so memory stays bounded by chunk_size
  for (std::size_t begin = 0; begin < split.target.size(); begin += std::size_t(chunk_size)) {
    const auto rows = chunk(split.target, begin, chunk_size);
    MlpCache<double> cache;
    const VertexMatrix<double> pre = gather_rows(mesh.colors, rows) + net.residues(mesh.vertices, rows, &cache);
    const VertexMatrix<double> grad_res = clamp_pullback(pre, gather_rows(grad_colors, rows));
    accumulate(value.grads, net.mlp.backward(cache, grad_res.transpose()));
  }
  for (const auto& g : value.grads) {
    if (!g.allFinite()) throw NumericalError("non-finite parameter gradient");
  }
  return value;
}

double compute_clip_score(ScoreBackend<double>& backend, const SceneMesh<double>& mesh,
                          std::span<const CameraView<double>> views, const std::string& prompt,
                          const RenderSettings<double>& settings) {
  if (views.empty()) throw std::invalid_argument("clip score needs at least one view");
  const TextQuery<double> query = make_query(backend, prompt);
  double total = 0;
  for (const CameraView<double>& view : views) {
    const std::vector<Image<double>> one{render(mesh.colors, mesh, view, settings).image};
    total += -semantic_loss<double>(backend, one, query).loss;
  }
  return total / double(views.size());
}

StyleResult run_style_transfer(const SceneMesh<double>& input, const StyleJob& job, ScoreBackend<double>& backend,
                               const LogSink& log) {
  job.validate();
  validate_mesh(input);
  auto say = [&](const std::string& msg) {
    if (log) log(msg);
  };

  const NormalizedMesh<double> normalized = normalize_to_unit_ball(input);
  const SceneMesh<double>& mesh = normalized.mesh;
  const RenderSettings<double> settings = job.render_settings();

  StyleResult result;
  result.mesh = input;

  for (const CategoryPrompt& category : job.prompts) {
    const Label label = category.label;
    const auto t_category = Clock::now();
    CategorySummary summary;
    summary.label = label;
    summary.prompt = category.prompt;

    const LabelSplit split = split_by_label(mesh, label);
    if (split.target_empty) {
      summary.skipped = true;
      summary.note = "label " + std::to_string(label) + " has no vertices";
      say("warning: " + summary.note + ", skipping");
      result.metrics.categories.push_back(summary);
      continue;
    }

    try {
      ObjectiveContext ctx;
      ctx.mesh = &mesh;
      ctx.split = &split;
      ctx.hsv = job.hsv;
      ctx.background = job.background;
      ctx.query = make_query(backend, category.prompt);

      ColorDeviationNet<double> net = ColorDeviationNet<double>::create(job.vcdn, derive_seed(job.seed, label, kNetStream));
      std::vector<CameraView<double>> views;
      std::vector<double> coverage;

      auto choose_views = [&](int iteration) {
        const auto t0 = Clock::now();
        try {
          ViewSelection<double> sel = select_views(mesh, label, job.views,
                                                   derive_seed(job.seed, label, kViewStream, std::uint64_t(iteration)),
                                                   settings);
          views = std::move(sel.views);
          coverage = std::move(sel.coverage);
        } catch (const ViewSelectionError<double>& e) {
          if (iteration == 0) throw;
          say("warning: label " + std::to_string(label) + " iteration " + std::to_string(iteration) + ": " +
              e.what() + "; keeping the previous views");
        }
        summary.seconds.select_views += seconds_since(t0);
        const auto t1 = Clock::now();
        ctx.fragments = parallel_map(views.size(), [&](std::size_t j) { return rasterize(mesh, views[j], settings); });
        summary.seconds.render += seconds_since(t1);
      };

      try {
        choose_views(0);
      } catch (const ViewSelectionError<double>& e) {
        summary.skipped = true;
        summary.note = e.what();
        say("warning: label " + std::to_string(label) + ": " + e.what() + ", leaving its colors unchanged");
        summary.seconds.total = seconds_since(t_category);
        result.metrics.categories.push_back(summary);
        continue;
      }

      for (int it = 0; it < job.iterations; ++it) {
        if (it > 0 && job.view_reuse == ViewReuse::kResample) choose_views(it);
        ctx.warps = make_warps(job, label, it, int(views.size()));

        const auto t0 = Clock::now();
        ObjectiveValue value;
        try {
          value = evaluate_objective(ctx, net, backend, true);
        } catch (const NumericalError& e) {
          throw NumericalError("label " + std::to_string(label) + " iteration " + std::to_string(it) + ": " +
                               e.what());
        }
        summary.seconds.score += seconds_since(t0);

        const auto t1 = Clock::now();
        net.step(value.grads);
        summary.seconds.backward += seconds_since(t1);

        result.metrics.iterations.push_back(
            {label, it, value.loss_sem, value.loss_hsv, value.loss_total, coverage});

        if (job.debug_render_dir) {
          const auto dir = *job.debug_render_dir / ("label" + std::to_string(label));
          std::filesystem::create_directories(dir);
          for (std::size_t j = 0; j < value.renders.size(); ++j) {
            write_png(value.renders[j], dir / ("iter" + std::to_string(it) + "_view" + std::to_string(j) + ".png"));
          }
        }
      }

      // commit: only this label's rows change
      const VertexMatrix<double> final_colors = composite_colors(mesh, mesh.colors, split, net, ctx.chunk_size);
      for (std::int32_t v : split.target) result.mesh.colors.row(v) = final_colors.row(v);

      SceneMesh<double> scored = mesh;
      scored.colors = final_colors;
      summary.clip_score = compute_clip_score(backend, scored, views, category.prompt, settings);
      summary.iterations = job.iterations;
      summary.seconds.total = seconds_since(t_category);
      result.metrics.categories.push_back(summary);
      say("label " + std::to_string(label) + " done: final loss " +
          std::to_string(result.metrics.iterations.back().loss_total) + ", clip score " +
          std::to_string(summary.clip_score));
    } catch (const BackendUnavailable& e) {
      throw JobAborted(std::string("scoring backend failed on label ") + std::to_string(label) + ": " + e.what(),
                       std::move(result));
    } catch (const wire::ProtocolError& e) {
      throw JobAborted(std::string("scoring backend failed on label ") + std::to_string(label) + ": " + e.what(),
                       std::move(result));
    }
  }
  return result;
}

StyleResult run_job(const StyleJob& job, const LogSink& log) {
  job.validate();
  const SceneMesh<double> input = load_mesh<double>(job.mesh_path, job.labels_path);

  std::unique_ptr<ScoreBackend<double>> backend;
  if (job.backend == BackendKind::kRemote) {
    RemoteBackendOptions options;
    options.endpoint = Endpoint::parse(job.endpoint);
    options.timeout = std::chrono::milliseconds(job.timeout_ms);
    auto remote = std::make_unique<RemoteBackend>(options);
    remote->handshake();
    backend = std::move(remote);
  } else {
    backend = std::make_unique<MockLinearBackend<double>>(job.seed, job.mock);
  }

  auto save = [&](const StyleResult& r) {
    if (job.output_path.has_parent_path()) std::filesystem::create_directories(job.output_path.parent_path());
    save_mesh(r.mesh, UnitBallTransform<double>{}, job.output_path);
    if (job.metrics_path) write_metrics_jsonl(r.metrics, *job.metrics_path);
  };
  try {
    StyleResult result = run_style_transfer(input, job, *backend, log);
    save(result);
    return result;
  } catch (const JobAborted& e) {
    save(e.partial());
    throw;
  }
}

}  // namespace lasst
