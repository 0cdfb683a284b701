// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>

#include <CLI11.hpp>

#include "lasst/job_config.hpp"
#include "lasst/png.hpp"
#include "lasst/remote_backend.hpp"

namespace lasst {
namespace {

using json = nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Vector3<double> parse_vec3(const std::string& flag, const std::string& s) {
  Vector3<double> v;
  std::size_t begin = 0;
  for (int k = 0; k < 3; ++k) {
    const auto comma = s.find(',', begin);
    if ((k < 2) == (comma == std::string::npos)) throw UsageError(flag + " expects x,y,z");
    try {
      std::size_t used = 0;
      const std::string part = s.substr(begin, comma - begin);
      v[k] = std::stod(part, &used);
      if (used != part.size()) throw UsageError(flag + " expects x,y,z");
    } catch (const std::logic_error&) {
      throw UsageError(flag + " expects x,y,z");
    }
    begin = comma + 1;
  }
  return v;
}

std::string endpoint_or_env(const std::string& endpoint) {
  if (!endpoint.empty()) return endpoint;
  const char* env = std::getenv("LASST_ENDPOINT");
  return env ? env : "";
}

std::unique_ptr<ScoreBackend<double>> make_backend(const std::string& kind, const std::string& endpoint,
                                                   std::uint64_t seed, int timeout_ms) {
  if (kind == "mock") return std::make_unique<MockLinearBackend<double>>(seed);
  const std::string where = endpoint_or_env(endpoint);
  if (where.empty()) throw UsageError("--backend remote needs --endpoint or LASST_ENDPOINT");
  RemoteBackendOptions options;
  options.endpoint = Endpoint::parse(where);
  options.timeout = std::chrono::milliseconds(timeout_ms);
  auto remote = std::make_unique<RemoteBackend>(options);
  remote->handshake();
  return remote;
}

/// Options shared by render and score: which mesh, and which cameras.
struct SceneArgs {
  std::string mesh, labels;
  std::string position;
  double focal = 1.5;
  long long label = -1;
  std::uint64_t seed = 0;
  int views = 5;
  int resolution = 224;

  void add_to(CLI::App* app) {
    app->add_option("--mesh", mesh, "input PLY mesh")->required();
    app->add_option("--labels", labels, "label sidecar file");
    app->add_option("--position", position, "camera position x,y,z (looks at the origin)");
    app->add_option("--focal", focal, "focal length for --position");
    app->add_option("--label", label, "only accept views where this label covers the configured ratio");
    app->add_option("--seed", seed, "view selection seed");
    app->add_option("--views", views, "number of sampled views");
    app->add_option("--resolution", resolution, "render size in pixels");
  }

  NormalizedMesh<double> load() const {
    const auto sidecar = labels.empty() ? std::nullopt : std::optional<std::filesystem::path>(labels);
    return normalize_to_unit_ball(load_mesh<double>(mesh, sidecar));
  }

  RenderSettings<double> settings() const {
    RenderSettings<double> s;
    s.height = resolution;
    s.width = resolution;
    return s;
  }

  std::vector<CameraView<double>> cameras(const SceneMesh<double>& normalized) const {
    if (!position.empty() && label >= 0) throw UsageError("give either --position or --label, not both");
    if (!position.empty()) {
      CameraView<double> v;
      v.position = parse_vec3("--position", position);
      v.focal = focal;
      v.up = compute_up_vector(v.position);
      return {v};
    }
    ViewSamplerConfig config;
    config.n_views = views;
    if (label >= 0) return select_views(normalized, Label(label), config, seed, settings()).views;
    // no target: plain candidates without the coverage test
    std::vector<CameraView<double>> out;
    for (int j = 0; j < views; ++j) out.push_back(sample_candidate<double>(config, derive_seed(seed, std::uint64_t(j))));
    return out;
  }
};

int run_stylize(const std::string& config_path, const std::map<std::string, std::vector<std::string>>& flags,
                bool dump_config, bool quiet, std::ostream& out, std::ostream& err) {
  json config = json::object();
  if (!config_path.empty()) config = load_job_json(config_path);
  for (const ConfigKey& key : config_keys()) {
    const auto it = flags.find(key.name);
    if (it == flags.end() || it->second.empty()) continue;
    if (key.kind == ConfigKind::kPrompts) {
      json prompts = json::array();
      for (const std::string& p : it->second) prompts.push_back(parse_flag_value(key, p));
      config[key.name] = prompts;
    } else {
      config[key.name] = parse_flag_value(key, it->second.back());
    }
  }
  if (!config.contains("endpoint") || config["endpoint"].is_null() || config["endpoint"] == "") {
    const std::string env = endpoint_or_env("");
    if (!env.empty()) config["endpoint"] = env;
  }
  StyleJob job = job_from_json(config);
  if (dump_config) {
    out << job_to_json(job).dump(2) << "\n";
    return kExitOk;
  }
  try {
    job.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  LogSink log;
  if (!quiet) log = [&err](std::string_view msg) { err << msg << "\n"; };
  try {
    const StyleResult result = run_job(job, log);
    if (!quiet) err << "wrote " << job.output_path.string() << "\n";
    (void)result;
  } catch (const JobAborted& e) {
    err << "error: " << e.what() << "\n";
    err << "partial output (" << e.partial().metrics.categories.size() << " categories) written to "
        << job.output_path.string() << "\n";
    return kExitJobFailed;
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-aware recoloring of indoor scene meshes"};
  app.require_subcommand(1);

  // stylize: every job setting is a flag named like its config key
  CLI::App* stylize = app.add_subcommand("stylize", "optimize colors for each label:prompt pair");
  std::string config_path;
  bool dump_config = false, quiet = false;
  stylize->add_option("--config", config_path, "JSON job file; flags override its keys");
  stylize->add_flag("--dump-config", dump_config, "print the resolved job and exit");
  stylize->add_flag("--quiet", quiet, "no progress output");
  std::map<std::string, std::vector<std::string>> flags;
  for (const ConfigKey& key : config_keys()) {
    std::string help = key.help;
    if (!key.choices.empty()) {
      help += " (";
      for (std::size_t i = 0; i < key.choices.size(); ++i) help += (i ? "|" : "") + key.choices[i];
      help += ")";
    }
    auto* opt = stylize->add_option("--" + key.name, flags[key.name], help);
    if (key.kind != ConfigKind::kPrompts) opt->expected(1)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  }

  CLI::App* validate = app.add_subcommand("validate", "check a mesh and its labels");
  std::string v_mesh, v_labels;
  validate->add_option("--mesh", v_mesh, "input PLY mesh")->required();
  validate->add_option("--labels", v_labels, "label sidecar file");

  CLI::App* render_cmd = app.add_subcommand("render", "render a mesh to PNG");
  SceneArgs r_args;
  std::string r_out;
  r_args.add_to(render_cmd);
  render_cmd->add_option("--out", r_out, "PNG path; several views get a _view<j> suffix")->required();

  CLI::App* score_cmd = app.add_subcommand("score", "CLIP score of a mesh against a prompt");
  SceneArgs s_args;
  std::string s_prompt, s_backend = "mock", s_endpoint;
  int s_timeout = 30000;
  s_args.add_to(score_cmd);
  score_cmd->add_option("--prompt", s_prompt, "text prompt")->required();
  score_cmd->add_option("--backend", s_backend, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
  score_cmd->add_option("--endpoint", s_endpoint, "host:port of the scoring service");
  score_cmd->add_option("--timeout-ms", s_timeout, "request timeout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << (app.got_subcommand(stylize) ? stylize->help() : app.help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (app.got_subcommand(stylize)) return run_stylize(config_path, flags, dump_config, quiet, out, err);

    if (app.got_subcommand(validate)) {
      const auto sidecar = v_labels.empty() ? std::nullopt : std::optional<std::filesystem::path>(v_labels);
      const SceneMesh<double> mesh = load_mesh<double>(v_mesh, sidecar);
      std::map<Label, std::size_t> counts;
      for (Label l : mesh.labels) ++counts[l];
      json report = {{"vertices", mesh.vertex_count()}, {"faces", mesh.face_count()}, {"labels", json::object()}};
      for (const auto& [l, n] : counts) report["labels"][std::to_string(l)] = n;
      out << report.dump() << "\n";
      return kExitOk;
    }

    if (app.got_subcommand(render_cmd)) {
      const NormalizedMesh<double> scene = r_args.load();
      const auto cams = r_args.cameras(scene.mesh);
      const std::filesystem::path base(r_out);
      for (std::size_t j = 0; j < cams.size(); ++j) {
        std::filesystem::path path = base;
        if (cams.size() > 1) {
          path = base.parent_path() / (base.stem().string() + "_view" + std::to_string(j) + base.extension().string());
        }
        write_png(render(scene.mesh.colors, scene.mesh, cams[j], r_args.settings()).image, path);
        out << path.string() << "\n";
      }
      return kExitOk;
    }

    if (app.got_subcommand(score_cmd)) {
      const NormalizedMesh<double> scene = s_args.load();
      const auto cams = s_args.cameras(scene.mesh);
      auto backend = make_backend(s_backend, s_endpoint, s_args.seed, s_timeout);
      const double score = compute_clip_score(*backend, scene.mesh, cams, s_prompt, s_args.settings());
      out << json{{"prompt", s_prompt}, {"views", cams.size()}, {"clip_score", score}}.dump() << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const MeshError& e) {
    err << "error: " << e.what() << "\n";
    return kExitJobFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitJobFailed;
  }
  return kExitUsage;
}

}  // namespace lasst
