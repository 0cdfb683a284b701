// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#include "lasst/job_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>

namespace lasst {
namespace {

using json = nlohmann::json;

struct Binding {
  std::function<void(StyleJob&, const json&)> set;
  std::function<json(const StyleJob&)> get;
};

template <typename T>
T number(const std::string& key, const json& v) {
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw ConfigError(key, key + " must be a number");
  } else {
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError(key, key + " must be an integer");
    if constexpr (std::is_signed_v<T>) {
      if (v.is_number_unsigned() && v.get<std::uint64_t>() > std::uint64_t(std::numeric_limits<T>::max())) {
        throw ConfigError(key, key + " is out of range");
      }
    } else if (v.is_number_integer() && v.get<std::int64_t>() < 0) {
      throw ConfigError(key, key + " must be non-negative");
    }
  }
  return v.get<T>();
}

std::string text(const std::string& key, const json& v) {
  if (!v.is_string()) throw ConfigError(key, key + " must be a string");
  return v.get<std::string>();
}

std::optional<std::filesystem::path> optional_path(const std::string& key, const json& v) {
  if (v.is_null()) return std::nullopt;
  const std::string s = text(key, v);
  if (s.empty()) return std::nullopt;
  return std::filesystem::path(s);
}

json path_or_null(const std::optional<std::filesystem::path>& p) { return p ? json(p->string()) : json(nullptr); }

template <typename E>
Binding choice(const std::string& key, std::vector<std::pair<std::string, E>> names,
               std::function<E&(StyleJob&)> field) {
  return {[key, names, field](StyleJob& job, const json& v) {
            const std::string s = text(key, v);
            for (const auto& [name, value] : names) {
              if (name == s) {
                field(job) = value;
                return;
              }
            }
            throw ConfigError(key, key + " has no choice '" + s + "'");
          },
          [names, field](const StyleJob& job) {
            const E value = field(const_cast<StyleJob&>(job));
            for (const auto& [name, e] : names) {
              if (e == value) return json(name);
            }
            return json(nullptr);
          }};
}

template <typename T>
Binding scalar(const std::string& key, std::function<T&(StyleJob&)> field) {
  return {[key, field](StyleJob& job, const json& v) { field(job) = number<T>(key, v); },
          [field](const StyleJob& job) { return json(field(const_cast<StyleJob&>(job))); }};
}

Binding boolean(const std::string& key, std::function<bool&(StyleJob&)> field) {
  return {[key, field](StyleJob& job, const json& v) {
            if (!v.is_boolean()) throw ConfigError(key, key + " must be true or false");
            field(job) = v.get<bool>();
          },
          [field](const StyleJob& job) { return json(field(const_cast<StyleJob&>(job))); }};
}

const std::map<std::string, Binding>& bindings() {
  static const std::map<std::string, Binding> table = [] {
    std::map<std::string, Binding> t;
    t["mesh"] = {[](StyleJob& j, const json& v) { j.mesh_path = text("mesh", v); },
                 [](const StyleJob& j) { return json(j.mesh_path.string()); }};
    t["labels"] = {[](StyleJob& j, const json& v) { j.labels_path = optional_path("labels", v); },
                   [](const StyleJob& j) { return path_or_null(j.labels_path); }};
    t["prompt"] = {[](StyleJob& j, const json& v) {
                     if (!v.is_array()) throw ConfigError("prompt", "prompt must be a list of \"label:text\" entries");
                     j.prompts.clear();
                     for (const json& item : v) {
                       if (item.is_string()) {
                         j.prompts.push_back(parse_prompt(item.get<std::string>()));
                       } else if (item.is_object() && item.contains("label") && item.contains("prompt")) {
                         j.prompts.push_back({number<Label>("prompt", item["label"]), text("prompt", item["prompt"])});
                       } else {
                         throw ConfigError("prompt", "prompt entries must be \"label:text\" strings");
                       }
                     }
                   },
                   [](const StyleJob& j) {
                     json out = json::array();
                     for (const auto& p : j.prompts) out.push_back(std::to_string(p.label) + ":" + p.prompt);
                     return out;
                   }};
    t["backend"] = choice<BackendKind>("backend",
                                       {{"mock", BackendKind::kMock}, {"remote", BackendKind::kRemote}},
                                       [](StyleJob& j) -> BackendKind& { return j.backend; });
    t["endpoint"] = {[](StyleJob& j, const json& v) { j.endpoint = v.is_null() ? "" : text("endpoint", v); },
                     [](const StyleJob& j) { return json(j.endpoint); }};
    t["timeout-ms"] = scalar<int>("timeout-ms", [](StyleJob& j) -> int& { return j.timeout_ms; });
    t["iters"] = scalar<int>("iters", [](StyleJob& j) -> int& { return j.iterations; });
    t["views"] = scalar<int>("views", [](StyleJob& j) -> int& { return j.views.n_views; });
    t["radius-min"] = scalar<double>("radius-min", [](StyleJob& j) -> double& { return j.views.radius_min; });
    t["radius-max"] = scalar<double>("radius-max", [](StyleJob& j) -> double& { return j.views.radius_max; });
    t["focal-min"] = scalar<double>("focal-min", [](StyleJob& j) -> double& { return j.views.focal_min; });
    t["focal-max"] = scalar<double>("focal-max", [](StyleJob& j) -> double& { return j.views.focal_max; });
    t["rmin"] = scalar<double>("rmin", [](StyleJob& j) -> double& { return j.views.coverage_min; });
    t["rmax"] = scalar<double>("rmax", [](StyleJob& j) -> double& { return j.views.coverage_max; });
    t["max-attempts"] = scalar<int>("max-attempts", [](StyleJob& j) -> int& { return j.views.max_attempts; });
    t["view-sampling"] = choice<ViewSampling>(
        "view-sampling", {{"lasst", ViewSampling::kLasst}, {"text2mesh", ViewSampling::kText2Mesh}},
        [](StyleJob& j) -> ViewSampling& { return j.views.sampling; });
    t["views-per-iteration"] = choice<ViewReuse>("views-per-iteration",
                                        {{"resample", ViewReuse::kResample}, {"fixed", ViewReuse::kFixed}},
                                        [](StyleJob& j) -> ViewReuse& { return j.view_reuse; });
    t["hsv-w1"] = scalar<double>("hsv-w1", [](StyleJob& j) -> double& { return j.hsv.weights.hue; });
    t["hsv-w2"] = scalar<double>("hsv-w2", [](StyleJob& j) -> double& { return j.hsv.weights.saturation; });
    t["hsv-w3"] = scalar<double>("hsv-w3", [](StyleJob& j) -> double& { return j.hsv.weights.value; });
    t["hsv-loss-form"] = choice<HsvLossForm>("hsv-loss-form",
                                        {{"signed", HsvLossForm::kSigned}, {"absolute", HsvLossForm::kAbsolute}},
                                        [](StyleJob& j) -> HsvLossForm& { return j.hsv.form; });
    t["hsv-mean-scope"] = choice<HsvMeanScope>("hsv-mean-scope",
                                          {{"target", HsvMeanScope::kTarget}, {"all", HsvMeanScope::kAll}},
                                          [](StyleJob& j) -> HsvMeanScope& { return j.hsv.scope; });
    t["hue-formula"] = choice<HueFormula>("hue-formula",
                                          {{"standard", HueFormula::kStandard}, {"literal", HueFormula::kLiteral}},
                                          [](StyleJob& j) -> HueFormula& { return j.hsv.hue_formula; });
    t["lr"] = scalar<double>("lr", [](StyleJob& j) -> double& { return j.vcdn.adam.learning_rate; });
    t["fourier-features"] = scalar<int>("fourier-features", [](StyleJob& j) -> int& { return j.vcdn.n_freq; });
    t["fourier-sigma"] = scalar<double>("fourier-sigma", [](StyleJob& j) -> double& { return j.vcdn.fourier_sigma; });
    t["hidden-layers"] = scalar<int>("hidden-layers", [](StyleJob& j) -> int& { return j.vcdn.hidden_layers; });
    t["hidden-width"] = scalar<int>("hidden-width", [](StyleJob& j) -> int& { return j.vcdn.hidden_width; });
    t["residue-scale"] = scalar<double>("residue-scale", [](StyleJob& j) -> double& { return j.vcdn.residue_scale; });
    t["resolution"] = scalar<int>("resolution", [](StyleJob& j) -> int& { return j.resolution; });
    t["background"] = {[](StyleJob& j, const json& v) {
                         if (v.is_number()) {
                           j.background.setConstant(v.get<double>());
                         } else if (v.is_array() && v.size() == 3 &&
                                    std::all_of(v.begin(), v.end(), [](const json& x) { return x.is_number(); })) {
                           j.background = Vector3<double>(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
                         } else {
                           throw ConfigError("background", "background must be a number or [r, g, b]");
                         }
                       },
                       [](const StyleJob& j) { return json{j.background.x(), j.background.y(), j.background.z()}; }};
    t["augment"] = boolean("augment", [](StyleJob& j) -> bool& { return j.augment.enabled; });
    t["seed"] = scalar<std::uint64_t>("seed", [](StyleJob& j) -> std::uint64_t& { return j.seed; });
    t["mock-grid"] = scalar<int>("mock-grid", [](StyleJob& j) -> int& { return j.mock.grid; });
    t["normalize-before-mean"] =
        boolean("normalize-before-mean", [](StyleJob& j) -> bool& { return j.mock.normalize_before_mean; });
    t["out"] = {[](StyleJob& j, const json& v) { j.output_path = text("out", v); },
                [](const StyleJob& j) { return json(j.output_path.string()); }};
    t["metrics"] = {[](StyleJob& j, const json& v) { j.metrics_path = optional_path("metrics", v); },
                    [](const StyleJob& j) { return path_or_null(j.metrics_path); }};
    t["debug-renders"] = {[](StyleJob& j, const json& v) { j.debug_render_dir = optional_path("debug-renders", v); },
                          [](const StyleJob& j) { return path_or_null(j.debug_render_dir); }};
    return t;
  }();
  return table;
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    out = false;
    return true;
  }
  return false;
}

template <typename T>
json parse_number_text(const ConfigKey& key, const std::string& s) {
  T value{};
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw ConfigError(key.name, "--" + key.name + ": '" + s + "' is not a valid number");
  return json(value);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"mesh", ConfigKind::kPath, "input PLY mesh", {}},
      {"labels", ConfigKind::kPath, "label sidecar, one integer per vertex (overrides the PLY label property)", {}},
      {"prompt", ConfigKind::kPrompts, "label:text pair, repeatable", {}},
      {"backend", ConfigKind::kChoice, "scoring backend", {"mock", "remote"}},
      {"endpoint", ConfigKind::kString, "host:port of the scoring service (default $LASST_ENDPOINT)", {}},
      {"timeout-ms", ConfigKind::kInt, "per-request timeout for the remote backend", {}},
      {"iters", ConfigKind::kInt, "optimization steps per category", {}},
      {"views", ConfigKind::kInt, "views per iteration", {}},
      {"rmin", ConfigKind::kDouble, "lower bound on the target coverage ratio (exclusive)", {}},
      {"rmax", ConfigKind::kDouble, "upper bound on the target coverage ratio (exclusive)", {}},
      {"radius-min", ConfigKind::kDouble, "minimum camera distance", {}},
      {"radius-max", ConfigKind::kDouble, "maximum camera distance", {}},
      {"focal-min", ConfigKind::kDouble, "minimum focal length", {}},
      {"focal-max", ConfigKind::kDouble, "maximum focal length", {}},
      {"max-attempts", ConfigKind::kInt, "candidates allowed per requested view", {}},
      {"view-sampling", ConfigKind::kChoice, "camera placement strategy", {"lasst", "text2mesh"}},
      {"views-per-iteration", ConfigKind::kChoice, "resample views every iteration or keep the first set", {"resample", "fixed"}},
      {"hsv-w1", ConfigKind::kDouble, "hue weight", {}},
      {"hsv-w2", ConfigKind::kDouble, "saturation weight", {}},
      {"hsv-w3", ConfigKind::kDouble, "value weight", {}},
      {"hsv-loss-form", ConfigKind::kChoice, "signed or absolute HSV differences", {"signed", "absolute"}},
      {"hsv-mean-scope", ConfigKind::kChoice, "average the HSV loss over target or all vertices", {"target", "all"}},
      {"hue-formula", ConfigKind::kChoice, "hue conversion", {"standard", "literal"}},
      {"lr", ConfigKind::kDouble, "Adam learning rate", {}},
      {"fourier-features", ConfigKind::kInt, "number of Fourier frequencies", {}},
      {"fourier-sigma", ConfigKind::kDouble, "std-dev of the Fourier frequencies", {}},
      {"hidden-layers", ConfigKind::kInt, "hidden layers in the color MLP", {}},
      {"hidden-width", ConfigKind::kInt, "width of each hidden layer", {}},
      {"residue-scale", ConfigKind::kDouble, "bound on the predicted color residue", {}},
      {"resolution", ConfigKind::kInt, "render width and height in pixels", {}},
      {"background", ConfigKind::kColor, "background gray level or r,g,b", {}},
      {"augment", ConfigKind::kBool, "random crop and perspective before scoring", {}},
      {"seed", ConfigKind::kSeed, "job seed", {}},
      {"mock-grid", ConfigKind::kInt, "pooling grid of the mock scorer", {}},
      {"normalize-before-mean", ConfigKind::kBool, "mock scorer normalizes each view before averaging", {}},
      {"out", ConfigKind::kPath, "output PLY", {}},
      {"metrics", ConfigKind::kPath, "metrics JSONL output", {}},
      {"debug-renders", ConfigKind::kPath, "directory for per-iteration PNG renders", {}},
  };
  return keys;
}

CategoryPrompt parse_prompt(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos || colon == 0) {
    throw ConfigError("prompt", "prompt '" + s + "' must look like label:text");
  }
  Label label = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + colon, label);
  if (ec != std::errc() || ptr != s.data() + colon) {
    throw ConfigError("prompt", "prompt '" + s + "' does not start with a label id");
  }
  const std::string rest = s.substr(colon + 1);
  if (rest.empty()) throw ConfigError("prompt", "prompt for label " + std::to_string(label) + " is empty");
  return {label, rest};
}

json parse_flag_value(const ConfigKey& key, const std::string& s) {
  switch (key.kind) {
    case ConfigKind::kString:
    case ConfigKind::kPath:
      return json(s);
    case ConfigKind::kInt:
      return parse_number_text<int>(key, s);
    case ConfigKind::kSeed:
      return parse_number_text<std::uint64_t>(key, s);
    case ConfigKind::kDouble:
      return parse_number_text<double>(key, s);
    case ConfigKind::kBool: {
      bool b = false;
      if (!parse_bool(s, b)) throw ConfigError(key.name, "--" + key.name + " expects true or false, got '" + s + "'");
      return json(b);
    }
    case ConfigKind::kPrompts:
      parse_prompt(s);
      return json(s);
    case ConfigKind::kColor: {
      json parts = json::array();
      std::size_t begin = 0;
      for (;;) {
        const auto comma = s.find(',', begin);
        parts.push_back(parse_number_text<double>(key, s.substr(begin, comma - begin)));
        if (comma == std::string::npos) break;
        begin = comma + 1;
      }
      if (parts.size() == 1) return parts[0];
      if (parts.size() != 3) throw ConfigError(key.name, "--background takes one value or three");
      return parts;
    }
    case ConfigKind::kChoice:
      if (std::find(key.choices.begin(), key.choices.end(), s) == key.choices.end()) {
        throw ConfigError(key.name, "--" + key.name + " has no choice '" + s + "'");
      }
      return json(s);
  }
  return json(s);
}

json load_job_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read config file " + path.string());
  json config;
  try {
    config = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", path.string() + ": " + e.what());
  }
  if (!config.is_object()) throw ConfigError("config", path.string() + ": top level must be an object");
  const std::filesystem::path base = path.parent_path();
  for (const ConfigKey& key : config_keys()) {
    if (key.kind != ConfigKind::kPath || !config.contains(key.name) || !config[key.name].is_string()) continue;
    const std::filesystem::path p = config[key.name].get<std::string>();
    if (!p.empty() && p.is_relative()) config[key.name] = (base / p).lexically_normal().string();
  }
  return config;
}

StyleJob job_from_json(const json& config) {
  if (!config.is_object()) throw ConfigError("config", "job config must be a JSON object");
  StyleJob job;
  const auto& table = bindings();
  for (const auto& [name, value] : config.items()) {
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError(name, "unknown config key '" + name + "'");
    try {
      it->second.set(job, value);
    } catch (const json::exception& e) {
      throw ConfigError(name, name + ": " + e.what());
    }
  }
  return job;
}

json job_to_json(const StyleJob& job) {
  json out = json::object();
  for (const ConfigKey& key : config_keys()) out[key.name] = bindings().at(key.name).get(job);
  return out;
}

}  // namespace lasst
