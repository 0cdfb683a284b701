// Copyright 2026 The lasst Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lasst/pipeline.hpp"

namespace lasst {

/// Bad config file or flag; `key` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what) : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

enum class ConfigKind { kString, kPath, kInt, kSeed, kDouble, kBool, kPrompts, kColor, kChoice };

/// One job setting. The JSON key and the CLI flag share `name`.
struct ConfigKey {
  std::string name;
  ConfigKind kind;
  std::string help;
  std::vector<std::string> choices;  // kChoice only
};

const std::vector<ConfigKey>& config_keys();

/// Parses a flag's text into the JSON value stored under its key. Repeated
/// --prompt flags arrive one at a time and are appended by the caller.
nlohmann::json parse_flag_value(const ConfigKey& key, const std::string& text);

/// "7:a wooden floor" -> {label 7, "a wooden floor"}.
CategoryPrompt parse_prompt(const std::string& text);

/// Reads a JSON job file. Relative paths inside it resolve against the
/// file's directory.
nlohmann::json load_job_json(const std::filesystem::path& path);

/// Unknown keys and wrongly typed values are errors.
StyleJob job_from_json(const nlohmann::json& config);
nlohmann::json job_to_json(const StyleJob& job);

}  // namespace lasst
