// SPDX-License-Identifier: Apache-2.0
//
// Declarative run configuration and the manifests every command writes.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/decomposition.hpp"
#include "atlas/mask_store.hpp"
#include "json.hpp"

namespace atlas {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string name = "default";
  std::filesystem::path concept_spec;  // empty: the shipped spec
  // Sub-space selection: explicit ids win over head counts; both empty keep
  // the full space.
  std::vector<std::string> ast_ids;
  std::vector<std::string> builtin_ids;
  std::optional<std::size_t> head_ast;
  std::optional<std::size_t> head_builtin;

  std::size_t object_prompts = 50;
  std::size_t checker_prompts = 50;
  std::vector<double> epsilons = {0.001, 0.1, 0.5};
  std::vector<double> consistencies = {0.2, 0.5, 0.8};
  std::uint64_t seed = 0;

  std::string synth_preset = "random";
  double background_density = 0;

  std::filesystem::path losses;  // optional per-prompt loss file
  std::filesystem::path tokens;  // optional token-sequence file for checker validation
  std::filesystem::path corpus;
  std::filesystem::path dump;
  std::filesystem::path store;
  std::filesystem::path out = "out";

  std::size_t layer = 3;
  std::size_t k = 4;
  Aggregation aggregation = Aggregation::mean;
  bool checker_masks = true;

  // Throws ConfigError on unknown keys or wrong types. A command manifest is
  // accepted too: its embedded "config" object is used.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  void validate() const;
  ConceptSpace space() const;
  std::vector<SweepSetting> grid() const;

  // fnv1a64 of the canonical JSON, as 16 hex digits.
  std::string hash() const;

  // Intermediate paths default to "<cache>/<name>-<hash>/". The cache root
  // is $ATLAS_CACHE_DIR, else "$HOME/.cache/atlas", else ".atlas-cache".
  std::filesystem::path cache_dir() const;
  std::filesystem::path corpus_path() const;
  std::filesystem::path dump_path() const;
  std::filesystem::path store_path() const;
};

std::string_view tool_version();

// Streaming fnv1a64 over a file's bytes.
std::uint64_t hash_file(const std::filesystem::path& path);

class CommandManifest {
 public:
  CommandManifest(std::string command, const RunConfig& config);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

  // No timestamps, so reruns produce the same bytes.
  nlohmann::json to_json() const;
  // "<out>/<command>.manifest.json"
  std::filesystem::path save(const std::filesystem::path& out_dir) const;

 private:
  std::string command_;
  nlohmann::json config_;
  std::string hash_;
  std::uint64_t seed_;
  nlohmann::json inputs_ = nlohmann::json::array();
  nlohmann::json outputs_ = nlohmann::json::array();
  nlohmann::json extra_ = nlohmann::json::object();
};

}  // namespace atlas
