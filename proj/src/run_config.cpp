// SPDX-License-Identifier: Apache-2.0
#include "atlas/run_config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>

#include "atlas/util.hpp"

#ifndef ATLAS_VERSION
#define ATLAS_VERSION "0.0.0"
#endif

namespace atlas {

using nlohmann::json;

namespace {

template <class T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field ") + key + ": " + e.what());
  }
}

std::filesystem::path get_path(const json& j, const char* key) { return get<std::string>(j, key); }

}  // namespace

RunConfig RunConfig::from_json(const json& in) {
  if (!in.is_object()) throw ConfigError("config must be a JSON object");
  const json& j = in.contains("config") && in.contains("command") ? in.at("config") : in;
  static const std::set<std::string> known = {
      "name",      "concept_spec", "ast",        "builtins",     "head_ast",       "head_builtin",
      "object_prompts", "checker_prompts", "epsilons", "consistencies", "seed", "synth_preset",
      "background_density", "losses", "tokens", "corpus", "dump", "store", "out", "layer", "k", "aggregation",
      "checker_masks"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config field: " + key);

  RunConfig c;
  if (j.contains("name")) c.name = get<std::string>(j, "name");
  if (j.contains("concept_spec")) c.concept_spec = get_path(j, "concept_spec");
  if (j.contains("ast")) c.ast_ids = get<std::vector<std::string>>(j, "ast");
  if (j.contains("builtins")) c.builtin_ids = get<std::vector<std::string>>(j, "builtins");
  if (j.contains("head_ast") && !j["head_ast"].is_null()) c.head_ast = get<std::size_t>(j, "head_ast");
  if (j.contains("head_builtin") && !j["head_builtin"].is_null())
    c.head_builtin = get<std::size_t>(j, "head_builtin");
  if (j.contains("object_prompts")) c.object_prompts = get<std::size_t>(j, "object_prompts");
  if (j.contains("checker_prompts")) c.checker_prompts = get<std::size_t>(j, "checker_prompts");
  if (j.contains("epsilons")) c.epsilons = get<std::vector<double>>(j, "epsilons");
  if (j.contains("consistencies")) c.consistencies = get<std::vector<double>>(j, "consistencies");
  if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed");
  if (j.contains("synth_preset")) c.synth_preset = get<std::string>(j, "synth_preset");
  if (j.contains("background_density")) c.background_density = get<double>(j, "background_density");
  if (j.contains("losses")) c.losses = get_path(j, "losses");
  if (j.contains("tokens")) c.tokens = get_path(j, "tokens");
  if (j.contains("corpus")) c.corpus = get_path(j, "corpus");
  if (j.contains("dump")) c.dump = get_path(j, "dump");
  if (j.contains("store")) c.store = get_path(j, "store");
  if (j.contains("out")) c.out = get_path(j, "out");
  if (j.contains("layer")) c.layer = get<std::size_t>(j, "layer");
  if (j.contains("k")) c.k = get<std::size_t>(j, "k");
  if (j.contains("aggregation")) {
    const auto a = parse_aggregation(get<std::string>(j, "aggregation"));
    if (!a) throw ConfigError("aggregation must be pooled or mean");
    c.aggregation = *a;
  }
  if (j.contains("checker_masks")) c.checker_masks = get<bool>(j, "checker_masks");
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

json RunConfig::to_json() const {
  json j;
  j["name"] = name;
  j["concept_spec"] = concept_spec.string();
  j["ast"] = ast_ids;
  j["builtins"] = builtin_ids;
  j["head_ast"] = head_ast ? json(*head_ast) : json(nullptr);
  j["head_builtin"] = head_builtin ? json(*head_builtin) : json(nullptr);
  j["object_prompts"] = object_prompts;
  j["checker_prompts"] = checker_prompts;
  j["epsilons"] = epsilons;
  j["consistencies"] = consistencies;
  j["seed"] = seed;
  j["synth_preset"] = synth_preset;
  j["background_density"] = background_density;
  j["losses"] = losses.string();
  j["tokens"] = tokens.string();
  j["corpus"] = corpus.string();
  j["dump"] = dump.string();
  j["store"] = store.string();
  j["out"] = out.string();
  j["layer"] = layer;
  j["k"] = k;
  j["aggregation"] = std::string(to_string(aggregation));
  j["checker_masks"] = checker_masks;
  return j;
}

void RunConfig::validate() const {
  if (name.empty() || name.find('/') != std::string::npos) throw ConfigError("name must be a plain word");
  if (epsilons.empty() || consistencies.empty()) throw ConfigError("grids must be non-empty");
  for (double e : epsilons)
    if (!(e > 0) || !std::isfinite(e)) throw ConfigError("epsilon must be a positive finite number");
  for (double c : consistencies)
    if (!(c > 0 && c <= 1)) throw ConfigError("consistency must be in (0, 1]");
  if (object_prompts == 0) throw ConfigError("object_prompts must be positive");
  if (layer >= kLayerCount) throw ConfigError("layer must be below " + std::to_string(kLayerCount));
  if (k == 0) throw ConfigError("k must be positive");
  if (!(background_density >= 0 && background_density < 1)) throw ConfigError("background_density in [0, 1)");
}

ConceptSpace RunConfig::space() const {
  const auto full = ConceptSpace::load(concept_spec.empty() ? default_concept_spec() : concept_spec);
  if (!ast_ids.empty() || !builtin_ids.empty()) return full.subspace(ast_ids, builtin_ids);
  if (head_ast || head_builtin)
    return full.head(head_ast.value_or(full.ast_nodes().size()), head_builtin.value_or(full.builtins().size()));
  return full;
}

std::vector<SweepSetting> RunConfig::grid() const { return make_grid(epsilons, consistencies); }

std::string RunConfig::hash() const { return hex64(fnv1a64(to_json().dump())); }

std::filesystem::path RunConfig::cache_dir() const {
  std::filesystem::path root = ".atlas-cache";
  if (const char* env = std::getenv("ATLAS_CACHE_DIR"); env && *env)
    root = env;
  else if (const char* home = std::getenv("HOME"); home && *home)
    root = std::filesystem::path(home) / ".cache" / "atlas";
  return root / (name + "-" + hash());
}

std::filesystem::path RunConfig::corpus_path() const { return corpus.empty() ? cache_dir() / "corpus.tsv" : corpus; }
std::filesystem::path RunConfig::dump_path() const { return dump.empty() ? cache_dir() / "dump.acsp" : dump; }
std::filesystem::path RunConfig::store_path() const { return store.empty() ? cache_dir() / "masks.acsm" : store; }

std::string_view tool_version() { return ATLAS_VERSION; }

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> buf(1 << 20);
  std::uint64_t h = kFnvOffset;
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

CommandManifest::CommandManifest(std::string command, const RunConfig& config)
    : command_(std::move(command)), config_(config.to_json()), hash_(config.hash()), seed_(config.seed) {}

void CommandManifest::add_input(const std::filesystem::path& path) {
  inputs_.push_back({{"path", path.string()}, {"bytes", std::filesystem::file_size(path)}});
}

void CommandManifest::add_output(const std::filesystem::path& path) {
  outputs_.push_back(
      {{"path", path.string()}, {"bytes", std::filesystem::file_size(path)}, {"fnv1a64", hex64(hash_file(path))}});
}

json CommandManifest::to_json() const {
  json j;
  j["command"] = command_;
  j["tool"] = "atlas";
  j["tool_version"] = tool_version();
  j["config_hash"] = hash_;
  j["seed"] = seed_;
  j["config"] = config_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  if (!extra_.empty()) j["extra"] = extra_;
  return j;
}

std::filesystem::path CommandManifest::save(const std::filesystem::path& out_dir) const {
  std::filesystem::create_directories(out_dir);
  const auto path = out_dir / (command_ + ".manifest.json");
  write_file(path, to_json().dump(2) + "\n");
  return path;
}

}  // namespace atlas
