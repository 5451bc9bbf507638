// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/concept_space.hpp"

namespace atlas {

enum class PromptKind { object, checker };
enum class Context { global, function, method };

// Non-structural keyword contexts for checker prompts:
// A string, B comment, C identifier, D dict key, E printed string.
enum class CheckerCategory { A, B, C, D, E };

inline constexpr std::size_t kCheckerCategoryCount = 5;

std::string_view to_string(PromptKind k);
std::string_view to_string(Context c);
char to_char(CheckerCategory c);
std::optional<PromptKind> parse_prompt_kind(std::string_view s);
std::optional<Context> parse_context(std::string_view s);
std::optional<CheckerCategory> parse_category(char c);

struct Prompt {
  std::string id;
  PromptKind kind = PromptKind::object;
  // "<ast>/<builtin>" for object prompts, the object id for checker prompts.
  std::string owner;
  std::string text;
  Context context = Context::global;
  std::string name_domain;
  bool padded = false;
  std::optional<CheckerCategory> category;

  bool operator==(const Prompt&) const = default;
};

struct PromptSet {
  std::string owner;
  std::vector<Prompt> prompts;
  std::uint64_t generation_seed = 0;
};

struct ValidationReport {
  bool parses = false;
  bool concept_absent = false;
  bool token_present = false;

  bool valid() const { return parses && concept_absent && token_present; }
  bool operator==(const ValidationReport&) const = default;
};

class PromptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Decides whether a keyword counts as present in a prompt's token stream.
class TokenizerView {
 public:
  virtual ~TokenizerView() = default;
  virtual bool token_present(const Prompt& prompt, std::string_view keyword) const = 0;
};

// Keyword is a substring of some lexeme, where lexemes are maximal runs of
// characters other than whitespace and punctuation (underscore is kept).
class SurfaceTokenizerView final : public TokenizerView {
 public:
  bool token_present(const Prompt& prompt, std::string_view keyword) const override;
  static std::vector<std::string_view> lexemes(std::string_view text);
};

// Membership against token sequences exported by the extraction adapter.
// File format: one JSON object per line, {"id": <prompt id>, "tokens": [...]}.
// Leading space markers ("Ġ", "▁", ' ') are stripped before comparison.
class ModelTokenizerView final : public TokenizerView {
 public:
  static ModelTokenizerView load(const std::filesystem::path& path);
  static ModelTokenizerView parse(std::string_view jsonl);
  bool token_present(const Prompt& prompt, std::string_view keyword) const override;
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>* tokens_for(std::string_view prompt_id) const;

 private:
  std::map<std::string, std::vector<std::string>, std::less<>> tokens_;
};

// Word lists and padding statements shipped under data/.
struct GeneratorResources {
  std::vector<std::string> domain_names;                 // finance, biology, ...
  std::vector<std::vector<std::string>> domain_words;    // parallel to domain_names
  std::vector<std::string> padding;

  static GeneratorResources load(const std::filesystem::path& data_dir);
};

struct GeneratorConfig {
  double global_weight = 0.4;
  double function_weight = 0.3;
  double method_weight = 0.3;
  double padding_rate = 0.5;
  double overgeneration = 1.6;
  // Attempts per requested prompt before the generator gives up.
  std::size_t attempts_per_prompt = 40;
};

class PromptGenerator {
 public:
  explicit PromptGenerator(GeneratorResources resources, GeneratorConfig config = {});

  // ceil(overgeneration * n) validated object candidates in generation order.
  PromptSet object_candidates(const ConceptPair& pair, std::size_t n, std::uint64_t root_seed) const;

  // n validated object prompts: the candidates reduced by select_top_by_loss.
  // Without scores the first n candidates are kept.
  PromptSet generate_object_prompts(const ConceptPair& pair, std::size_t n, std::uint64_t root_seed,
                                    const std::map<std::string, double>* losses = nullptr) const;

  // n checker prompts cycling through categories A..E.
  PromptSet generate_checker_prompts(const Concept& object, std::size_t n, std::uint64_t root_seed,
                                     const TokenizerView* view = nullptr) const;

  const GeneratorConfig& config() const { return config_; }
  const GeneratorResources& resources() const { return resources_; }

  // Registered AST node ids.
  static std::vector<std::string> template_ids();

 private:
  GeneratorResources resources_;
  GeneratorConfig config_;
  std::vector<std::string> neutral_padding_;
};

// Object prompt validity: parses, contains the target node, and the builtin
// is referenced inside that node's subtree (or inside the enclosing node
// when the target has no children, as for Break or Pass).
bool validate_object_prompt(std::string_view text, const Concept& ast, const Concept& builtin);

// Whether a concept occurs in a parsed tree: an AST node of that type, or a
// reference to a builtin's name.
bool concept_present(std::string_view text, const Concept& c);

ValidationReport validate_checker_prompt(const Prompt& prompt, const Concept& object,
                                         const TokenizerView& view);

// The n lowest-loss candidates, ties broken by candidate index. Missing
// scores keep the first n candidates. Throws when fewer than n exist.
PromptSet select_top_by_loss(const PromptSet& candidates, std::optional<std::span<const double>> scores,
                             std::size_t n);

// Loss file: "<prompt id>\t<loss>" per line.
std::map<std::string, double> load_losses(const std::filesystem::path& path);

}  // namespace atlas
