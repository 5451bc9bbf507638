// SPDX-License-Identifier: Apache-2.0
#include "atlas/promptgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include "atlas/pyast.hpp"
#include "atlas/util.hpp"
#include "json.hpp"
#include "prompt_templates.hpp"

namespace atlas {

std::string_view to_string(PromptKind k) { return k == PromptKind::object ? "object" : "checker"; }

std::string_view to_string(Context c) {
  switch (c) {
    case Context::global: return "global";
    case Context::function: return "function";
    case Context::method: return "method";
  }
  return "?";
}

char to_char(CheckerCategory c) { return static_cast<char>('A' + static_cast<int>(c)); }

std::optional<PromptKind> parse_prompt_kind(std::string_view s) {
  if (s == "object") return PromptKind::object;
  if (s == "checker") return PromptKind::checker;
  return std::nullopt;
}

std::optional<Context> parse_context(std::string_view s) {
  if (s == "global") return Context::global;
  if (s == "function") return Context::function;
  if (s == "method") return Context::method;
  return std::nullopt;
}

std::optional<CheckerCategory> parse_category(char c) {
  if (c < 'A' || c > 'E') return std::nullopt;
  return static_cast<CheckerCategory>(c - 'A');
}

// ---------------------------------------------------------------------------
// Tokenizer views

std::vector<std::string_view> SurfaceTokenizerView::lexemes(std::string_view text) {
  std::vector<std::string_view> out;
  auto word = [](unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && !word(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t b = i;
    while (i < text.size() && word(static_cast<unsigned char>(text[i]))) ++i;
    if (i > b) out.push_back(text.substr(b, i - b));
  }
  return out;
}

bool SurfaceTokenizerView::token_present(const Prompt& prompt, std::string_view keyword) const {
  if (keyword.empty()) return false;
  for (auto lex : lexemes(prompt.text))
    if (lex.find(keyword) != std::string_view::npos) return true;
  return false;
}

namespace {

std::string_view strip_space_marker(std::string_view tok) {
  while (true) {
    if (tok.starts_with("\xC4\xA0")) {         // "Ġ"
      tok.remove_prefix(2);
    } else if (tok.starts_with("\xE2\x96\x81")) {  // "▁"
      tok.remove_prefix(3);
    } else if (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t' || tok.front() == '\n')) {
      tok.remove_prefix(1);
    } else {
      break;
    }
  }
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\n')) tok.remove_suffix(1);
  return tok;
}

}  // namespace

ModelTokenizerView ModelTokenizerView::parse(std::string_view jsonl) {
  ModelTokenizerView view;
  std::size_t line_no = 0;
  for (auto line : split(jsonl, '\n')) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw PromptError("token file line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.contains("id") || !j.contains("tokens") || !j["tokens"].is_array())
      throw PromptError("token file line " + std::to_string(line_no) + ": need \"id\" and \"tokens\"");
    auto id = j["id"].get<std::string>();
    auto tokens = j["tokens"].get<std::vector<std::string>>();
    if (!view.tokens_.emplace(std::move(id), std::move(tokens)).second)
      throw PromptError("token file line " + std::to_string(line_no) + ": duplicate id");
  }
  return view;
}

ModelTokenizerView ModelTokenizerView::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

const std::vector<std::string>* ModelTokenizerView::tokens_for(std::string_view prompt_id) const {
  const auto it = tokens_.find(prompt_id);
  return it == tokens_.end() ? nullptr : &it->second;
}

bool ModelTokenizerView::token_present(const Prompt& prompt, std::string_view keyword) const {
  const auto* toks = tokens_for(prompt.id);
  if (!toks) return false;
  return std::any_of(toks->begin(), toks->end(),
                     [&](const std::string& t) { return strip_space_marker(t) == keyword; });
}

// ---------------------------------------------------------------------------
// Resources

GeneratorResources GeneratorResources::load(const std::filesystem::path& data_dir) {
  GeneratorResources res;
  const auto names_dir = data_dir / "names";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(names_dir))
    if (entry.path().extension() == ".txt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::vector<std::string> words;
    const std::string text = read_file(f);
    for (auto line : split(text, '\n')) {
      const auto w = trim(line);
      if (w.empty() || w.front() == '#') continue;
      if (py::is_keyword(w)) throw PromptError("name list " + f.string() + " contains keyword " + std::string(w));
      words.emplace_back(w);
    }
    if (words.size() < 5) throw PromptError("name list " + f.string() + " needs at least 5 identifiers");
    res.domain_names.push_back(f.stem().string());
    res.domain_words.push_back(std::move(words));
  }
  if (res.domain_names.empty()) throw PromptError("no name lists under " + names_dir.string());
  const std::string padding = read_file(data_dir / "padding.txt");
  for (auto line : split(padding, '\n')) {
    const auto s = trim(line);
    if (s.empty() || s.front() == '#') continue;
    res.padding.emplace_back(s);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Validation

namespace {

bool present_in(const py::SyntaxTree& tree, const Concept& c) {
  return c.is_ast() ? tree.contains(c.id) : tree.references(c.id);
}

}  // namespace

bool concept_present(std::string_view text, const Concept& c) {
  const auto tree = py::try_parse_module(text);
  return tree && present_in(*tree, c);
}

bool validate_object_prompt(std::string_view text, const Concept& ast, const Concept& builtin) {
  const auto tree = py::try_parse_module(text);
  if (!tree) return false;
  for (const auto id : tree->find_all(ast.id)) {
    const auto& node = tree->node(id);
    const auto anchor = node.children.empty() && node.parent != py::kNoNode ? node.parent : id;
    if (tree->references(anchor, builtin.id)) return true;
  }
  return false;
}

ValidationReport validate_checker_prompt(const Prompt& prompt, const Concept& object, const TokenizerView& view) {
  if (!object.keyword) throw PromptError("object " + object.id + " has no keyword and is not testable");
  ValidationReport r;
  const auto tree = py::try_parse_module(prompt.text);
  r.parses = tree.has_value();
  r.concept_absent = r.parses && !present_in(*tree, object);
  r.token_present = view.token_present(prompt, *object.keyword);
  return r;
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct Names {
  std::vector<std::string> words;  // $v $w $u $x $y
  std::string function, klass, wrapper, method;
  int number = 1;
};

constexpr std::array<std::string_view, 5> kFunctionPrefixes = {"compute", "update", "load", "build", "check"};
constexpr std::array<std::string_view, 4> kClassSuffixes = {"Manager", "Tracker", "Model", "Service"};

std::string camel(std::string_view word) {
  std::string out;
  bool up = true;
  for (char c : word) {
    if (c == '_') {
      up = true;
      continue;
    }
    out += up ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c;
    up = false;
  }
  return out;
}

Names draw_names(Rng& rng, const std::vector<std::string>& pool) {
  Names n;
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  // Partial Fisher-Yates for the first seven distinct words.
  const std::size_t need = std::min<std::size_t>(7, pool.size());
  for (std::size_t i = 0; i < need; ++i) std::swap(idx[i], idx[i + rng.below(pool.size() - i)]);
  for (std::size_t i = 0; i < 5; ++i) n.words.push_back(pool[idx[i % need]]);
  const auto& f_word = pool[idx[5 % need]];
  const auto& c_word = pool[idx[6 % need]];
  n.function = std::string(kFunctionPrefixes[rng.below(kFunctionPrefixes.size())]) + "_" + f_word;
  n.klass = camel(c_word) + std::string(kClassSuffixes[rng.below(kClassSuffixes.size())]);
  n.wrapper = "run_" + f_word;
  n.method = "handle_" + c_word;
  n.number = static_cast<int>(1 + rng.below(99));
  return n;
}

std::string substitute(std::string_view body, const Names& names, std::string_view builtin, std::string_view keyword) {
  std::string out;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (body[i] != '$' || i + 1 >= body.size()) {
      out += body[i];
      continue;
    }
    const char p = body[++i];
    switch (p) {
      case 'b': out += builtin; break;
      case 'K': out += keyword; break;
      case 'v': out += names.words[0]; break;
      case 'w': out += names.words[1]; break;
      case 'u': out += names.words[2]; break;
      case 'x': out += names.words[3]; break;
      case 'y': out += names.words[4]; break;
      case 'f': out += names.function; break;
      case 'C': out += names.klass; break;
      case 'n': out += std::to_string(names.number); break;
      default: throw PromptError(std::string("unknown template placeholder $") + p);
    }
  }
  return out;
}

std::string indent(std::string_view body, int width) {
  std::string out;
  const std::string pad(static_cast<std::size_t>(width), ' ');
  for (auto line : split(body, '\n')) {
    if (!out.empty()) out += '\n';
    out += pad;
    out += line;
  }
  return out;
}

std::string wrap(std::string_view body, Context ctx, bool needs_function, bool needs_async, const Names& names) {
  const std::string def = needs_async ? "async def " : "def ";
  switch (ctx) {
    case Context::global:
      if (!needs_function) return std::string(body);
      return def + names.wrapper + "(" + names.words[0] + "):\n" + indent(body, 4);
    case Context::function:
      return def + names.wrapper + "(" + names.words[0] + "):\n" + indent(body, 4);
    case Context::method:
      return "class " + names.klass + "Base:\n    " + def + names.method + "(self, " + names.words[0] + "):\n" +
             indent(body, 8);
  }
  return std::string(body);
}

Context draw_context(Rng& rng, const GeneratorConfig& cfg) {
  const std::size_t k = rng.weighted({cfg.global_weight, cfg.function_weight, cfg.method_weight});
  return static_cast<Context>(k);
}

// Draws one context per output slot and keeps it across rejected attempts,
// so duplicate rejection does not skew the context mix. A context that keeps
// failing is redrawn.
class ContextSlot {
 public:
  Context next(Rng& rng, const GeneratorConfig& cfg) {
    if (!ctx_ || tries_ >= kTries) {
      ctx_ = draw_context(rng, cfg);
      tries_ = 0;
    }
    ++tries_;
    return *ctx_;
  }
  void reset() { ctx_.reset(); }

 private:
  static constexpr int kTries = 8;
  std::optional<Context> ctx_;
  int tries_ = 0;
};

std::string prompt_index(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03zu", i);
  return buf;
}

// Padding statements that introduce none of the given concepts or keywords.
std::vector<std::string> padding_for(const std::vector<std::string>& pool, std::initializer_list<const Concept*> avoid) {
  std::vector<std::string> out;
  SurfaceTokenizerView surface;
  Prompt probe;
  for (const auto& s : pool) {
    probe.text = s;
    const auto tree = py::try_parse_module(s);
    if (!tree) continue;
    bool ok = true;
    for (const Concept* c : avoid) {
      if (present_in(*tree, *c)) ok = false;
      if (c->keyword && surface.token_present(probe, *c->keyword)) ok = false;
    }
    if (ok) out.push_back(s);
  }
  return out;
}

struct Draft {
  std::string text;
  Context context;
  std::string domain;
  bool padded;
};

Draft render(Rng& rng, const GeneratorConfig& cfg, const GeneratorResources& res,
             const std::vector<std::string>& padding, std::string_view body, bool needs_function,
             bool needs_async, std::string_view builtin, std::string_view keyword, std::optional<Context> forced) {
  Draft d;
  d.context = forced ? *forced : draw_context(rng, cfg);
  const std::size_t domain = rng.below(res.domain_names.size());
  d.domain = res.domain_names[domain];
  const Names names = draw_names(rng, res.domain_words[domain]);
  std::string code = wrap(substitute(body, names, builtin, keyword), d.context, needs_function, needs_async, names);
  d.padded = false;
  if (rng.chance(cfg.padding_rate) && !padding.empty()) {
    const auto& pad = rng.pick(padding);
    code = rng.chance(0.5) ? pad + "\n" + code : code + "\n" + pad;
    d.padded = true;
  }
  d.text = std::move(code);
  return d;
}

}  // namespace

PromptGenerator::PromptGenerator(GeneratorResources resources, GeneratorConfig config)
    : resources_(std::move(resources)), config_(config) {
  if (resources_.domain_names.empty() || resources_.domain_names.size() != resources_.domain_words.size())
    throw PromptError("generator needs at least one name domain");
  if (config_.overgeneration < 1.0) throw PromptError("overgeneration factor must be >= 1");
}

std::vector<std::string> PromptGenerator::template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : detail::object_templates())
    if (std::find(ids.begin(), ids.end(), t.ast) == ids.end()) ids.emplace_back(t.ast);
  return ids;
}

PromptSet PromptGenerator::object_candidates(const ConceptPair& pair, std::size_t n, std::uint64_t root_seed) const {
  std::vector<const detail::ObjectTemplate*> variants;
  for (const auto& t : detail::object_templates())
    if (t.ast == pair.ast->id) variants.push_back(&t);
  if (variants.empty()) throw PromptError("no template registered for AST node " + pair.ast->id);

  PromptSet set;
  set.owner = pair.id();
  set.generation_seed = derive_seed(root_seed, "obj/" + set.owner);
  Rng rng(set.generation_seed);
  const auto padding = padding_for(resources_.padding, {pair.ast, pair.builtin});
  const auto count = static_cast<std::size_t>(std::ceil(config_.overgeneration * static_cast<double>(n) - 1e-9));
  std::set<std::string> seen;
  ContextSlot slot;
  std::size_t attempts = 0;
  while (set.prompts.size() < count) {
    if (++attempts > config_.attempts_per_prompt * std::max<std::size_t>(count, 1))
      throw PromptError("could not generate " + std::to_string(count) + " valid prompts for " + set.owner);
    const Context ctx = slot.next(rng, config_);
    const auto* t = variants[rng.below(variants.size())];
    auto d = render(rng, config_, resources_, padding, t->body, t->needs_function, t->needs_async, pair.builtin->id,
                    "", ctx);
    if (seen.count(d.text) || !validate_object_prompt(d.text, *pair.ast, *pair.builtin)) continue;
    seen.insert(d.text);
    slot.reset();
    Prompt p;
    p.id = "obj/" + set.owner + "/" + prompt_index(set.prompts.size());
    p.kind = PromptKind::object;
    p.owner = set.owner;
    p.text = std::move(d.text);
    p.context = d.context;
    p.name_domain = d.domain;
    p.padded = d.padded;
    set.prompts.push_back(std::move(p));
  }
  return set;
}

PromptSet PromptGenerator::generate_object_prompts(const ConceptPair& pair, std::size_t n, std::uint64_t root_seed,
                                                   const std::map<std::string, double>* losses) const {
  auto candidates = object_candidates(pair, n, root_seed);
  if (!losses) return select_top_by_loss(candidates, std::nullopt, n);
  std::vector<double> scores;
  scores.reserve(candidates.prompts.size());
  std::size_t missing = 0;
  for (const auto& p : candidates.prompts) {
    const auto it = losses->find(p.id);
    if (it == losses->end()) {
      ++missing;
      scores.push_back(0);
    } else {
      scores.push_back(it->second);
    }
  }
  if (missing)
    throw PromptError("loss file lacks " + std::to_string(missing) + " candidate ids for " + candidates.owner);
  return select_top_by_loss(candidates, std::span<const double>(scores), n);
}

PromptSet PromptGenerator::generate_checker_prompts(const Concept& object, std::size_t n, std::uint64_t root_seed,
                                                    const TokenizerView* view) const {
  if (!object.keyword) throw PromptError("object " + object.id + " is not testable");
  SurfaceTokenizerView surface;
  const TokenizerView& tv = view ? *view : surface;
  const std::string& kw = *object.keyword;

  std::array<std::vector<std::string>, kCheckerCategoryCount> bodies;
  for (const auto& t : detail::checker_templates()) {
    std::string body(t.body);
    if (object.id == "print" && body.starts_with("print(")) body = "sys.stdout.write(" + body.substr(6);
    bodies[static_cast<std::size_t>(t.category - 'A')].push_back(std::move(body));
  }

  PromptSet set;
  set.owner = object.id;
  set.generation_seed = derive_seed(root_seed, "chk/" + object.id);
  Rng rng(set.generation_seed);
  const auto padding = padding_for(resources_.padding, {&object});
  std::set<std::string> seen;
  ContextSlot slot;
  std::size_t attempts = 0;
  while (set.prompts.size() < n) {
    if (++attempts > config_.attempts_per_prompt * std::max<std::size_t>(n, 1))
      throw PromptError("could not generate " + std::to_string(n) + " valid checker prompts for " + object.id);
    const auto cat = static_cast<CheckerCategory>(set.prompts.size() % kCheckerCategoryCount);
    const auto& pool = bodies[static_cast<std::size_t>(cat)];
    const auto& body = pool[rng.below(pool.size())];
    const Context ctx = slot.next(rng, config_);
    auto d = render(rng, config_, resources_, padding, body, false, false, "", kw, ctx);
    if (seen.count(d.text)) continue;
    Prompt p;
    p.id = "chk/" + object.id + "/" + prompt_index(set.prompts.size());
    p.kind = PromptKind::checker;
    p.owner = object.id;
    p.text = std::move(d.text);
    p.context = d.context;
    p.name_domain = d.domain;
    p.padded = d.padded;
    p.category = cat;
    // Contexts whose wrapper contains the object (a def for FunctionDef)
    // fail here and are redrawn.
    if (!validate_checker_prompt(p, object, tv).valid()) continue;
    seen.insert(p.text);
    slot.reset();
    set.prompts.push_back(std::move(p));
  }
  return set;
}

PromptSet select_top_by_loss(const PromptSet& candidates, std::optional<std::span<const double>> scores, std::size_t n) {
  if (candidates.prompts.size() < n)
    throw PromptError("only " + std::to_string(candidates.prompts.size()) + " candidates for " + candidates.owner +
                      ", need " + std::to_string(n));
  PromptSet out;
  out.owner = candidates.owner;
  out.generation_seed = candidates.generation_seed;
  if (!scores) {
    out.prompts.assign(candidates.prompts.begin(), candidates.prompts.begin() + static_cast<std::ptrdiff_t>(n));
    return out;
  }
  if (scores->size() != candidates.prompts.size())
    throw PromptError("score count does not match candidate count for " + candidates.owner);
  for (double s : *scores)
    if (!std::isfinite(s)) throw PromptError("non-finite loss for " + candidates.owner);
  std::vector<std::size_t> order(candidates.prompts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return (*scores)[a] < (*scores)[b]; });
  order.resize(n);
  std::sort(order.begin(), order.end());
  for (auto i : order) out.prompts.push_back(candidates.prompts[i]);
  return out;
}

std::map<std::string, double> load_losses(const std::filesystem::path& path) {
  std::map<std::string, double> out;
  std::size_t line_no = 0;
  const std::string text = read_file(path);
  for (auto raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split(line, '\t');
    auto where = [&] { return path.string() + ":" + std::to_string(line_no); };
    if (fields.size() != 2) throw PromptError(where() + ": expected <id>\\t<loss>");
    const std::string value(trim(fields[1]));
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      throw PromptError(where() + ": bad loss value '" + value + "'");
    }
    if (used != value.size() || !std::isfinite(v)) throw PromptError(where() + ": bad loss value '" + value + "'");
    if (!out.emplace(std::string(trim(fields[0])), v).second) throw PromptError(where() + ": duplicate id");
  }
  return out;
}

}  // namespace atlas
