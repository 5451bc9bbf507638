#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/prompt_corpus.hpp"
#include "atlas/promptgen.hpp"
#include "atlas/pyast.hpp"
#include "atlas/util.hpp"
#include "doctest.h"
#include "py_oracle.hpp"

using namespace atlas;

namespace {

const ConceptSpace& space() {
  static const ConceptSpace s = ConceptSpace::load(default_concept_spec());
  return s;
}

const PromptGenerator& generator() {
  static const PromptGenerator g(GeneratorResources::load(default_data_dir()));
  return g;
}

ConceptPair pair_of(std::string_view a, std::string_view b) { return {&space().at(a), &space().at(b)}; }

bool same_prompts(const PromptSet& x, const PromptSet& y) {
  return x.owner == y.owner && x.generation_seed == y.generation_seed && x.prompts == y.prompts;
}

}  // namespace

TEST_CASE("every AST node has a template") {
  std::set<std::string> registered;
  for (const auto& id : PromptGenerator::template_ids()) registered.insert(id);
  for (const auto& c : space().ast_nodes()) CHECK_MESSAGE(registered.count(c.id), c.id);
  CHECK(registered.size() == space().ast_nodes().size());
}

TEST_CASE("object candidates: count, ids and validity") {
  const auto set = generator().object_candidates(pair_of("For", "range"), 50, 7);
  CHECK(set.owner == "For/range");
  REQUIRE(set.prompts.size() == 80);
  CHECK(set.prompts.front().id == "obj/For/range/000");
  CHECK(set.prompts.back().id == "obj/For/range/079");
  std::set<std::string> texts;
  for (const auto& p : set.prompts) {
    CAPTURE(p.text);
    CHECK(p.kind == PromptKind::object);
    CHECK_FALSE(p.category);
    CHECK(validate_object_prompt(p.text, space().at("For"), space().at("range")));
    texts.insert(p.text);
  }
  CHECK(texts.size() == set.prompts.size());
}

TEST_CASE("generation is deterministic per seed") {
  const auto a = generator().generate_object_prompts(pair_of("Break", "len"), 20, 11);
  const auto b = generator().generate_object_prompts(pair_of("Break", "len"), 20, 11);
  const auto c = generator().generate_object_prompts(pair_of("Break", "len"), 20, 12);
  CHECK(same_prompts(a, b));
  CHECK_FALSE(same_prompts(a, c));
  const auto ca = generator().generate_checker_prompts(space().at("Break"), 10, 11);
  const auto cb = generator().generate_checker_prompts(space().at("Break"), 10, 11);
  CHECK(same_prompts(ca, cb));
}

TEST_CASE("every pair yields valid object prompts") {
  std::size_t total = 0;
  for (const auto& p : pairs(space())) {
    const auto set = generator().generate_object_prompts(p, 3, 1);
    REQUIRE(set.prompts.size() == 3);
    for (const auto& pr : set.prompts) {
      CAPTURE(pr.text);
      REQUIRE(validate_object_prompt(pr.text, *p.ast, *p.builtin));
      ++total;
    }
  }
  CHECK(total == 43u * 63u * 3u);
}

TEST_CASE("context and padding rates follow the configuration") {
  std::map<Context, int> ctx;
  int padded = 0, total = 0;
  for (const char* ast : {"For", "Assign", "Call", "If"}) {
    const auto set = generator().object_candidates(pair_of(ast, "len"), 500, 3);
    for (const auto& p : set.prompts) {
      ++ctx[p.context];
      padded += p.padded;
      ++total;
    }
  }
  CHECK(std::abs(ctx[Context::global] / double(total) - 0.4) < 0.03);
  CHECK(std::abs(ctx[Context::function] / double(total) - 0.3) < 0.03);
  CHECK(std::abs(ctx[Context::method] / double(total) - 0.3) < 0.03);
  CHECK(std::abs(padded / double(total) - 0.5) < 0.03);
}

TEST_CASE("padding never introduces the target concepts") {
  const auto set = generator().object_candidates(pair_of("Assign", "int"), 200, 5);
  for (const auto& p : set.prompts) {
    if (!p.padded) continue;
    const auto tree = py::parse_module(p.text);
    // Exactly one Assign is the template's own.
    CHECK(tree.find_all("Assign").size() == 1);
  }
}

TEST_CASE("object validation anchors the builtin to the target node") {
  const auto& For = space().at("For");
  const auto& range = space().at("range");
  const auto& Break = space().at("Break");
  const auto& Pass = space().at("Pass");
  CHECK(validate_object_prompt("for i in range(3):\n    pass", For, range));
  CHECK_FALSE(validate_object_prompt("x = range(3)\nfor i in x:\n    pass", For, range));
  CHECK_FALSE(validate_object_prompt("for i in range(3)\n    pass", For, range));
  CHECK(validate_object_prompt("for i in x:\n    if range(i):\n        break", Break, range));
  CHECK_FALSE(validate_object_prompt("y = range(2)\nfor i in x:\n    break", Break, range));
  CHECK(validate_object_prompt("if range(1):\n    pass", Pass, range));
  CHECK(validate_object_prompt("import range", space().at("Import"), range));
  CHECK(validate_object_prompt("from m import range", space().at("ImportFrom"), range));
  CHECK_FALSE(validate_object_prompt("import m\nrange(1)", space().at("Import"), range));
}

TEST_CASE("checker prompts cycle categories and satisfy all three checks") {
  SurfaceTokenizerView surface;
  for (const auto* obj : testable_objects(space())) {
    CAPTURE(obj->id);
    const auto set = generator().generate_checker_prompts(*obj, 10, 4);
    REQUIRE(set.prompts.size() == 10);
    for (std::size_t i = 0; i < set.prompts.size(); ++i) {
      const auto& p = set.prompts[i];
      CAPTURE(p.text);
      CHECK(p.kind == PromptKind::checker);
      REQUIRE(p.category);
      CHECK(static_cast<std::size_t>(*p.category) == i % 5);
      const auto r = validate_checker_prompt(p, *obj, surface);
      CHECK(r.parses);
      CHECK(r.concept_absent);
      CHECK(r.token_present);
    }
  }
}

TEST_CASE("n = 5 gives one checker prompt per category") {
  const auto set = generator().generate_checker_prompts(space().at("print"), 5, 1);
  std::set<char> cats;
  for (const auto& p : set.prompts) cats.insert(to_char(*p.category));
  CHECK(cats == std::set<char>{'A', 'B', 'C', 'D', 'E'});
  for (const auto& p : set.prompts) CHECK_FALSE(py::parse_module(p.text).references("print"));
}

TEST_CASE("checker prompts for FunctionDef avoid def-bearing contexts") {
  const auto set = generator().generate_checker_prompts(space().at("FunctionDef"), 30, 2);
  for (const auto& p : set.prompts) CHECK(p.context == Context::global);
  const auto cls = generator().generate_checker_prompts(space().at("ClassDef"), 30, 2);
  for (const auto& p : cls.prompts) CHECK(p.context != Context::method);
}

TEST_CASE("checker validation reports each failure separately") {
  SurfaceTokenizerView surface;
  const auto& brk = space().at("Break");
  Prompt p{.id = "chk/Break/000", .kind = PromptKind::checker, .owner = "Break", .text = "x = 1"};
  CHECK(validate_checker_prompt(p, brk, surface) == ValidationReport{true, true, false});
  p.text = "x = 'break'";
  CHECK(validate_checker_prompt(p, brk, surface).valid());
  p.text = "for i in x:\n    break";
  CHECK(validate_checker_prompt(p, brk, surface) == ValidationReport{true, false, true});
  p.text = "x = 'break";
  CHECK(validate_checker_prompt(p, brk, surface) == ValidationReport{false, false, true});
  CHECK_THROWS_AS(validate_checker_prompt(p, space().at("Call"), surface), PromptError);
}

TEST_CASE("surface view splits on punctuation but keeps underscores") {
  const auto lex = SurfaceTokenizerView::lexemes("breakdown_count = {\"for\": 1}  # if-else");
  const std::vector<std::string_view> want = {"breakdown_count", "for", "1", "if", "else"};
  CHECK(lex == want);
}

TEST_CASE("model view matches whole tokens after stripping space markers") {
  const auto view = ModelTokenizerView::parse(
      "{\"id\": \"chk/Break/000\", \"tokens\": [\"x\", \"\\u0120=\", \"\\u0120break\"]}\n"
      "{\"id\": \"chk/Break/001\", \"tokens\": [\"\\u2581breakdown\", \"_count\"]}\n");
  CHECK(view.size() == 2);
  Prompt p{.id = "chk/Break/000"};
  CHECK(view.token_present(p, "break"));
  p.id = "chk/Break/001";
  CHECK_FALSE(view.token_present(p, "break"));
  p.id = "chk/Break/404";
  CHECK_FALSE(view.token_present(p, "break"));
  CHECK_THROWS_AS(ModelTokenizerView::parse("{\"id\": 1}"), PromptError);
  CHECK_THROWS_AS(ModelTokenizerView::parse("not json"), PromptError);
}

TEST_CASE("select_top_by_loss keeps the lowest losses with index tie-break") {
  PromptSet c;
  c.owner = "For/len";
  for (int i = 0; i < 6; ++i) c.prompts.push_back(Prompt{.id = "p" + std::to_string(i)});
  const std::vector<double> scores = {3.0, 1.0, 2.0, 1.0, 0.5, 2.0};
  const auto top = select_top_by_loss(c, std::span<const double>(scores), 4);
  std::vector<std::string> ids;
  for (const auto& p : top.prompts) ids.push_back(p.id);
  CHECK(ids == std::vector<std::string>{"p1", "p2", "p3", "p4"});
  const auto first = select_top_by_loss(c, std::nullopt, 2);
  CHECK(first.prompts[1].id == "p1");
  CHECK_THROWS_AS(select_top_by_loss(c, std::nullopt, 7), PromptError);
  const std::vector<double> bad = {1, 2, NAN, 3, 4, 5};
  CHECK_THROWS_AS(select_top_by_loss(c, std::span<const double>(bad), 2), PromptError);
  const std::vector<double> short_scores = {1, 2};
  CHECK_THROWS_AS(select_top_by_loss(c, std::span<const double>(short_scores), 2), PromptError);
}

TEST_CASE("loss-driven selection through the generator") {
  const auto pair = pair_of("While", "len");
  const auto cands = generator().object_candidates(pair, 5, 9);
  std::map<std::string, double> losses;
  for (std::size_t i = 0; i < cands.prompts.size(); ++i)
    losses[cands.prompts[i].id] = static_cast<double>(cands.prompts.size() - i);
  const auto top = generator().generate_object_prompts(pair, 5, 9, &losses);
  REQUIRE(top.prompts.size() == 5);
  CHECK(top.prompts.front().id == cands.prompts[3].id);
  CHECK(top.prompts.back().id == cands.prompts.back().id);
  losses.erase(cands.prompts[0].id);
  CHECK_THROWS_AS(generator().generate_object_prompts(pair, 5, 9, &losses), PromptError);
}

TEST_CASE("loss files") {
  const auto dir = std::filesystem::temp_directory_path() / "atlas_losses_test";
  std::filesystem::create_directories(dir);
  write_file(dir / "ok.tsv", "# id\tloss\nobj/For/len/000\t1.25\nobj/For/len/001\t-0.5\n");
  const auto l = load_losses(dir / "ok.tsv");
  CHECK(l.at("obj/For/len/000") == doctest::Approx(1.25));
  write_file(dir / "dup.tsv", "a\t1\na\t2\n");
  CHECK_THROWS_AS(load_losses(dir / "dup.tsv"), PromptError);
  write_file(dir / "bad.tsv", "a\t1x\n");
  CHECK_THROWS_AS(load_losses(dir / "bad.tsv"), PromptError);
  write_file(dir / "nan.tsv", "a\tnan\n");
  CHECK_THROWS_AS(load_losses(dir / "nan.tsv"), PromptError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corpus round trip preserves every field") {
  std::vector<Prompt> ps = {
      Prompt{"obj/For/len/000", PromptKind::object, "For/len", "for a in len(b):\n\tc = 'x\\\\y'\r\n", Context::method,
             "finance", true, std::nullopt},
      Prompt{"chk/For/001", PromptKind::checker, "For", "x = 'for'", Context::global, "gaming", false,
             CheckerCategory::B},
  };
  const auto text = format_corpus(ps);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);
  CHECK(parse_corpus(text) == ps);
  CHECK_THROWS_AS(parse_corpus("a\tobject\tFor/len\t-\tglobal\tfinance\t1\n"), PromptError);
  CHECK_THROWS_AS(parse_corpus("a\tobject\tFor/len\tA\tglobal\tfinance\t1\tx\n"), PromptError);
  CHECK_THROWS_AS(parse_corpus("a\tchecker\tFor\t-\tglobal\tfinance\t1\tx\n"), PromptError);
  CHECK_THROWS_AS(parse_corpus("a\tobject\tFor/len\t-\tglobal\tfinance\t1\tx\\q\n"), PromptError);
  CHECK(unescape_field(escape_field("a\\tb\t\n\\")) == "a\\tb\t\n\\");
}

TEST_CASE("generated prompts agree with CPython") {
  std::vector<std::string> texts;
  std::vector<std::pair<const Concept*, const Concept*>> owners;
  for (const auto& p : pairs(space())) {
    for (const auto& pr : generator().generate_object_prompts(p, 2, 21).prompts) {
      texts.push_back(pr.text);
      owners.emplace_back(p.ast, p.builtin);
    }
  }
  const std::size_t n_object = texts.size();
  for (const auto* obj : testable_objects(space())) {
    for (const auto& pr : generator().generate_checker_prompts(*obj, 10, 21).prompts) {
      texts.push_back(pr.text);
      owners.emplace_back(obj, nullptr);
    }
  }
  const auto oracle = atlas_test::cpython_counts(texts, true);
  if (!oracle) {
    MESSAGE("python3 not available; CPython cross-check skipped");
    return;
  }
  REQUIRE(oracle->size() == texts.size());
  std::size_t failures = 0;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const auto& ref = (*oracle)[i];
    const auto ours = py::parse_module(texts[i]);
    bool ok = ref.ok && ours.type_counts() == ref.counts;
    if (i < n_object) {
      ok = ok && ref.counts.count(owners[i].first->id) && ref.names.count(owners[i].second->id);
    } else {
      const Concept* obj = owners[i].first;
      ok = ok && (obj->is_ast() ? !ref.counts.count(obj->id) : !ref.names.count(obj->id));
    }
    if (!ok && failures++ < 5) MESSAGE("disagreement on: " << texts[i]);
  }
  CHECK(failures == 0);
}
