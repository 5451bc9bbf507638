#include <unistd.h>

#include <filesystem>

#include "atlas/mask_engine.hpp"
#include "atlas/report.hpp"
#include "atlas/synth.hpp"
#include "atlas/util.hpp"
#include "doctest.h"

using namespace atlas;

namespace {

const ConceptSpace& full() {
  static const ConceptSpace s = ConceptSpace::load(default_concept_spec());
  return s;
}

const MaskStore& analog() {
  static const MaskStore st = ground_truth(presets::reference(full())).to_store(default_grid());
  return st;
}

std::vector<std::vector<std::string>> rows(const std::string& tsv) {
  std::vector<std::vector<std::string>> out;
  for (auto line : split(tsv, '\n')) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    for (auto c : split(line, '\t')) cells.emplace_back(c);
    out.push_back(std::move(cells));
  }
  return out;
}

}  // namespace

TEST_CASE("group table reproduces the pooled counts") {
  const auto t = rows(group_table(analog(), full(), {0.5, 0.8}, 5));
  REQUIRE(t.size() == 4);
  CHECK(t[0] == std::vector<std::string>{"tier", "members", "concept_only", "shared", "size", "cf_pct"});
  CHECK(t[1] == std::vector<std::string>{"modular-ast", "6", "10", "6", "16", "62.5"});
  CHECK(t[2] == std::vector<std::string>{"nonmodular-ast", "18", "32", "23", "55", "58.2"});
  CHECK(t[3] == std::vector<std::string>{"builtin", "34", "0", "36", "36", "0.0"});
  CHECK_THROWS_AS(group_table(analog(), full(), {0.5, 0.8}, 8), ReportError);
}

TEST_CASE("layer table matches a direct per-object mean") {
  const SweepSetting s{0.001, 0.8};
  const auto t = rows(layer_table(analog(), full(), s, Aggregation::mean));
  REQUIRE(t.size() == 4);
  const Tier tiers[] = {Tier::modular_ast, Tier::nonmodular_ast, Tier::builtin};
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      double sum = 0;
      std::size_t n = 0;
      for (const auto* c : tier_members(full(), tiers[r])) {
        if (!c->testable) continue;
        const auto& u = analog().at(MaskKind::universal, c->id, s)[l];
        const auto& b = analog().at(MaskKind::checker, c->id, s)[l];
        if (u.empty()) continue;
        sum += static_cast<double>(u.minus(b).count()) / static_cast<double>(u.count());
        ++n;
      }
      INFO(t[r + 1][0] << " L" << l);
      CHECK(t[r + 1][l + 1] == (n ? format_percent(sum / static_cast<double>(n)) : "-"));
    }
  }
}

TEST_CASE("sweep table has one row per setting with the ratio") {
  const auto t = rows(sweep_table(analog(), full(), Aggregation::mean));
  REQUIRE(t.size() == 10);
  for (std::size_t i = 1; i < t.size(); ++i) {
    const double ratio = *parse_double(t[i][4]);
    CHECK(ratio >= 4.0);
    CHECK(ratio <= 9.0);
  }
  CHECK(t[1][0] == "0.001");
  CHECK(t[1][1] == "0.2");
}

TEST_CASE("pair count, matrix and tier summary") {
  const SweepSetting s{0.001, 0.8};
  const auto pc = pair_layer_nonempty(analog(), full(), s);
  CHECK(pc.nonempty == 21672);
  CHECK(pc.total == 21672);
  CHECK(pair_layer_nonempty(MaskStore{}, full(), s).total == 0);

  const auto m = rows(nonemptiness_matrix(analog(), full(), s));
  REQUIRE(m.size() == 107);
  CHECK(m[0].size() == 10);
  for (std::size_t i = 1; i < m.size(); ++i)
    for (std::size_t l = 2; l < 10; ++l) CHECK(m[i][l] != "0");

  const auto ts = rows(tier_summary(analog(), full(), s));
  REQUIRE(ts.size() == 5);
  CHECK(ts[1][0] == "tokenless-ast");
  CHECK(ts[1][1] == "19");
  CHECK(ts[1][2] == "0");
  CHECK(ts[4][1] == "63");
  CHECK(ts[4][2] == "34");
  CHECK(ts[4][5] == "0");

  MaskStore partial = analog();
  partial.erase(MaskKind::pair, "For/len", s);
  CHECK_THROWS_WITH_AS(pair_layer_nonempty(partial, full(), s), doctest::Contains("For/len"), ReportError);
  CHECK_THROWS_AS(nonemptiness_matrix(MaskStore{}, full(), s), ReportError);
}

TEST_CASE("synthetic q=0 run yields an all-true matrix for planted concepts") {
  const std::vector<std::string> ast = {"For", "Break", "Pass"};
  const std::vector<std::string> bi = {"len", "range", "print"};
  const auto space = full().subspace(ast, bi);
  const auto dir = std::filesystem::temp_directory_path() / ("atlas_report_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto spec = presets::random(space, 11);
  plant(spec, synthetic_prompt_ids(space, 6, 6), dir / "d.acsp");
  const auto sweep = run_sweep(ActivationDump::open(dir / "d.acsp"), space);
  std::filesystem::remove_all(dir);

  for (const auto& s : default_grid()) {
    const auto m = rows(nonemptiness_matrix(sweep.store, space, s));
    REQUIRE(m.size() == 7);
    for (std::size_t i = 1; i < m.size(); ++i)
      for (std::size_t l = 2; l < 10; ++l) CHECK(m[i][l] != "0");
    const auto pc = pair_layer_nonempty(sweep.store, space, s);
    CHECK(pc.nonempty == 72);
    CHECK(pc.total == 72);
  }
  const auto text = format_report(sweep.store, space);
  CHECK(text.starts_with("pair-layer masks non-empty at eps=0.001 C=0.8: 72 of 72\n"));
}
