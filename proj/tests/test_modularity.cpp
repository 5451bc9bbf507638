#include <algorithm>

#include "atlas/modularity.hpp"
#include "doctest.h"

using namespace atlas;

namespace {

const ConceptSpace& sub() {
  static const ConceptSpace s = [] {
    const auto full = ConceptSpace::load(default_concept_spec());
    const std::vector<std::string> ast = {"For", "Break", "Assert", "ListComp"};
    const std::vector<std::string> bi = {"len", "range"};
    return full.subspace(ast, bi);
  }();
  return s;
}

// Universal = checker everywhere, so nothing is concept-only.
MaskStore flat_store() {
  MaskStore st;
  LayerStack m;
  for (auto& l : m.layers) l = LayerMask::from_indices({1, 2});
  for (const auto& s : default_grid())
    for (const auto* c : sub().all()) {
      st.put(MaskKind::universal, c->id, s, m);
      if (c->testable) st.put(MaskKind::checker, c->id, s, m);
    }
  return st;
}

void add_concept_only(MaskStore& st, const std::string& id, std::size_t layer, std::size_t neuron,
                      std::size_t settings = 9) {
  const auto grid = default_grid();
  for (std::size_t i = 0; i < settings; ++i) {
    auto u = st.at(MaskKind::universal, id, grid[i]);
    u[layer].set(neuron);
    st.put(MaskKind::universal, id, grid[i], u);
  }
}

}  // namespace

TEST_CASE("all-empty concept-only sets tie at zero") {
  const auto r = modularity_ranking(flat_store(), sub());
  REQUIRE(r.size() == 5);  // For, Break, Assert, len, range
  for (const auto& s : r) {
    CHECK(s.significant_layers == 0);
    CHECK(s.rank == 1);
    CHECK(s.tied);
    CHECK(s.criterion == "stable-nonempty");
  }
  CHECK(r.front().concept_id == "Assert");
  CHECK(std::none_of(r.begin(), r.end(), [](const auto& s) { return s.concept_id == "ListComp"; }));
}

TEST_CASE("stable layers decide the ranking") {
  auto st = flat_store();
  for (std::size_t l : {2, 3, 5}) add_concept_only(st, "Break", l, 100 + l);
  for (std::size_t l : {3, 5}) add_concept_only(st, "Assert", l, 200 + l);
  add_concept_only(st, "For", 4, 300);
  add_concept_only(st, "len", 6, 400, 8);  // not stable: missing at one setting
  const auto r = modularity_ranking(st, sub());
  CHECK(r[0].concept_id == "Break");
  CHECK(r[0].significant_layers == 3);
  CHECK_FALSE(r[0].tied);
  CHECK(r[0].layers[2]);
  CHECK_FALSE(r[0].layers[4]);
  CHECK(r[1].concept_id == "Assert");
  CHECK(r[1].rank == 2);
  CHECK(r[2].concept_id == "For");
  CHECK(r[3].concept_id == "len");
  CHECK(r[3].significant_layers == 0);
  CHECK(r[3].rank == 4);
  CHECK(r[3].tied);

  const auto any = modularity_ranking(st, sub(), "any-nonempty");
  const auto len = std::find_if(any.begin(), any.end(), [](const auto& s) { return s.concept_id == "len"; });
  CHECK(len->significant_layers == 1);
}

TEST_CASE("trimming drops the weakest neurons") {
  std::vector<std::int64_t> mag(kLayerWidth, 0);
  mag[1] = 50;
  mag[2] = 10;
  mag[3] = 10;
  mag[4] = 99;
  const auto c = LayerMask::from_indices({1, 2, 3, 4});
  CHECK(trim_lowest(c, mag, 0.0) == c);
  CHECK(trim_lowest(c, mag, 0.2) == c);  // floor(0.8) = 0
  CHECK(trim_lowest(c, mag, 0.25).indices() == std::vector<std::uint16_t>{1, 3, 4});
  CHECK(trim_lowest(c, mag, 0.5).indices() == std::vector<std::uint16_t>{1, 4});
  CHECK_THROWS_AS(trim_lowest(c, mag, 1.0), ModularityError);
  CHECK_THROWS_AS(trim_lowest(c, std::span<const std::int64_t>(mag).first(10), 0.5), ModularityError);
}

TEST_CASE("trim level uses stored magnitudes") {
  auto st = flat_store();
  add_concept_only(st, "Break", 3, 100);
  // Break's concept-only neuron 100 is the weakest of {1, 2, 100}.
  std::vector<std::int64_t> mag(kRecordValues, 1000);
  mag[3 * kLayerWidth + 100] = 1;
  st.put_magnitude("Break", mag);
  CHECK_THROWS_AS(modularity_ranking(st, sub(), kDefaultCriterion, 0.4), ModularityError);  // others lack magnitudes
  for (const auto* c : sub().all())
    if (c->id != "Break") st.put_magnitude(c->id, std::vector<std::int64_t>(kRecordValues, 5));
  CHECK(modularity_ranking(st, sub(), kDefaultCriterion, 0.0)[0].significant_layers == 1);
  const auto r = modularity_ranking(st, sub(), kDefaultCriterion, 0.4);
  CHECK(r[0].significant_layers == 0);
  CHECK(r[0].trim == 0.4);
}

TEST_CASE("criterion registry") {
  CHECK_THROWS_AS(modularity_ranking(flat_store(), sub(), "no-such-criterion"), ModularityError);
  register_criterion("every-layer", [](const ModularityInput&, const Concept&) {
    LayerFlags f;
    f.fill(true);
    return f;
  });
  const auto ids = criterion_ids();
  CHECK(std::find(ids.begin(), ids.end(), "every-layer") != ids.end());
  const auto r = modularity_ranking(flat_store(), sub(), "every-layer");
  CHECK(r[0].significant_layers == 8);
  CHECK_THROWS_AS(register_criterion("", nullptr), ModularityError);
  MaskStore empty;
  CHECK_THROWS_AS(modularity_ranking(empty, sub()), ModularityError);
}
