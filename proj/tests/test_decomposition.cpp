#include <algorithm>
#include <filesystem>
#include <set>

#include "atlas/decomposition.hpp"
#include "atlas/util.hpp"
#include "doctest.h"

using namespace atlas;

namespace {

const ConceptSpace& full() {
  static const ConceptSpace s = ConceptSpace::load(default_concept_spec());
  return s;
}

LayerMask range_mask(std::size_t lo, std::size_t hi) {
  LayerMask m;
  for (std::size_t i = lo; i < hi; ++i) m.set(i);
  return m;
}

// Decomposition with the requested counts: concept-only, shared, token-only.
Decomposition with_counts(const std::string& id, std::size_t layer, const SweepSetting& s, std::size_t co,
                          std::size_t sh, std::size_t to) {
  const auto a = range_mask(0, co + sh);
  const auto b = range_mask(co, co + sh + to);
  return decompose(id, layer, s, a, b);
}

std::set<std::uint16_t> as_set(const LayerMask& m) {
  const auto v = m.indices();
  return {v.begin(), v.end()};
}

}  // namespace

TEST_CASE("decompose: worked example counts") {
  LayerMask a = range_mask(100, 116);
  LayerMask b = range_mask(110, 130);
  const auto d = decompose(a, b);
  CHECK(d.concept_only.count() == 10);
  CHECK(d.shared.count() == 6);
  CHECK(d.token_only.count() == 14);
  CHECK(d.size() == 16);
  REQUIRE(d.concept_fraction());
  CHECK(*d.concept_fraction() == doctest::Approx(0.625));
  CHECK(format_percent(*d.concept_fraction()) == "62.5");
}

TEST_CASE("decompose: degenerate circuits") {
  const auto a = LayerMask::from_indices({1, 5, 9});
  const auto same = decompose(a, a);
  CHECK(same.concept_only.empty());
  CHECK(*same.concept_fraction() == 0.0);
  const auto empty = decompose(LayerMask{}, a);
  CHECK_FALSE(empty.concept_fraction());
  CHECK(empty.token_only == a);
  const auto none = decompose(a, LayerMask{});
  CHECK(*none.concept_fraction() == 1.0);
  CHECK_THROWS_AS(decompose("Break", 8, {}, a, a), DecompositionError);
}

TEST_CASE("decompose agrees with std::set algebra on random masks") {
  Rng rng(2024);
  for (int t = 0; t < 1000; ++t) {
    LayerMask a, b;
    const double da = rng.uniform(0, 0.2), db = rng.uniform(0, 0.2);
    for (std::size_t i = 0; i < kLayerWidth; ++i) {
      if (rng.chance(da)) a.set(i);
      if (rng.chance(db)) b.set(i);
    }
    const auto d = decompose(a, b);
    const auto sa = as_set(a), sb = as_set(b);
    std::set<std::uint16_t> co, sh, to;
    std::set_difference(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(co, co.end()));
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::inserter(sh, sh.end()));
    std::set_difference(sb.begin(), sb.end(), sa.begin(), sa.end(), std::inserter(to, to.end()));
    REQUIRE(as_set(d.concept_only) == co);
    REQUIRE(as_set(d.shared) == sh);
    REQUIRE(as_set(d.token_only) == to);
    REQUIRE(co.size() + sh.size() == sa.size());
    REQUIRE(sh.size() + to.size() == sb.size());
  }
}

TEST_CASE("group summaries pool counts over testable members") {
  const SweepSetting s{0.5, 0.8};
  std::vector<Decomposition> ds;
  // Non-modular: 18 members summing to 32 / 23 / 55.
  const auto nonmod = tier_members(full(), Tier::nonmodular_ast);
  REQUIRE(nonmod.size() == 18);
  for (std::size_t i = 0; i < nonmod.size(); ++i)
    ds.push_back(with_counts(nonmod[i]->id, 5, s, i < 14 ? 2 : 1, i < 5 ? 2 : 1, 3));
  // Builtins: 34 testable members, 36 shared, nothing concept-only.
  std::size_t bi = 0;
  for (const auto* c : tier_members(full(), Tier::builtin)) {
    if (!c->testable) continue;
    ds.push_back(with_counts(c->id, 5, s, 0, bi < 2 ? 2 : 1, 0));
    ++bi;
  }
  REQUIRE(bi == 34);

  const auto g = group_summary(ds, full(), Tier::nonmodular_ast, 5, s);
  CHECK(g.members == 18);
  CHECK(g.pooled_concept_only == 32);
  CHECK(g.pooled_shared == 23);
  CHECK(g.pooled_size == 55);
  CHECK(format_percent(*g.pooled_cf) == "58.2");
  // Mean of 14 x 2/4 or 2/3 and 4 x 1/2 or 1/3 cases, recounted by hand.
  double mean = 0;
  for (std::size_t i = 0; i < 18; ++i) {
    const double co = i < 14 ? 2 : 1, sh = i < 5 ? 2 : 1;
    mean += co / (co + sh);
  }
  CHECK(*g.mean_cf == doctest::Approx(mean / 18));

  const auto b = group_summary(ds, full(), Tier::builtin, 5, s);
  CHECK(b.pooled_size == 36);
  CHECK(format_percent(*b.pooled_cf) == "0.0");
  CHECK(*b.mean_cf == 0.0);

  CHECK_THROWS_AS(group_summary(ds, full(), Tier::modular_ast, 5, s), DecompositionError);
  CHECK_THROWS_AS(group_summary(ds, full(), Tier::nonmodular_ast, 4, s), DecompositionError);
  CHECK_THROWS_AS(group_summary(ds, full(), Tier::tokenless_ast, 5, s), DecompositionError);
}

TEST_CASE("singleton group and undefined members") {
  const std::vector<std::string> ast = {"Break"};
  const std::vector<std::string> bi = {"len"};
  const auto sub = full().subspace(ast, bi);
  const SweepSetting s{};
  std::vector<Decomposition> ds = {with_counts("Break", 2, s, 3, 7, 1), with_counts("len", 2, s, 0, 0, 4)};
  const auto g = group_summary(ds, sub, Tier::modular_ast, 2, s);
  CHECK(*g.mean_cf == doctest::Approx(0.3));
  CHECK(*g.pooled_cf == doctest::Approx(0.3));
  const auto b = group_summary(ds, sub, Tier::builtin, 2, s);
  CHECK_FALSE(b.pooled_cf);
  CHECK_FALSE(b.mean_cf);
  CHECK(b.undefined_members == std::vector<std::string>{"len"});
}

namespace {

// Two testable objects (For, len) at two settings, counts chosen by hand.
MaskStore two_object_store() {
  MaskStore st;
  const SweepSetting s1{0.001, 0.8}, s2{0.5, 0.8};
  LayerStack fa, fb, la, lb;
  fa[0] = range_mask(0, 4);  // 4 in A
  fb[0] = range_mask(2, 6);  // 2 shared -> cf 0.5
  fa[3] = range_mask(10, 20);
  fb[3] = range_mask(19, 21);  // 1 shared -> cf 0.9
  la[0] = range_mask(0, 5);
  lb[0] = range_mask(0, 4);  // cf 0.2
  st.put(MaskKind::universal, "For", s1, fa);
  st.put(MaskKind::checker, "For", s1, fb);
  st.put(MaskKind::universal, "len", s1, la);
  st.put(MaskKind::checker, "len", s1, lb);
  // At s2 checkers share nothing.
  st.put(MaskKind::universal, "For", s2, fa);
  st.put(MaskKind::checker, "For", s2, LayerStack{});
  st.put(MaskKind::universal, "len", s2, la);
  st.put(MaskKind::checker, "len", s2, LayerStack{});
  return st;
}

}  // namespace

TEST_CASE("sweep table and layer profile on a hand-built store") {
  const std::vector<std::string> ast = {"For"};
  const std::vector<std::string> bi = {"len"};
  const auto sub = full().subspace(ast, bi);
  const auto st = two_object_store();
  const auto mean = sweep_cf_table(st, sub, Aggregation::mean);
  REQUIRE(mean.size() == 2);
  CHECK(mean[0].setting == SweepSetting{0.001, 0.8});
  CHECK(*mean[0].ast_cf == doctest::Approx((0.5 + 0.9) / 2));
  CHECK(*mean[0].builtin_cf == doctest::Approx(0.2));
  CHECK(*mean[1].ast_cf == 1.0);
  CHECK(*mean[1].builtin_cf == 1.0);
  const auto pooled = sweep_cf_table(st, sub, Aggregation::pooled);
  CHECK(*pooled[0].ast_cf == doctest::Approx((2.0 + 9.0) / 14.0));

  const auto prof = layer_profile(st, sub, Tier::nonmodular_ast, {0.001, 0.8});
  CHECK(*prof[0] == doctest::Approx(0.5));
  CHECK_FALSE(prof[1]);
  CHECK(*prof[3] == doctest::Approx(0.9));

  MaskStore partial = st;
  partial.erase(MaskKind::checker, "len", {0.5, 0.8});
  CHECK_THROWS_AS(sweep_cf_table(partial, sub), DecompositionError);
  CHECK_THROWS_AS(layer_profile(partial, sub, Tier::builtin, {0.5, 0.8}), DecompositionError);
}

TEST_CASE("decomposition tables round trip and are reproducible") {
  const std::vector<std::string> ast = {"For"};
  const std::vector<std::string> bi = {"len"};
  const auto sub = full().subspace(ast, bi);
  const auto ds = decompose_store(two_object_store(), sub);
  CHECK(ds.size() == 2 * 2 * kLayerCount);
  const auto text = format_decomposition_table(ds);
  CHECK(text == format_decomposition_table(decompose_store(two_object_store(), sub)));
  CHECK(text.find("For\t0\t0.001\t0.8\t2\t2\t2\t4\t0.5\t50.0\n") != std::string::npos);
  CHECK(text.find("For\t1\t0.001\t0.8\t0\t0\t0\t0\tnull\tnull\n") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "atlas_decomp_test";
  std::filesystem::create_directories(dir);
  write_decomposition_table(dir / "d.tsv", ds);
  const auto back = read_decomposition_table(dir / "d.tsv");
  REQUIRE(back.size() == ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back[i].object_id == ds[i].object_id);
    CHECK(back[i].setting == ds[i].setting);
    CHECK(back[i].concept_only == ds[i].concept_only);
    CHECK(back[i].token_only == ds[i].token_only);
  }
  auto idx = read_file(index_path_for(dir / "d.tsv"));
  idx.replace(idx.find("\t0,1\t"), 5, "\t0,1,7\t");
  write_file(index_path_for(dir / "d.tsv"), idx);
  CHECK_THROWS_AS(read_decomposition_table(dir / "d.tsv"), DecompositionError);
  std::filesystem::remove_all(dir);
}
