#include <algorithm>

#include "atlas/locked_claims.hpp"
#include "atlas/synth.hpp"
#include "doctest.h"

using namespace atlas;

namespace {

const ConceptSpace& full() {
  static const ConceptSpace s = ConceptSpace::load(default_concept_spec());
  return s;
}

const MaskStore& analog_store() {
  static const MaskStore st = ground_truth(presets::reference(full())).to_store(default_grid());
  return st;
}

const ClaimResult& by_id(const std::vector<ClaimResult>& rs, const std::string& id) {
  for (const auto& r : rs)
    if (r.id == id) return r;
  FAIL("no claim " << id);
  return rs.front();
}

}  // namespace

TEST_CASE("planted reference layout passes every claim") {
  const auto rs = verify_locked(analog_store(), full());
  CHECK(rs.size() == 9);
  for (const auto& r : rs) {
    INFO(r.id << ": " << r.detail);
    CHECK(r.status == ClaimStatus::pass);
  }
  CHECK(all_passed(rs));
  CHECK(by_id(rs, "atomicity-cluster").detail == "single-cluster at layer 3");
  CHECK(by_id(rs, "pair-masks-nonempty").detail.starts_with("21672/21672"));
}

TEST_CASE("empty store reports every claim missing") {
  const auto rs = verify_locked(MaskStore{}, full());
  for (const auto& r : rs) CHECK(r.status == ClaimStatus::missing);
  CHECK_FALSE(all_passed(rs));
  CHECK_FALSE(all_passed({}));
}

TEST_CASE("one emptied pair mask fails only that claim") {
  MaskStore st = analog_store();
  const SweepSetting s{0.001, 0.8};
  auto m = st.at(MaskKind::pair, "For/len", s);
  m[4] = LayerMask{};
  st.put(MaskKind::pair, "For/len", s, m);
  const auto rs = verify_locked(st, full());
  for (const auto& r : rs) {
    INFO(r.id);
    CHECK(r.status == (r.id == "pair-masks-nonempty" ? ClaimStatus::fail : ClaimStatus::pass));
  }
  CHECK(by_id(rs, "pair-masks-nonempty").detail.starts_with("21671/21672"));
}

TEST_CASE("a shifted group fraction fails and a dropped checker is missing") {
  MaskStore st = analog_store();
  const SweepSetting s{0.5, 0.8};
  auto u = st.at(MaskKind::universal, "Break", s);
  u[5].reset(u[5].indices().front());
  st.put(MaskKind::universal, "Break", s, u);
  auto rs = verify_locked(st, full());
  CHECK(by_id(rs, "modular-l5-cf").status == ClaimStatus::fail);
  CHECK(by_id(rs, "nonmodular-l5-cf").status == ClaimStatus::pass);

  st.erase(MaskKind::checker, "len", s);
  rs = verify_locked(st, full());
  CHECK(by_id(rs, "builtin-l5-cf").status == ClaimStatus::missing);
  CHECK(by_id(rs, "ast-builtin-gap").status == ClaimStatus::missing);
  CHECK(by_id(rs, "cardinality").status == ClaimStatus::pass);
}

TEST_CASE("released row check is opt-in and formats one line per claim") {
  LockedOptions o;
  o.released_checks = true;
  const auto rs = verify_locked(analog_store(), full(), o);
  CHECK(rs.size() == 10);
  CHECK(rs.back().id == "sweep-row");
  const auto text = format_claims(rs);
  CHECK(std::count(text.begin(), text.end(), '\n') == 10);
  CHECK(text.starts_with("pass\tcardinality\t"));
}
