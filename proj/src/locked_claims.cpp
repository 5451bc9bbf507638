// SPDX-License-Identifier: Apache-2.0
#include "atlas/locked_claims.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "atlas/modularity.hpp"
#include "atlas/structure.hpp"
#include "atlas/util.hpp"

namespace atlas {

std::string_view to_string(ClaimStatus s) {
  switch (s) {
    case ClaimStatus::pass: return "pass";
    case ClaimStatus::fail: return "fail";
    case ClaimStatus::missing: return "missing";
  }
  return "?";
}

namespace {

struct Missing : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Verdict {
  bool ok;
  std::string detail;
};

void need(const MaskStore& st, MaskKind kind, const std::string& id, const SweepSetting& s) {
  if (!st.contains(kind, id, s))
    throw Missing("no " + std::string(to_string(kind)) + " mask for " + id + " at " + s.label());
}

void need_all(const MaskStore& st, const ConceptSpace& space, const SweepSetting& s) {
  for (const auto* c : space.all()) {
    need(st, MaskKind::universal, c->id, s);
    if (c->testable) need(st, MaskKind::checker, c->id, s);
  }
}

void need_grid(const MaskStore& st, const ConceptSpace& space) {
  for (const auto& s : default_grid()) need_all(st, space, s);
}

bool near(double a, double b, double tol) { return std::fabs(a - b) <= tol + 1e-12; }

std::string ratio_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

Verdict cardinality(const MaskStore& st, const ConceptSpace& space, const LockedOptions&) {
  const auto ids = st.ids(MaskKind::universal);
  const std::set<std::string> have(ids.begin(), ids.end());
  std::size_t ast = 0, builtin = 0;
  for (const auto* c : space.all()) {
    if (!have.count(c->id)) throw Missing("no universal circuit for " + c->id);
    ++(c->is_ast() ? ast : builtin);
  }
  return {ast == ConceptSpace::kAstCount && builtin == ConceptSpace::kBuiltinCount,
          std::to_string(ast) + " AST + " + std::to_string(builtin) + " builtin universal circuits"};
}

Verdict stability(const MaskStore& st, const ConceptSpace& space, const LockedOptions&) {
  need_grid(st, space);
  std::size_t empty = 0, total = 0;
  std::string first;
  for (const auto& s : default_grid()) {
    for (const auto* c : space.all()) {
      const auto& u = st.at(MaskKind::universal, c->id, s);
      bool any = false;
      for (const auto& l : u.layers) any = any || !l.empty();
      ++total;
      if (!any) {
        ++empty;
        if (first.empty()) first = c->id + " at " + s.label();
      }
    }
  }
  return {empty == 0, std::to_string(total - empty) + "/" + std::to_string(total) + " circuits non-empty" +
                          (first.empty() ? "" : "; first empty: " + first)};
}

Verdict pair_nonempty(const MaskStore& st, const ConceptSpace& space, const LockedOptions& o) {
  std::size_t nonempty = 0, total = 0;
  for (const auto& p : pairs(space)) {
    const auto id = p.id();
    need(st, MaskKind::pair, id, o.pair_setting);
    for (const auto& l : st.at(MaskKind::pair, id, o.pair_setting).layers) {
      nonempty += !l.empty();
      ++total;
    }
  }
  return {nonempty == total, std::to_string(nonempty) + "/" + std::to_string(total) + " pair-layer masks non-empty at " +
                                 o.pair_setting.label()};
}

Verdict gap(const MaskStore& st, const ConceptSpace& space, const LockedOptions& o) {
  need_grid(st, space);
  MaskStore grid_only;
  for (const auto& s : default_grid())
    for (const auto* c : testable_objects(space)) {
      grid_only.put(MaskKind::universal, c->id, s, st.at(MaskKind::universal, c->id, s));
      grid_only.put(MaskKind::checker, c->id, s, st.at(MaskKind::checker, c->id, s));
    }
  double lo = INFINITY, hi = -INFINITY;
  bool ok = true;
  for (const auto& row : sweep_cf_table(grid_only, space, o.aggregation)) {
    if (!row.ast_cf || !row.builtin_cf || *row.builtin_cf == 0.0) {
      ok = false;
      continue;
    }
    const double r = *row.ast_cf / *row.builtin_cf;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
    ok = ok && r >= 4.0 - o.tolerance && r <= 9.0 + o.tolerance;
  }
  return {ok, "AST / builtin mean-CF ratio spans " + ratio_text(lo) + " .. " + ratio_text(hi) + " (" +
                  std::string(to_string(o.aggregation)) + ")"};
}

Verdict group_cf(const MaskStore& st, const ConceptSpace& space, const LockedOptions& o, Tier tier, double want) {
  for (const auto* c : tier_members(space, tier))
    if (c->testable) {
      need(st, MaskKind::universal, c->id, o.group_setting);
      need(st, MaskKind::checker, c->id, o.group_setting);
    }
  std::vector<Decomposition> ds;
  for (const auto* c : tier_members(space, tier)) {
    if (!c->testable) continue;
    ds.push_back(decompose(c->id, o.group_layer, o.group_setting,
                           st.at(MaskKind::universal, c->id, o.group_setting)[o.group_layer],
                           st.at(MaskKind::checker, c->id, o.group_setting)[o.group_layer]));
  }
  const auto g = group_summary(ds, space, tier, o.group_layer, o.group_setting);
  if (!g.pooled_cf) return {false, "group circuit is empty"};
  return {near(*g.pooled_cf, want, o.tolerance),
          std::to_string(g.pooled_concept_only) + " | " + std::to_string(g.pooled_shared) + " | " +
              std::to_string(g.pooled_size) + " -> " + ratio_text(*g.pooled_cf) + " (want " + ratio_text(want) + ")"};
}

Verdict top_modularity(const MaskStore& st, const ConceptSpace& space, const LockedOptions&) {
  need_grid(st, space);
  MaskStore grid_only;
  for (const auto& s : default_grid())
    for (const auto* c : testable_objects(space)) {
      grid_only.put(MaskKind::universal, c->id, s, st.at(MaskKind::universal, c->id, s));
      grid_only.put(MaskKind::checker, c->id, s, st.at(MaskKind::checker, c->id, s));
    }
  const auto r = modularity_ranking(grid_only, space);
  if (r.size() < 4) return {false, "fewer than four testable objects"};
  // The top three as a set, Break strictly first with three layers, and a
  // strict drop after the third place.
  const std::set<std::string> top = {r[0].concept_id, r[1].concept_id, r[2].concept_id};
  const std::set<std::string> want = {"Break", "ImportFrom", "Assert"};
  const bool ok = top == want && r[0].concept_id == "Break" && r[0].significant_layers == 3 &&
                  r[1].significant_layers < 3 && r[3].significant_layers < r[2].significant_layers;
  std::ostringstream d;
  for (std::size_t i = 0; i < 4; ++i) d << (i ? ", " : "") << r[i].concept_id << "=" << r[i].significant_layers;
  return {ok, d.str()};
}

Verdict atomicity(const MaskStore& st, const ConceptSpace& space, const LockedOptions& o) {
  need_all(st, space, o.cluster_setting);
  std::vector<std::string> labels;
  for (const auto* c : space.all()) labels.push_back(c->id);
  const auto sets = concept_only_sets(st, space, o.cluster_setting, o.cluster_layer);
  const auto tree = ward_linkage(DistanceMatrix::jaccard(labels, sets));
  const auto r = atomicity_check(tree, cut(tree, o.cluster_k), ConceptSpace::modular_ids());
  return {r.single_cluster, r.single_cluster ? "single-cluster at layer " + std::to_string(o.cluster_layer)
                                             : "split-across-" + std::to_string(r.clusters)};
}

Verdict sweep_row(const MaskStore& st, const ConceptSpace& space, const LockedOptions& o) {
  const SweepSetting s{0.001, 0.8};
  MaskStore one;
  for (const auto* c : testable_objects(space)) {
    need(st, MaskKind::universal, c->id, s);
    need(st, MaskKind::checker, c->id, s);
    one.put(MaskKind::universal, c->id, s, st.at(MaskKind::universal, c->id, s));
    one.put(MaskKind::checker, c->id, s, st.at(MaskKind::checker, c->id, s));
  }
  const auto row = sweep_cf_table(one, space, o.aggregation).at(0);
  if (!row.ast_cf || !row.builtin_cf) return {false, "undefined fraction"};
  return {near(*row.ast_cf, 0.083, o.tolerance) && near(*row.builtin_cf, 0.024, o.tolerance),
          "AST " + ratio_text(*row.ast_cf) + ", builtin " + ratio_text(*row.builtin_cf) + " (want 0.083, 0.024)"};
}

}  // namespace

std::vector<ClaimResult> verify_locked(const MaskStore& store, const ConceptSpace& space, const LockedOptions& o) {
  using Fn = std::function<Verdict(const MaskStore&, const ConceptSpace&, const LockedOptions&)>;
  struct Claim {
    std::string id, text;
    Fn fn;
  };
  std::vector<Claim> claims = {
      {"cardinality", "43 AST + 63 builtin universal circuits", cardinality},
      {"parameter-stability", "every universal circuit non-empty at all 9 settings", stability},
      {"pair-masks-nonempty", "every pair-layer mask non-empty at eps=0.001 C=0.8", pair_nonempty},
      {"ast-builtin-gap", "AST / builtin mean concept-fraction ratio within 4-9x at all 9 settings", gap},
      {"modular-l5-cf", "modular AST concept fraction 0.625 at eps=0.5 C=0.8 L5",
       [](auto& st, auto& sp, auto& op) { return group_cf(st, sp, op, Tier::modular_ast, 0.625); }},
      {"nonmodular-l5-cf", "non-modular AST concept fraction 0.582 at eps=0.5 C=0.8 L5",
       [](auto& st, auto& sp, auto& op) { return group_cf(st, sp, op, Tier::nonmodular_ast, 0.582); }},
      {"builtin-l5-cf", "builtin concept fraction 0.0 at eps=0.5 C=0.8 L5",
       [](auto& st, auto& sp, auto& op) { return group_cf(st, sp, op, Tier::builtin, 0.0); }},
      {"top-modularity", "Break, ImportFrom, Assert top 3; Break alone first with 3 layers", top_modularity},
      {"atomicity-cluster", "six modular concepts in one k=4 Ward cluster at L3", atomicity},
  };
  if (o.released_checks)
    claims.push_back({"sweep-row", "mean CF at eps=0.001 C=0.8: AST 0.083, builtin 0.024", sweep_row});

  std::vector<ClaimResult> out;
  for (const auto& c : claims) {
    ClaimResult r{c.id, c.text, ClaimStatus::missing, ""};
    try {
      const auto v = c.fn(store, space, o);
      r.status = v.ok ? ClaimStatus::pass : ClaimStatus::fail;
      r.detail = v.detail;
    } catch (const Missing& e) {
      r.detail = e.what();
    } catch (const std::exception& e) {
      r.status = ClaimStatus::fail;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_claims(const std::vector<ClaimResult>& results) {
  std::string out;
  for (const auto& r : results)
    out += std::string(to_string(r.status)) + "\t" + r.id + "\t" + r.claim + "\t" + r.detail + "\n";
  return out;
}

bool all_passed(const std::vector<ClaimResult>& results) {
  for (const auto& r : results)
    if (r.status != ClaimStatus::pass) return false;
  return !results.empty();
}

}  // namespace atlas
