// SPDX-License-Identifier: Apache-2.0
#include "atlas/report.hpp"

#include <cstdio>
#include <sstream>

#include "atlas/util.hpp"

namespace atlas {
namespace {

constexpr Tier kTestableTiers[] = {Tier::modular_ast, Tier::nonmodular_ast, Tier::builtin};
constexpr Tier kAllTiers[] = {Tier::tokenless_ast, Tier::modular_ast, Tier::nonmodular_ast, Tier::builtin};

std::string pct(const std::optional<double>& v) { return v ? format_percent(*v) : "-"; }

const LayerStack& universal(const MaskStore& store, const Concept& c, const SweepSetting& s) {
  const auto* u = store.find(MaskKind::universal, c.id, s);
  if (!u) throw ReportError("mask store lacks universal circuit " + c.id + " at " + s.label());
  return *u;
}

std::vector<Decomposition> tier_decompositions(const MaskStore& store, const ConceptSpace& space, Tier t,
                                               const SweepSetting& s, std::size_t layer) {
  std::vector<Decomposition> out;
  for (const auto* c : tier_members(space, t)) {
    if (!c->testable) continue;
    const auto* b = store.find(MaskKind::checker, c->id, s);
    if (!b) throw ReportError("mask store lacks checker mask " + c->id + " at " + s.label());
    out.push_back(decompose(c->id, layer, s, universal(store, *c, s)[layer], (*b)[layer]));
  }
  return out;
}

}  // namespace

PairLayerCount pair_layer_nonempty(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s) {
  PairLayerCount n;
  if (store.ids(MaskKind::pair).empty()) return n;
  for (const auto& p : pairs(space)) {
    const auto* m = store.find(MaskKind::pair, p.id(), s);
    if (!m) throw ReportError("mask store lacks pair mask " + p.id() + " at " + s.label());
    for (const auto& l : m->layers) {
      n.nonempty += !l.empty();
      ++n.total;
    }
  }
  return n;
}

std::string nonemptiness_matrix(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s) {
  std::string out = "concept\ttier";
  for (std::size_t l = 0; l < kLayerCount; ++l) out += "\tL" + std::to_string(l);
  out += "\n";
  for (const auto* c : space.all()) {
    out += c->id + "\t" + std::string(to_string(c->tier));
    for (const auto& m : universal(store, *c, s).layers) out += "\t" + std::to_string(m.count());
    out += "\n";
  }
  return out;
}

std::string layer_table(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                        Aggregation aggregation) {
  std::string out = "tier";
  for (std::size_t l = 0; l < kLayerCount; ++l) out += "\tL" + std::to_string(l);
  out += "\n";
  for (const auto t : kTestableTiers) {
    if (tier_members(space, t).empty()) continue;
    std::array<std::optional<double>, kLayerCount> row;
    try {
      row = layer_profile(store, space, t, s, aggregation);
    } catch (const DecompositionError& e) {
      throw ReportError(e.what());
    }
    out += std::string(to_string(t));
    for (const auto& v : row) out += "\t" + pct(v);
    out += "\n";
  }
  return out;
}

std::string sweep_table(const MaskStore& store, const ConceptSpace& space, Aggregation aggregation) {
  std::vector<CfRow> rows;
  try {
    rows = sweep_cf_table(store, space, aggregation);
  } catch (const DecompositionError& e) {
    throw ReportError(e.what());
  }
  std::string out = "epsilon\tconsistency\tast_cf_pct\tbuiltin_cf_pct\tratio\n";
  for (const auto& r : rows) {
    std::string ratio = "-";
    if (r.ast_cf && r.builtin_cf && *r.builtin_cf > 0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", *r.ast_cf / *r.builtin_cf);
      ratio = buf;
    }
    out += format_double(r.setting.epsilon) + "\t" + format_double(r.setting.consistency) + "\t" + pct(r.ast_cf) +
           "\t" + pct(r.builtin_cf) + "\t" + ratio + "\n";
  }
  return out;
}

std::string group_table(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                        std::size_t layer) {
  if (layer >= kLayerCount) throw ReportError("layer out of range: " + std::to_string(layer));
  std::string out = "tier\tmembers\tconcept_only\tshared\tsize\tcf_pct\n";
  for (const auto t : kTestableTiers) {
    if (tier_members(space, t).empty()) continue;
    const auto ds = tier_decompositions(store, space, t, s, layer);
    const auto g = group_summary(ds, space, t, layer, s);
    out += std::string(to_string(t)) + "\t" + std::to_string(g.members) + "\t" +
           std::to_string(g.pooled_concept_only) + "\t" + std::to_string(g.pooled_shared) + "\t" +
           std::to_string(g.pooled_size) + "\t" + pct(g.pooled_cf) + "\n";
  }
  return out;
}

std::string tier_summary(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s) {
  std::string out = "tier\tmembers\ttestable\tneurons\tnonempty_layers\tempty_circuits\n";
  for (const auto t : kAllTiers) {
    const auto members = tier_members(space, t);
    if (members.empty()) continue;
    std::size_t testable = 0, neurons = 0, layers = 0, empty = 0;
    for (const auto* c : members) {
      testable += c->testable;
      std::size_t own = 0;
      for (const auto& m : universal(store, *c, s).layers) {
        own += m.count();
        layers += !m.empty();
      }
      neurons += own;
      empty += own == 0;
    }
    out += std::string(to_string(t)) + "\t" + std::to_string(members.size()) + "\t" + std::to_string(testable) +
           "\t" + std::to_string(neurons) + "\t" + std::to_string(layers) + "\t" + std::to_string(empty) + "\n";
  }
  return out;
}

std::string format_report(const MaskStore& store, const ConceptSpace& space, const ReportOptions& o) {
  std::ostringstream out;
  const auto pc = pair_layer_nonempty(store, space, o.setting);
  out << "pair-layer masks non-empty at " << o.setting.label() << ": " << pc.nonempty << " of " << pc.total
      << "\n\n";
  out << "tiers at " << o.setting.label() << "\n" << tier_summary(store, space, o.setting) << "\n";
  out << "concept fraction by layer at " << o.setting.label() << " (" << to_string(o.aggregation) << ")\n"
      << layer_table(store, space, o.setting, o.aggregation) << "\n";
  out << "concept fraction by setting (" << to_string(o.aggregation) << ")\n"
      << sweep_table(store, space, o.aggregation) << "\n";
  out << "pooled partition at " << o.group_setting.label() << " L" << o.group_layer << "\n"
      << group_table(store, space, o.group_setting, o.group_layer);
  return out.str();
}

}  // namespace atlas
