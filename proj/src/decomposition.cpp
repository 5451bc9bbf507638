// SPDX-License-Identifier: Apache-2.0
#include "atlas/decomposition.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "atlas/util.hpp"

namespace atlas {

std::optional<double> Decomposition::concept_fraction() const {
  const auto n = size();
  if (n == 0) return std::nullopt;
  return static_cast<double>(concept_only.count()) / static_cast<double>(n);
}

Decomposition decompose(const LayerMask& a, const LayerMask& b) {
  Decomposition d;
  d.concept_only = a.minus(b);
  d.shared = a & b;
  d.token_only = b.minus(a);
  const bool disjoint = d.concept_only.intersection_count(d.shared) == 0 &&
                        d.concept_only.intersection_count(d.token_only) == 0 &&
                        d.shared.intersection_count(d.token_only) == 0;
  if (!disjoint || (d.concept_only | d.shared) != a || (d.shared | d.token_only) != b)
    throw std::logic_error("decomposition is not a partition");
  return d;
}

Decomposition decompose(std::string object_id, std::size_t layer, const SweepSetting& s, const LayerMask& a,
                        const LayerMask& b) {
  if (layer >= kLayerCount) throw DecompositionError("layer out of range: " + std::to_string(layer));
  auto d = decompose(a, b);
  d.object_id = std::move(object_id);
  d.layer = layer;
  d.setting = s;
  return d;
}

std::vector<Decomposition> decompose_store(const MaskStore& store, const ConceptSpace& space) {
  const auto objects = testable_objects(space);
  const auto settings = store.settings();
  std::vector<std::string> missing;
  for (const auto* o : objects) {
    for (const auto& s : settings) {
      if (!store.contains(MaskKind::universal, o->id, s)) missing.push_back("universal " + o->id + " " + s.label());
      if (!store.contains(MaskKind::checker, o->id, s)) missing.push_back("checker " + o->id + " " + s.label());
    }
  }
  if (settings.empty()) missing.push_back("any sweep setting");
  if (!missing.empty())
    throw DecompositionError("mask store is incomplete: " + std::to_string(missing.size()) + " missing (first " +
                             missing.front() + ")");

  std::vector<std::vector<Decomposition>> per_object(objects.size());
  parallel_for(objects.size(), [&](std::size_t oi) {
    const auto& id = objects[oi]->id;
    for (const auto& s : settings) {
      const auto& a = store.at(MaskKind::universal, id, s);
      const auto& b = store.at(MaskKind::checker, id, s);
      for (std::size_t l = 0; l < kLayerCount; ++l) per_object[oi].push_back(decompose(id, l, s, a[l], b[l]));
    }
  });
  std::vector<Decomposition> out;
  out.reserve(objects.size() * settings.size() * kLayerCount);
  for (auto& v : per_object)
    for (auto& d : v) out.push_back(std::move(d));
  return out;
}

std::string_view to_string(Aggregation a) { return a == Aggregation::pooled ? "pooled" : "mean"; }

std::optional<Aggregation> parse_aggregation(std::string_view s) {
  if (s == "pooled") return Aggregation::pooled;
  if (s == "mean") return Aggregation::mean;
  return std::nullopt;
}

namespace {

// Running pooled counts and per-record fractions.
struct Fold {
  std::size_t concept_only = 0;
  std::size_t shared = 0;
  double cf_sum = 0;
  std::size_t defined = 0;

  void add(const Decomposition& d) {
    concept_only += d.concept_only.count();
    shared += d.shared.count();
    if (const auto cf = d.concept_fraction()) {
      cf_sum += *cf;
      ++defined;
    }
  }
  std::optional<double> pooled() const {
    const auto n = concept_only + shared;
    if (n == 0) return std::nullopt;
    return static_cast<double>(concept_only) / static_cast<double>(n);
  }
  std::optional<double> mean() const {
    if (defined == 0) return std::nullopt;
    return cf_sum / static_cast<double>(defined);
  }
  std::optional<double> get(Aggregation a) const { return a == Aggregation::pooled ? pooled() : mean(); }
};

std::map<std::string, const Decomposition*, std::less<>> index_at(std::span<const Decomposition> decomps,
                                                                 std::size_t layer, const SweepSetting& s) {
  std::map<std::string, const Decomposition*, std::less<>> idx;
  for (const auto& d : decomps)
    if (d.layer == layer && d.setting == s) idx.emplace(d.object_id, &d);
  return idx;
}

}  // namespace

GroupSummary group_summary(std::span<const Decomposition> decomps, const ConceptSpace& space, Tier group,
                           std::size_t layer, const SweepSetting& s) {
  if (group == Tier::tokenless_ast) throw DecompositionError("tokenless AST nodes have no decompositions");
  const auto idx = index_at(decomps, layer, s);
  GroupSummary g;
  g.group = group;
  g.layer = layer;
  g.setting = s;
  Fold fold;
  for (const auto* c : tier_members(space, group)) {
    if (!c->testable) continue;
    const auto it = idx.find(c->id);
    if (it == idx.end())
      throw DecompositionError("no decomposition for " + c->id + " at layer " + std::to_string(layer) + " " +
                               s.label());
    const auto& d = *it->second;
    fold.add(d);
    if (!d.concept_fraction()) g.undefined_members.push_back(c->id);
    ++g.members;
  }
  g.pooled_concept_only = fold.concept_only;
  g.pooled_shared = fold.shared;
  g.pooled_size = fold.concept_only + fold.shared;
  g.pooled_cf = fold.pooled();
  g.mean_cf = fold.mean();
  return g;
}

std::vector<CfRow> sweep_cf_table(const MaskStore& store, const ConceptSpace& space, Aggregation aggregation) {
  const auto decomps = decompose_store(store, space);
  std::map<SweepSetting, std::pair<Fold, Fold>> folds;
  for (const auto& d : decomps) {
    auto& [ast, builtin] = folds[d.setting];
    (space.at(d.object_id).is_ast() ? ast : builtin).add(d);
  }
  std::vector<CfRow> rows;
  for (const auto& [s, f] : folds) rows.push_back({s, f.first.get(aggregation), f.second.get(aggregation)});
  return rows;
}

std::array<std::optional<double>, kLayerCount> layer_profile(const MaskStore& store, const ConceptSpace& space,
                                                            Tier group, const SweepSetting& s,
                                                            Aggregation aggregation) {
  if (group == Tier::tokenless_ast) throw DecompositionError("tokenless AST nodes have no decompositions");
  std::array<Fold, kLayerCount> folds;
  for (const auto* c : tier_members(space, group)) {
    if (!c->testable) continue;
    const auto* a = store.find(MaskKind::universal, c->id, s);
    const auto* b = store.find(MaskKind::checker, c->id, s);
    if (!a || !b) throw DecompositionError("mask store lacks " + c->id + " at " + s.label());
    for (std::size_t l = 0; l < kLayerCount; ++l) folds[l].add(decompose((*a)[l], (*b)[l]));
  }
  std::array<std::optional<double>, kLayerCount> out;
  for (std::size_t l = 0; l < kLayerCount; ++l) out[l] = folds[l].get(aggregation);
  return out;
}

namespace {

constexpr std::string_view kTableHeader =
    "object\tlayer\tepsilon\tconsistency\tn_concept_only\tn_shared\tn_token_only\tsize\tcf\tcf_pct";

std::string join_indices(const LayerMask& m) {
  std::string out;
  for (auto i : m.indices()) {
    if (!out.empty()) out += ',';
    out += std::to_string(i);
  }
  return out;
}

LayerMask parse_indices(std::string_view s) {
  LayerMask m;
  if (s.empty()) return m;
  for (auto part : split(s, ',')) {
    const auto v = parse_int(part);
    if (!v || *v < 0 || *v >= static_cast<long long>(kLayerWidth))
      throw DecompositionError("bad neuron index '" + std::string(part) + "'");
    m.set(static_cast<std::size_t>(*v));
  }
  return m;
}

}  // namespace

std::string format_decomposition_table(std::span<const Decomposition> decomps) {
  std::ostringstream out;
  out << kTableHeader << '\n';
  for (const auto& d : decomps) {
    const auto cf = d.concept_fraction();
    out << d.object_id << '\t' << d.layer << '\t' << format_double(d.setting.epsilon) << '\t'
        << format_double(d.setting.consistency) << '\t' << d.concept_only.count() << '\t' << d.shared.count() << '\t'
        << d.token_only.count() << '\t' << d.size() << '\t' << (cf ? format_double(*cf) : "null") << '\t'
        << (cf ? format_percent(*cf) : "null") << '\n';
  }
  return out.str();
}

std::string format_decomposition_index(std::span<const Decomposition> decomps) {
  std::ostringstream out;
  out << "object\tlayer\tepsilon\tconsistency\tconcept_only\tshared\ttoken_only\n";
  for (const auto& d : decomps)
    out << d.object_id << '\t' << d.layer << '\t' << format_double(d.setting.epsilon) << '\t'
        << format_double(d.setting.consistency) << '\t' << join_indices(d.concept_only) << '\t'
        << join_indices(d.shared) << '\t' << join_indices(d.token_only) << '\n';
  return out.str();
}

std::filesystem::path index_path_for(const std::filesystem::path& table) {
  auto p = table;
  p += ".idx";
  return p;
}

void write_decomposition_table(const std::filesystem::path& path, std::span<const Decomposition> decomps) {
  write_file(path, format_decomposition_table(decomps));
  write_file(index_path_for(path), format_decomposition_index(decomps));
}

std::vector<Decomposition> read_decomposition_table(const std::filesystem::path& path) {
  const std::string table = read_file(path);
  const std::string index = read_file(index_path_for(path));
  auto rows = split(table, '\n');
  auto idx_rows = split(index, '\n');
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  while (!idx_rows.empty() && idx_rows.back().empty()) idx_rows.pop_back();
  if (rows.empty() || rows.front() != kTableHeader) throw DecompositionError("bad decomposition table header");
  if (idx_rows.size() != rows.size()) throw DecompositionError("index sidecar row count differs from table");

  std::vector<Decomposition> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto t = split(rows[r], '\t');
    const auto x = split(idx_rows[r], '\t');
    if (t.size() != 10 || x.size() != 7) throw DecompositionError("bad field count on row " + std::to_string(r));
    if (t[0] != x[0] || t[1] != x[1] || t[2] != x[2] || t[3] != x[3])
      throw DecompositionError("index sidecar key differs on row " + std::to_string(r));
    const auto layer = parse_int(t[1]);
    const auto eps = parse_double(t[2]);
    const auto c = parse_double(t[3]);
    if (!layer || !eps || !c) throw DecompositionError("bad key on row " + std::to_string(r));
    Decomposition d;
    d.object_id = std::string(t[0]);
    d.layer = static_cast<std::size_t>(*layer);
    d.setting = {*eps, *c};
    d.concept_only = parse_indices(x[4]);
    d.shared = parse_indices(x[5]);
    d.token_only = parse_indices(x[6]);
    const auto counts_match = [&](std::size_t field, std::size_t n) { return parse_int(t[field]) == (long long)n; };
    if (!counts_match(4, d.concept_only.count()) || !counts_match(5, d.shared.count()) ||
        !counts_match(6, d.token_only.count()) || !counts_match(7, d.size()))
      throw DecompositionError("counts disagree with index sidecar on row " + std::to_string(r));
    out.push_back(std::move(d));
  }
  return out;
}

}  // namespace atlas
