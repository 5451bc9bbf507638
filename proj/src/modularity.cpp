// SPDX-License-Identifier: Apache-2.0
#include "atlas/modularity.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <numeric>

namespace atlas {

namespace {

LayerFlags stable_nonempty(const ModularityInput& in, const Concept& c) {
  LayerFlags f{};
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    f[l] = std::all_of(in.grid.begin(), in.grid.end(),
                       [&](const SweepSetting& s) { return !trimmed_concept_only(in, c, s, l).empty(); });
  }
  return f;
}

// Looser variant: a layer counts when some setting leaves a concept-only neuron.
LayerFlags any_nonempty(const ModularityInput& in, const Concept& c) {
  LayerFlags f{};
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    f[l] = std::any_of(in.grid.begin(), in.grid.end(),
                       [&](const SweepSetting& s) { return !trimmed_concept_only(in, c, s, l).empty(); });
  }
  return f;
}

struct Registry {
  std::mutex mu;
  std::map<std::string, ModularityCriterion, std::less<>> criteria{
      {std::string(kDefaultCriterion), stable_nonempty}, {"any-nonempty", any_nonempty}};
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_criterion(const std::string& id, ModularityCriterion criterion) {
  if (id.empty() || !criterion) throw ModularityError("criterion needs an id and a function");
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.criteria[id] = std::move(criterion);
}

std::vector<std::string> criterion_ids() {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> out;
  for (const auto& [id, fn] : r.criteria) out.push_back(id);
  return out;
}

LayerMask trim_lowest(const LayerMask& circuit, std::span<const std::int64_t> layer_magnitude, double p) {
  if (!(p >= 0.0 && p < 1.0)) throw ModularityError("trim level must be in [0, 1)");
  if (layer_magnitude.size() != kLayerWidth) throw ModularityError("trim needs one magnitude per neuron");
  auto idx = circuit.indices();
  const auto drop = static_cast<std::size_t>(p * static_cast<double>(idx.size()));
  if (drop == 0) return circuit;
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::uint16_t a, std::uint16_t b) { return layer_magnitude[a] < layer_magnitude[b]; });
  LayerMask out = circuit;
  for (std::size_t i = 0; i < drop; ++i) out.reset(idx[i]);
  return out;
}

LayerMask trimmed_concept_only(const ModularityInput& in, const Concept& c, const SweepSetting& s,
                               std::size_t layer) {
  const auto* a = in.store.find(MaskKind::universal, c.id, s);
  const auto* b = in.store.find(MaskKind::checker, c.id, s);
  if (!a || !b) throw ModularityError("mask store lacks masks for " + c.id + " at " + s.label());
  LayerMask circuit = (*a)[layer];
  if (in.trim > 0) {
    const auto* mag = in.store.magnitude(c.id);
    if (!mag) throw ModularityError("trim level " + std::to_string(in.trim) + " needs magnitudes for " + c.id);
    circuit = trim_lowest(circuit, std::span<const std::int64_t>(*mag).subspan(layer * kLayerWidth, kLayerWidth),
                          in.trim);
  }
  return circuit.minus((*b)[layer]);
}

std::vector<ModularityScore> modularity_ranking(const MaskStore& store, const ConceptSpace& space,
                                                std::string_view criterion, double trim) {
  ModularityCriterion fn;
  {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    const auto it = r.criteria.find(criterion);
    if (it == r.criteria.end()) throw ModularityError("unknown modularity criterion '" + std::string(criterion) + "'");
    fn = it->second;
  }
  if (!(trim >= 0.0 && trim < 1.0)) throw ModularityError("trim level must be in [0, 1)");
  const ModularityInput in{store, space, store.settings(), trim};
  if (in.grid.empty()) throw ModularityError("mask store has no sweep settings");

  std::vector<ModularityScore> out;
  for (const auto* c : testable_objects(space)) {
    ModularityScore s;
    s.concept_id = c->id;
    s.layers = fn(in, *c);
    s.significant_layers = static_cast<std::size_t>(std::count(s.layers.begin(), s.layers.end(), true));
    s.criterion = std::string(criterion);
    s.trim = trim;
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const ModularityScore& a, const ModularityScore& b) {
    if (a.significant_layers != b.significant_layers) return a.significant_layers > b.significant_layers;
    return a.concept_id < b.concept_id;
  });
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool same_prev = i > 0 && out[i - 1].significant_layers == out[i].significant_layers;
    const bool same_next = i + 1 < out.size() && out[i + 1].significant_layers == out[i].significant_layers;
    out[i].rank = same_prev ? out[i - 1].rank : i + 1;
    out[i].tied = same_prev || same_next;
  }
  return out;
}

}  // namespace atlas
