// SPDX-License-Identifier: Apache-2.0
#include "atlas/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "atlas/mask_engine.hpp"
#include "atlas/structure.hpp"
#include "atlas/util.hpp"

namespace atlas {

namespace {

std::vector<double> sorted_epsilons(std::span<const SweepSetting> grid) {
  std::vector<double> e;
  for (const auto& s : grid) e.push_back(s.epsilon);
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

const LayerStack* lookup(const std::map<std::string, LayerStack, std::less<>>& m, std::string_view id) {
  const auto it = m.find(id);
  return it == m.end() ? nullptr : &it->second;
}

LayerStack& operator|=(LayerStack& a, const LayerStack& b) {
  for (std::size_t l = 0; l < kLayerCount; ++l) a[l] |= b[l];
  return a;
}

void merge_into(LayerStack& dst, const std::map<std::string, LayerStack, std::less<>>& m, std::string_view id) {
  if (const auto* s = lookup(m, id)) dst |= *s;
}

// Neurons planted on one prompt, by owner.
LayerStack planted_for(const PlantSpec& spec, const PromptOwner& owner) {
  LayerStack p;
  if (owner.kind == MaskKind::pair) {
    const auto slash = owner.id.find('/');
    const std::string_view a(owner.id.data(), slash), b(owner.id.data() + slash + 1, owner.id.size() - slash - 1);
    for (auto c : {a, b}) {
      merge_into(p, spec.concept_neurons, c);
      merge_into(p, spec.shared_neurons, c);
    }
    merge_into(p, spec.pair_neurons, owner.id);
  } else {
    merge_into(p, spec.shared_neurons, owner.id);
    merge_into(p, spec.token_neurons, owner.id);
  }
  return p;
}

// A float strictly inside (lo, hi) after rounding to single precision.
float inside(double v, double lo, double hi) {
  float f = static_cast<float>(v);
  if (f <= static_cast<float>(lo)) f = std::nextafter(static_cast<float>(lo), INFINITY);
  if (f >= static_cast<float>(hi)) f = std::nextafter(static_cast<float>(hi), 0.0f);
  return f;
}

}  // namespace

void PlantSpec::validate(std::span<const SweepSetting> grid) const {
  if (grid.empty()) throw SynthError("plant needs a sweep grid");
  if (!(background_density >= 0.0 && background_density < 1.0))
    throw SynthError("background density must be in [0, 1)");
  const double top = sorted_epsilons(grid).back();
  if (!(planted_jitter >= 0.0) || !std::isfinite(planted_magnitude + planted_jitter))
    throw SynthError("planted magnitude band is not finite");
  if (!(static_cast<float>(planted_magnitude - planted_jitter) > static_cast<float>(top)))
    throw SynthError("planted magnitude band reaches the epsilon grid (lowest planted value " +
                     format_double(planted_magnitude - planted_jitter) + ", largest epsilon " + format_double(top) +
                     ")");
  for (const auto& [id, m] : concept_neurons)
    if (!space.find(id)) throw SynthError("planted concept " + id + " is not in the space");
  for (const auto* table : {&shared_neurons, &token_neurons})
    for (const auto& [id, m] : *table) {
      const auto* c = space.find(id);
      if (!c || !c->testable) throw SynthError("token neurons planted for non-testable " + id);
    }
  for (const auto& [id, m] : pair_neurons) {
    const auto slash = id.find('/');
    if (slash == std::string::npos || !space.ast_index(id.substr(0, slash)) ||
        !space.builtin_index(id.substr(slash + 1)))
      throw SynthError("planted pair " + id + " is not in the space");
  }
}

GroundTruth ground_truth(const PlantSpec& spec) {
  GroundTruth t;
  for (const auto& p : pairs(spec.space)) {
    const auto id = p.id();
    t.pair[id] = planted_for(spec, PromptOwner{MaskKind::pair, id});
  }
  for (const auto* c : spec.space.all()) {
    LayerStack u;
    for (auto& l : u.layers) l = LayerMask::full();
    const auto& complement = c->is_ast() ? spec.space.builtins() : spec.space.ast_nodes();
    for (const auto& o : complement) {
      const auto& m = t.pair.at(c->is_ast() ? c->id + "/" + o.id : o.id + "/" + c->id);
      for (std::size_t l = 0; l < kLayerCount; ++l) u[l] &= m[l];
    }
    t.universal[c->id] = u;
  }
  for (const auto* c : testable_objects(spec.space))
    t.checker[c->id] = planted_for(spec, PromptOwner{MaskKind::checker, c->id});
  return t;
}

MaskStore GroundTruth::to_store(std::span<const SweepSetting> grid) const {
  MaskStore st;
  for (const auto& s : grid) {
    for (const auto& [id, m] : pair) st.put(MaskKind::pair, id, s, m);
    for (const auto& [id, m] : universal) st.put(MaskKind::universal, id, s, m);
    for (const auto& [id, m] : checker) st.put(MaskKind::checker, id, s, m);
  }
  return st;
}

std::vector<std::string> synthetic_prompt_ids(const ConceptSpace& space, std::size_t n_object,
                                              std::size_t n_checker) {
  std::vector<std::string> ids;
  char num[24];
  for (const auto& p : pairs(space)) {
    const auto base = "obj/" + p.id() + "/";
    for (std::size_t i = 0; i < n_object; ++i) {
      std::snprintf(num, sizeof num, "%03zu", i);
      ids.push_back(base + num);
    }
  }
  for (const auto* c : testable_objects(space)) {
    for (std::size_t i = 0; i < n_checker; ++i) {
      std::snprintf(num, sizeof num, "%03zu", i);
      ids.push_back("chk/" + c->id + "/" + num);
    }
  }
  return ids;
}

void synth_record(const PlantSpec& spec, std::string_view prompt_id, std::span<const double> epsilons,
                  std::span<float> out) {
  if (out.size() != kRecordValues) throw SynthError("record buffer must hold 8 x 2048 values");
  const auto owner = owner_of(prompt_id);
  if (!owner) throw SynthError("unrecognised prompt id " + std::string(prompt_id));
  std::fill(out.begin(), out.end(), 0.0f);
  Rng rng(derive_seed(spec.seed, prompt_id));

  const auto planted = planted_for(spec, *owner);
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    for (auto i : planted[l].indices()) {
      const double v = spec.planted_magnitude + spec.planted_jitter * (2 * rng.uniform() - 1);
      out[l * kLayerWidth + i] = static_cast<float>(rng.chance(0.5) ? v : -v);
    }
  }

  const double q = spec.background_density;
  if (q <= 0) return;
  // Geometric gaps between background firings.
  const double log_miss = std::log1p(-q);
  std::size_t pos = 0;
  while (true) {
    const double gap = std::floor(std::log1p(-rng.uniform()) / log_miss);
    if (gap >= static_cast<double>(kRecordValues - pos)) break;
    pos += static_cast<std::size_t>(gap);
    if (out[pos] == 0.0f) {
      // Equal shares per band: below the smallest epsilon, then between
      // consecutive epsilons.
      const std::size_t band = rng.below(epsilons.size());
      const double hi = epsilons[band];
      const double lo = band == 0 ? hi / 10 : epsilons[band - 1];
      const double v = inside(std::exp(rng.uniform(std::log(lo), std::log(hi))), lo, hi);
      out[pos] = static_cast<float>(rng.chance(0.5) ? v : -v);
    }
    if (++pos >= kRecordValues) break;
  }
}

GroundTruth plant(const PlantSpec& spec, std::span<const std::string> prompt_ids,
                  const std::filesystem::path& dump_path, const PlantOptions& options) {
  spec.validate(options.grid);
  for (const auto& id : prompt_ids) {
    const auto owner = owner_of(id);
    if (!owner) throw SynthError("unrecognised prompt id " + id);
    if (owner->kind == MaskKind::pair) {
      const auto slash = owner->id.find('/');
      if (!spec.space.ast_index(owner->id.substr(0, slash)) || !spec.space.builtin_index(owner->id.substr(slash + 1)))
        throw SynthError("prompt " + id + " names a pair outside the space");
    } else {
      const auto* c = spec.space.find(owner->id);
      if (!c || !c->testable) throw SynthError("prompt " + id + " names a non-testable object");
    }
  }
  const auto epsilons = sorted_epsilons(options.grid);

  DumpManifest man;
  man.prompt_ids.assign(prompt_ids.begin(), prompt_ids.end());
  man.model_id = options.model_id;
  man.model_revision = options.model_revision;
  man.tokenizer_id = options.tokenizer_id;
  man.seed = spec.seed;
  man.extra = {{"generator", "synth"},
               {"background_density", spec.background_density},
               {"planted_magnitude", spec.planted_magnitude},
               {"planted_jitter", spec.planted_jitter}};

  if (dump_path.has_parent_path()) std::filesystem::create_directories(dump_path.parent_path());
  ActivationDumpWriter writer(dump_path, static_cast<std::uint32_t>(prompt_ids.size()));
  constexpr std::size_t kChunk = 64;
  std::vector<float> buf(kChunk * kRecordValues);
  for (std::size_t start = 0; start < prompt_ids.size(); start += kChunk) {
    const auto n = std::min(kChunk, prompt_ids.size() - start);
    parallel_for(n, [&](std::size_t i) {
      synth_record(spec, prompt_ids[start + i], epsilons,
                   std::span<float>(buf).subspan(i * kRecordValues, kRecordValues));
    });
    for (std::size_t i = 0; i < n; ++i)
      writer.append(std::span<const float>(buf).subspan(i * kRecordValues, kRecordValues));
  }
  writer.finish();
  man.save(manifest_path_for(dump_path));
  return ground_truth(spec);
}

namespace {

void compare(RecoveryReport& r, MaskKind kind, const std::string& id, const SweepSetting& s, const LayerStack& got,
             const LayerStack& want, bool concept_only_stage) {
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    RecoveryEntry e;
    e.kind = kind;
    e.id = concept_only_stage ? id + "#concept-only" : id;
    e.layer = l;
    e.setting = s;
    e.jaccard = jaccard_similarity(got[l], want[l]);
    e.false_negatives = want[l].minus(got[l]).count();
    e.false_positives = got[l].minus(want[l]).count();
    r.false_negatives += e.false_negatives;
    r.false_positives += e.false_positives;
    r.min_jaccard = std::min(r.min_jaccard, e.jaccard);
    if (e.false_negatives || e.false_positives) r.all_exact = false;
    r.entries.push_back(std::move(e));
  }
}

LayerStack minus(const LayerStack& a, const LayerStack& b) {
  LayerStack out;
  for (std::size_t l = 0; l < kLayerCount; ++l) out[l] = a[l].minus(b[l]);
  return out;
}

}  // namespace

RecoveryReport recovery_report(const MaskStore& store, const GroundTruth& truth, const ConceptSpace& space,
                               std::span<const SweepSetting> grid) {
  if (grid.empty()) throw SynthError("recovery report needs a grid");
  const auto check_ids = [&](MaskKind kind, const std::map<std::string, LayerStack, std::less<>>& want) {
    const auto have = store.ids(kind);
    std::set<std::string> expected;
    for (const auto& [id, m] : want) expected.insert(id);
    if (std::set<std::string>(have.begin(), have.end()) != expected)
      throw SynthError(std::string("recovered and planted ") + std::string(to_string(kind)) + " keys differ");
  };
  check_ids(MaskKind::universal, truth.universal);
  check_ids(MaskKind::checker, truth.checker);
  const bool pairs_present = !store.ids(MaskKind::pair).empty();
  if (pairs_present) check_ids(MaskKind::pair, truth.pair);

  RecoveryReport r;
  for (const auto& s : grid) {
    auto at = [&](MaskKind kind, const std::string& id) -> const LayerStack& {
      const auto* m = store.find(kind, id, s);
      if (!m) throw SynthError("store lacks " + std::string(to_string(kind)) + " " + id + " at " + s.label());
      return *m;
    };
    if (pairs_present)
      for (const auto& [id, want] : truth.pair) compare(r, MaskKind::pair, id, s, at(MaskKind::pair, id), want, false);
    for (const auto& [id, want] : truth.universal)
      compare(r, MaskKind::universal, id, s, at(MaskKind::universal, id), want, false);
    for (const auto& [id, want] : truth.checker) {
      compare(r, MaskKind::checker, id, s, at(MaskKind::checker, id), want, false);
      if (!space.find(id)) throw SynthError("checker " + id + " is not in the space");
      compare(r, MaskKind::universal, id, s, minus(at(MaskKind::universal, id), at(MaskKind::checker, id)),
              minus(truth.universal.at(id), want), true);
    }
  }
  return r;
}

namespace presets {

namespace {

// Hands out unused neurons below 1024, per layer, in a fixed shuffled order.
class Allocator {
 public:
  Allocator(std::uint64_t seed, bool shuffle) {
    Rng rng(seed);
    for (auto& order : order_) {
      order.resize(kPool);
      std::iota(order.begin(), order.end(), 0);
      if (shuffle)
        for (std::size_t i = kPool - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    }
  }

  LayerMask take(std::size_t layer, std::size_t n) {
    LayerMask m;
    for (std::size_t i = 0; i < n; ++i) {
      if (next_[layer] >= kPool) throw SynthError("planted neuron pool exhausted at layer " + std::to_string(layer));
      m.set(order_[layer][next_[layer]++]);
    }
    return m;
  }

  static constexpr std::size_t kPool = 1024;

 private:
  std::array<std::vector<std::size_t>, kLayerCount> order_;
  std::array<std::size_t, kLayerCount> next_{};
};

// One neuron per pair in [1024, 2048), the same index at every layer.
void add_pair_neurons(PlantSpec& spec) {
  const auto nb = spec.space.builtins().size();
  for (std::size_t a = 0; a < spec.space.ast_nodes().size(); ++a) {
    for (std::size_t b = 0; b < nb; ++b) {
      LayerStack m;
      const std::size_t idx = Allocator::kPool + (a * nb + b) % Allocator::kPool;
      for (auto& l : m.layers) l.set(idx);
      spec.pair_neurons[spec.space.ast_nodes()[a].id + "/" + spec.space.builtins()[b].id] = m;
    }
  }
}

PlantSpec empty_spec(const ConceptSpace& space, std::uint64_t seed, double q) {
  return PlantSpec{space, {}, {}, {}, {}, q, 1.0, 0.05, seed};
}

}  // namespace

PlantSpec random(const ConceptSpace& space, std::uint64_t seed, double q) {
  auto spec = empty_spec(space, seed, q);
  Allocator alloc(derive_seed(seed, "plant/random"), true);
  Rng rng(derive_seed(seed, "plant/sizes"));
  for (const auto* c : space.all()) {
    LayerStack concept_set, shared, token;
    for (std::size_t l = 0; l < kLayerCount; ++l) {
      concept_set[l] = alloc.take(l, 1 + rng.below(4));
      if (c->testable) {
        shared[l] = alloc.take(l, 1 + rng.below(2));
        token[l] = alloc.take(l, rng.below(3));
      }
    }
    spec.concept_neurons[c->id] = concept_set;
    if (c->testable) {
      spec.shared_neurons[c->id] = shared;
      spec.token_neurons[c->id] = token;
    }
  }
  add_pair_neurons(spec);
  return spec;
}

PlantSpec null(const ConceptSpace& space, std::uint64_t seed, double q) { return empty_spec(space, seed, q); }

PlantSpec atomicity(const ConceptSpace& space, std::uint64_t seed, std::size_t layer) {
  if (layer >= kLayerCount) throw SynthError("atomicity layer out of range");
  for (const auto& id : ConceptSpace::modular_ids())
    if (!space.find(id)) throw SynthError("atomicity preset needs " + id + " in the space");
  auto spec = random(space, seed, 0);
  // Free neurons at the layer, lowest first.
  LayerMask used;
  for (const auto* table : {&spec.concept_neurons, &spec.shared_neurons, &spec.token_neurons})
    for (const auto& [id, m] : *table) used |= m[layer];
  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < Allocator::kPool; ++i)
    if (!used.test(i)) free.push_back(i);
  LayerMask core;
  for (std::size_t i = 0; i < 3; ++i) core.set(free[i]);
  std::size_t next = 3;
  for (const auto& id : ConceptSpace::modular_ids()) {
    auto& c = spec.concept_neurons[id][layer];
    c = core;
    c.set(free[next++]);
  }
  return spec;
}

PlantSpec reference(const ConceptSpace& space) {
  if (!space.is_full()) throw SynthError("the reference preset needs the full concept space");
  auto spec = empty_spec(space, 0, 0);
  Allocator alloc(0, false);
  auto grow = [&](std::map<std::string, LayerStack, std::less<>>& table, const std::string& id, std::size_t layer,
                  std::size_t n) { table[id][layer] |= alloc.take(layer, n); };

  // Baseline: a shared neuron and a token-only neuron per testable object,
  // two concept neurons per untestable concept, at every layer.
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    for (const auto* c : space.all()) {
      if (c->testable) {
        grow(spec.shared_neurons, c->id, l, 1);
        grow(spec.token_neurons, c->id, l, 1);
      } else {
        grow(spec.concept_neurons, c->id, l, 2);
      }
    }
  }

  // Layer 3: the six modular concepts share a three-neuron core.
  const auto core = alloc.take(3, 3);
  for (const auto& id : ConceptSpace::modular_ids()) {
    spec.concept_neurons[id][3] |= core;
    grow(spec.concept_neurons, id, 3, 1);
  }
  grow(spec.concept_neurons, "Break", 4, 1);

  // Layer 5 group totals: modular 10 / 6, non-modular 32 / 23, builtins 0 / 36.
  grow(spec.concept_neurons, "Break", 5, 4);
  grow(spec.concept_neurons, "ImportFrom", 5, 3);
  grow(spec.concept_neurons, "Assert", 5, 3);
  const auto nonmodular = tier_members(space, Tier::nonmodular_ast);
  const auto loops = alloc.take(5, 1);
  const auto defs = alloc.take(5, 1);
  const std::set<std::string> g1 = {"For", "While", "AsyncFor", "With", "AsyncWith"};
  const std::set<std::string> g2 = {"FunctionDef", "AsyncFunctionDef", "ClassDef", "Lambda", "Return"};
  for (std::size_t i = 0; i < nonmodular.size(); ++i) {
    const auto& id = nonmodular[i]->id;
    std::size_t own = i < 14 ? 2 : 1;
    for (const auto* group : {&g1, &g2}) {
      if (group->count(id)) {
        spec.concept_neurons[id][5] |= group == &g1 ? loops : defs;
        --own;
      }
    }
    grow(spec.concept_neurons, id, 5, own);
    if (i < 5) grow(spec.shared_neurons, id, 5, 1);
  }
  std::size_t bi = 0;
  for (const auto* c : tier_members(space, Tier::builtin)) {
    if (!c->testable) continue;
    if (bi < 2) grow(spec.shared_neurons, c->id, 5, 1);
    // A few builtins keep one concept-only neuron at layer 6.
    if (bi % 4 == 1) grow(spec.concept_neurons, c->id, 6, 1);
    ++bi;
  }
  add_pair_neurons(spec);
  return spec;
}

std::vector<std::string> names() { return {"atomicity", "null", "random", "reference"}; }

PlantSpec by_name(std::string_view name, const ConceptSpace& space, std::uint64_t seed, double q) {
  if (name == "random") return random(space, seed, q);
  if (name == "null") return null(space, seed, q);
  if (name == "atomicity") {
    auto s = atomicity(space, seed);
    s.background_density = q;
    return s;
  }
  if (name == "reference") {
    auto s = reference(space);
    s.seed = seed;
    s.background_density = q;
    return s;
  }
  throw SynthError("unknown plant preset '" + std::string(name) + "'");
}

}  // namespace presets

}  // namespace atlas
