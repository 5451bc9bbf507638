// SPDX-License-Identifier: Apache-2.0
#include "atlas/mask_engine.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <mutex>
#include <set>

#include "atlas/util.hpp"

namespace atlas {

namespace {

// Thresholds are compared in float32, the precision of the stored values, so
// a stored 0.1f is not above epsilon = 0.1.
float threshold_of(double epsilon) {
  if (!(epsilon > 0) || !std::isfinite(epsilon)) throw MaskError("epsilon must be positive and finite");
  return static_cast<float>(epsilon);
}

bool all_finite(std::span<const float> values) {
  bool ok = true;
  for (float v : values) ok &= std::fabs(v) <= FLT_MAX;
  return ok;
}

}  // namespace

LayerMask binarise_layer(std::span<const float> values, double epsilon) {
  if (values.size() != kLayerWidth) throw MaskError("layer must hold 2048 values");
  if (!all_finite(values)) throw MaskError("non-finite activation value");
  const float t = threshold_of(epsilon);
  LayerMask m;
  auto& words = m.words();
  for (std::size_t k = 0; k < kMaskWords; ++k) {
    std::uint64_t w = 0;
    for (std::size_t b = 0; b < 64; ++b)
      w |= static_cast<std::uint64_t>(std::fabs(values[k * 64 + b]) > t) << b;
    words[k] = w;
  }
  return m;
}

LayerStack binarise(std::span<const float> record, double epsilon) {
  if (record.size() != kRecordValues) throw MaskError("record must hold 8 x 2048 values");
  LayerStack s;
  for (std::size_t l = 0; l < kLayerCount; ++l) s[l] = binarise_layer(record.subspan(l * kLayerWidth, kLayerWidth), epsilon);
  return s;
}

std::size_t required_count(double consistency, std::size_t n) {
  if (n == 0) throw MaskError("consistency filter needs at least one mask");
  if (!(consistency > 0 && consistency <= 1)) throw MaskError("consistency must lie in (0, 1]");
  // The 1e-9 slack keeps exact products such as 0.8 * 50 from rounding up.
  const double need = std::ceil(consistency * static_cast<double>(n) - 1e-9);
  return std::max<std::size_t>(1, static_cast<std::size_t>(need));
}

namespace {

LayerMask threshold_counts(const std::uint16_t* counts, std::size_t need) {
  LayerMask m;
  auto& words = m.words();
  for (std::size_t k = 0; k < kMaskWords; ++k) {
    std::uint64_t w = 0;
    for (std::size_t b = 0; b < 64; ++b) w |= static_cast<std::uint64_t>(counts[k * 64 + b] >= need) << b;
    words[k] = w;
  }
  return m;
}

void count_bits(const LayerMask& m, std::uint16_t* counts) {
  const auto& words = m.words();
  for (std::size_t k = 0; k < kMaskWords; ++k)
    for (std::size_t b = 0; b < 64; ++b) counts[k * 64 + b] += static_cast<std::uint16_t>((words[k] >> b) & 1);
}

}  // namespace

LayerMask consistency_filter(std::span<const LayerMaskAt> masks, double consistency) {
  if (masks.empty()) throw MaskError("consistency filter needs at least one mask");
  if (masks.size() > 0xffff) throw MaskError("too many masks for one consistency filter");
  for (const auto& m : masks)
    if (m.layer != masks.front().layer) throw MaskError("consistency filter over mixed layers");
  const auto need = required_count(consistency, masks.size());
  std::vector<std::uint16_t> counts(kLayerWidth, 0);
  for (const auto& m : masks) count_bits(m.bits, counts.data());
  return threshold_counts(counts.data(), need);
}

LayerStack consistency_filter(std::span<const LayerStack> masks, double consistency) {
  if (masks.empty()) throw MaskError("consistency filter needs at least one mask");
  if (masks.size() > 0xffff) throw MaskError("too many masks for one consistency filter");
  const auto need = required_count(consistency, masks.size());
  LayerStack out;
  std::vector<std::uint16_t> counts(kLayerWidth);
  for (std::size_t l = 0; l < kLayerCount; ++l) {
    std::fill(counts.begin(), counts.end(), 0);
    for (const auto& s : masks) count_bits(s[l], counts.data());
    out[l] = threshold_counts(counts.data(), need);
  }
  return out;
}

UniversalCircuit marginalise(const ConceptSpace& space, const Concept& c, std::span<const PairMask> inputs) {
  const auto& complement = c.is_ast() ? space.builtins() : space.ast_nodes();
  if (space.find(c.id) == nullptr) throw MaskError("concept " + c.id + " is not in the space");
  if (inputs.empty()) throw MaskError("marginalise over no inputs for " + c.id);
  std::map<std::string, const PairMask*, std::less<>> by_id;
  for (const auto& in : inputs) {
    if (in.setting != inputs.front().setting)
      throw MaskError("setting mismatch while marginalising " + c.id + ": " + in.setting.label() + " vs " +
                      inputs.front().setting.label());
    if (!by_id.emplace(in.pair_id, &in).second) throw MaskError("duplicate pair mask " + in.pair_id);
  }
  UniversalCircuit out{c.id, inputs.front().setting, {}};
  for (auto& l : out.masks.layers) l = LayerMask::full();
  std::vector<std::string> missing;
  for (const auto& other : complement) {
    const std::string id = c.is_ast() ? c.id + "/" + other.id : other.id + "/" + c.id;
    const auto it = by_id.find(id);
    if (it == by_id.end()) {
      missing.push_back(id);
      continue;
    }
    for (std::size_t l = 0; l < kLayerCount; ++l) out.masks[l] &= it->second->masks[l];
    by_id.erase(it);
  }
  if (!missing.empty())
    throw CoverageError("missing complementary pair masks for " + c.id + " (" + std::to_string(missing.size()) +
                            ", first " + missing.front() + ")",
                        missing);
  if (!by_id.empty()) throw MaskError("pair mask " + by_id.begin()->first + " does not involve " + c.id);
  return out;
}

// ---------------------------------------------------------------------------

PromptSetAccumulator::PromptSetAccumulator(std::span<const double> epsilons, bool track_magnitude)
    : epsilons_(epsilons.begin(), epsilons.end()), track_magnitude_(track_magnitude) {
  if (epsilons_.empty()) throw MaskError("accumulator needs at least one epsilon");
  for (double e : epsilons_) thresholds_.push_back(threshold_of(e));
  counts_.assign(epsilons_.size() * kRecordValues, 0);
  if (track_magnitude_) magnitude_.assign(kRecordValues, 0);
}

void PromptSetAccumulator::add(std::span<const float> record) {
  if (record.size() != kRecordValues) throw MaskError("record must hold 8 x 2048 values");
  if (prompts_ == 0xffff) throw MaskError("prompt set exceeds 65535 prompts");
  if (!all_finite(record)) throw MaskError("non-finite activation value");
  const float* r = record.data();
  for (std::size_t k = 0; k < thresholds_.size(); ++k) {
    std::uint16_t* c = counts_.data() + k * kRecordValues;
    const float t = thresholds_[k];
    for (std::size_t i = 0; i < kRecordValues; ++i) c[i] = static_cast<std::uint16_t>(c[i] + (std::fabs(r[i]) > t));
  }
  if (track_magnitude_)
    for (std::size_t i = 0; i < kRecordValues; ++i)
      magnitude_[i] += std::llround(static_cast<double>(std::fabs(r[i])) * kMagnitudeScale);
  ++prompts_;
}

LayerStack PromptSetAccumulator::masks(std::size_t eps_index, double consistency) const {
  if (eps_index >= epsilons_.size()) throw MaskError("epsilon index out of range");
  const auto need = required_count(consistency, prompts_);
  LayerStack out;
  const std::uint16_t* c = counts_.data() + eps_index * kRecordValues;
  for (std::size_t l = 0; l < kLayerCount; ++l) out[l] = threshold_counts(c + l * kLayerWidth, need);
  return out;
}

// ---------------------------------------------------------------------------

std::optional<PromptOwner> owner_of(std::string_view prompt_id) {
  const auto parts = split(prompt_id, '/');
  if (parts.size() == 4 && parts[0] == "obj" && !parts[1].empty() && !parts[2].empty())
    return PromptOwner{MaskKind::pair, std::string(parts[1]) + "/" + std::string(parts[2])};
  if (parts.size() == 3 && parts[0] == "chk" && !parts[1].empty())
    return PromptOwner{MaskKind::checker, std::string(parts[1])};
  return std::nullopt;
}

namespace {

struct OwnerTask {
  MaskKind kind;
  std::string id;
  const Concept* ast = nullptr;  // pair members, for magnitude folding
  const Concept* builtin = nullptr;
  std::vector<std::size_t> records;
};

}  // namespace

SweepResult run_sweep(const ActivationDump& dump, const ConceptSpace& space, const SweepOptions& options) {
  if (options.grid.empty()) throw MaskError("sweep grid is empty");
  std::vector<double> epsilons;
  for (const auto& s : options.grid) epsilons.push_back(s.epsilon);
  std::sort(epsilons.begin(), epsilons.end());
  epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());
  auto eps_index = [&](double e) {
    return static_cast<std::size_t>(std::lower_bound(epsilons.begin(), epsilons.end(), e) - epsilons.begin());
  };

  std::vector<OwnerTask> tasks;
  std::map<std::pair<MaskKind, std::string>, std::size_t> slot;
  for (const auto& p : pairs(space)) {
    slot[{MaskKind::pair, p.id()}] = tasks.size();
    tasks.push_back({MaskKind::pair, p.id(), p.ast, p.builtin, {}});
  }
  if (options.checker_masks) {
    for (const auto* c : testable_objects(space)) {
      slot[{MaskKind::checker, c->id}] = tasks.size();
      tasks.push_back({MaskKind::checker, c->id, nullptr, nullptr, {}});
    }
  }
  for (std::size_t i = 0; i < dump.size(); ++i) {
    const auto owner = owner_of(dump.prompt_id(i));
    if (!owner) throw MaskError("unrecognised prompt id in dump: " + dump.prompt_id(i));
    const auto it = slot.find({owner->kind, owner->id});
    if (it != slot.end()) tasks[it->second].records.push_back(i);
  }
  std::vector<std::string> missing;
  for (const auto& t : tasks)
    if (t.records.empty()) missing.push_back(std::string(t.kind == MaskKind::pair ? "obj/" : "chk/") + t.id);
  if (!missing.empty())
    throw CoverageError("activation dump lacks " + std::to_string(missing.size()) + " prompt sets (first " +
                            missing.front() + ")",
                        missing);

  dump.advise_sequential();
  std::vector<std::vector<LayerStack>> results(tasks.size());
  std::map<std::string, std::vector<std::int64_t>> magnitudes;
  if (options.track_magnitude)
    for (const auto* c : space.all()) magnitudes[c->id].assign(kRecordValues, 0);
  std::mutex magnitude_mu;

  parallel_for(tasks.size(), [&](std::size_t ti) {
    const auto& t = tasks[ti];
    const bool track = options.track_magnitude && t.kind == MaskKind::pair;
    PromptSetAccumulator acc(epsilons, track);
    std::vector<float> buf(kRecordValues);
    for (auto r : t.records) {
      dump.read(r, buf);
      acc.add(buf);
    }
    auto& out = results[ti];
    out.reserve(options.grid.size());
    for (const auto& s : options.grid) out.push_back(acc.masks(eps_index(s.epsilon), s.consistency));
    if (track) {
      // Integer sums commute, so the fold order does not affect the result.
      std::lock_guard lock(magnitude_mu);
      for (const Concept* c : {t.ast, t.builtin}) {
        auto& dst = magnitudes[c->id];
        const auto& src = acc.magnitude();
        for (std::size_t i = 0; i < kRecordValues; ++i) dst[i] += src[i];
      }
    }
  });

  SweepResult res;
  for (const auto& t : tasks) res.records_read += t.records.size();
  for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
    for (std::size_t si = 0; si < options.grid.size(); ++si) {
      const auto& stack = results[ti][si];
      if (tasks[ti].kind == MaskKind::pair) {
        auto& [nonempty, total] = res.pair_layer_nonempty[options.grid[si]];
        for (const auto& l : stack.layers) nonempty += !l.empty();
        total += kLayerCount;
      }
      res.store.put(tasks[ti].kind, tasks[ti].id, options.grid[si], stack);
    }
    results[ti].clear();
  }
  for (auto& [id, vals] : magnitudes) res.store.put_magnitude(id, std::move(vals));
  if (options.universal_circuits) build_universal(res.store, space, options.grid, &res.universal_report);
  return res;
}

void build_universal(MaskStore& store, const ConceptSpace& space, std::span<const SweepSetting> grid,
                     std::vector<NonEmptinessRow>* report) {
  const auto concepts = space.all();
  std::vector<std::vector<LayerStack>> out(concepts.size());
  parallel_for(concepts.size(), [&](std::size_t ci) {
    const Concept& c = *concepts[ci];
    const auto& complement = c.is_ast() ? space.builtins() : space.ast_nodes();
    for (const auto& s : grid) {
      LayerStack u;
      for (auto& l : u.layers) l = LayerMask::full();
      for (const auto& other : complement) {
        const std::string id = c.is_ast() ? c.id + "/" + other.id : other.id + "/" + c.id;
        const auto& m = store.at(MaskKind::pair, id, s);
        for (std::size_t l = 0; l < kLayerCount; ++l) u[l] &= m[l];
      }
      out[ci].push_back(u);
    }
  });
  for (std::size_t ci = 0; ci < concepts.size(); ++ci) {
    for (std::size_t si = 0; si < grid.size(); ++si) {
      store.put(MaskKind::universal, concepts[ci]->id, grid[si], out[ci][si]);
      if (report) {
        NonEmptinessRow row{concepts[ci]->id, grid[si], {}};
        for (std::size_t l = 0; l < kLayerCount; ++l) row.sizes[l] = out[ci][si][l].count();
        report->push_back(std::move(row));
      }
    }
  }
}

}  // namespace atlas
