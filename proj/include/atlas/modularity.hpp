// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/layer_mask.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class ModularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using LayerFlags = std::array<bool, kLayerCount>;

struct ModularityScore {
  std::string concept_id;
  std::size_t significant_layers = 0;
  LayerFlags layers{};
  std::string criterion;
  double trim = 0;
  std::size_t rank = 0;  // 1 + number of strictly higher scores
  bool tied = false;
};

struct ModularityInput {
  const MaskStore& store;
  const ConceptSpace& space;
  std::vector<SweepSetting> grid;
  double trim = 0;
};

// Decides which layers are significant for one testable object.
using ModularityCriterion = std::function<LayerFlags(const ModularityInput&, const Concept&)>;

void register_criterion(const std::string& id, ModularityCriterion criterion);
std::vector<std::string> criterion_ids();
inline constexpr std::string_view kDefaultCriterion = "stable-nonempty";

// Drops the floor(p * |circuit|) weakest neurons, ordered by summed
// magnitude and then by index.
LayerMask trim_lowest(const LayerMask& circuit, std::span<const std::int64_t> layer_magnitude, double p);

// Concept-only set of a testable object after trimming its universal circuit.
LayerMask trimmed_concept_only(const ModularityInput& in, const Concept& c, const SweepSetting& s,
                               std::size_t layer);

// Testable objects by significant-layer count, descending, ties alphabetical.
std::vector<ModularityScore> modularity_ranking(const MaskStore& store, const ConceptSpace& space,
                                                std::string_view criterion = kDefaultCriterion, double trim = 0);

}  // namespace atlas
