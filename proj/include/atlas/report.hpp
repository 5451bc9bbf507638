// SPDX-License-Identifier: Apache-2.0
//
// Tab-separated summaries of a mask store. Percentages carry one decimal;
// undefined fractions print as "-".
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include "atlas/concept_space.hpp"
#include "atlas/decomposition.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PairLayerCount {
  std::size_t nonempty = 0;
  std::size_t total = 0;
};

// Over every pair of the space. Throws ReportError naming the first missing
// pair when only some pairs are stored; a store without pair masks counts 0/0.
PairLayerCount pair_layer_nonempty(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s);

// concept, tier, then the universal circuit size at L0..L7.
std::string nonemptiness_matrix(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s);

// Per-layer concept fraction of the modular, non-modular and builtin tiers.
std::string layer_table(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                        Aggregation aggregation);

// AST and builtin concept fraction with their ratio, one row per setting.
std::string sweep_table(const MaskStore& store, const ConceptSpace& space, Aggregation aggregation);

// Pooled partition counts of each testable tier at one layer.
std::string group_table(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                        std::size_t layer);

// All four tiers: member counts, circuit sizes and non-empty layers.
std::string tier_summary(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s);

struct ReportOptions {
  SweepSetting setting{0.001, 0.8};
  SweepSetting group_setting{0.5, 0.8};
  std::size_t group_layer = 5;
  Aggregation aggregation = Aggregation::mean;
};

// Plain-text digest of all of the above.
std::string format_report(const MaskStore& store, const ConceptSpace& space, const ReportOptions& options = {});

}  // namespace atlas
