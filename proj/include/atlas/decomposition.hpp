// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/layer_mask.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class DecompositionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Universal circuit A against checker mask B for one object, layer and setting.
struct Decomposition {
  std::string object_id;
  std::size_t layer = 0;
  SweepSetting setting;
  LayerMask concept_only;  // A \ B
  LayerMask shared;        // A & B
  LayerMask token_only;    // B \ A

  std::size_t size() const { return concept_only.count() + shared.count(); }
  // |A \ B| / |A|; empty when A is empty.
  std::optional<double> concept_fraction() const;
};

// Exact partition. Verifies disjointness and coverage on every call.
Decomposition decompose(const LayerMask& a, const LayerMask& b);
Decomposition decompose(std::string object_id, std::size_t layer, const SweepSetting& s, const LayerMask& a,
                        const LayerMask& b);

// Every testable object x layer x setting in the store, in space, setting
// and layer order. Throws DecompositionError listing missing masks.
std::vector<Decomposition> decompose_store(const MaskStore& store, const ConceptSpace& space);

enum class Aggregation { pooled, mean };
std::string_view to_string(Aggregation a);
std::optional<Aggregation> parse_aggregation(std::string_view s);

struct GroupSummary {
  Tier group = Tier::builtin;
  std::size_t layer = 0;
  SweepSetting setting;
  std::size_t members = 0;
  std::size_t pooled_concept_only = 0;
  std::size_t pooled_shared = 0;
  std::size_t pooled_size = 0;
  std::optional<double> pooled_cf;
  std::optional<double> mean_cf;
  // Members with an empty universal circuit, left out of mean_cf.
  std::vector<std::string> undefined_members;

  std::optional<double> cf(Aggregation a) const { return a == Aggregation::pooled ? pooled_cf : mean_cf; }
};

// Requires one decomposition per testable member of `group` at (layer, s).
GroupSummary group_summary(std::span<const Decomposition> decomps, const ConceptSpace& space, Tier group,
                           std::size_t layer, const SweepSetting& s);

// Folds decompositions of one family (AST or builtin) over all eight layers.
struct CfRow {
  SweepSetting setting;
  std::optional<double> ast_cf;
  std::optional<double> builtin_cf;
};
std::vector<CfRow> sweep_cf_table(const MaskStore& store, const ConceptSpace& space,
                                  Aggregation aggregation = Aggregation::mean);

// One aggregate fraction per layer; empty where no member has a circuit.
std::array<std::optional<double>, kLayerCount> layer_profile(const MaskStore& store, const ConceptSpace& space,
                                                            Tier group, const SweepSetting& s,
                                                            Aggregation aggregation = Aggregation::mean);

// Tab-separated decomposition table plus a "<table>.idx" sidecar with
// explicit neuron indices per record, in the same row order.
std::string format_decomposition_table(std::span<const Decomposition> decomps);
std::string format_decomposition_index(std::span<const Decomposition> decomps);
void write_decomposition_table(const std::filesystem::path& path, std::span<const Decomposition> decomps);
std::filesystem::path index_path_for(const std::filesystem::path& table);

// Rebuilds records from a table and its sidecar. Throws on disagreement.
std::vector<Decomposition> read_decomposition_table(const std::filesystem::path& path);

}  // namespace atlas
