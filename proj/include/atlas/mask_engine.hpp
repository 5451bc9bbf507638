// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atlas/activation_dump.hpp"
#include "atlas/concept_space.hpp"
#include "atlas/layer_mask.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class MaskError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bit i set iff |values[i]| > epsilon. Throws on non-finite input.
LayerMask binarise_layer(std::span<const float> values, double epsilon);
LayerStack binarise(std::span<const float> record, double epsilon);

// ceil(C * n), the smallest active count that satisfies count / n >= C.
std::size_t required_count(double consistency, std::size_t n);

struct LayerMaskAt {
  std::size_t layer = 0;
  LayerMask bits;
};

// Bit i set iff at least required_count(C, n) inputs have it.
LayerMask consistency_filter(std::span<const LayerMaskAt> masks, double consistency);
LayerStack consistency_filter(std::span<const LayerStack> masks, double consistency);

struct PairMask {
  std::string pair_id;  // "<ast>/<builtin>"
  SweepSetting setting;
  LayerStack masks;
};

struct UniversalCircuit {
  std::string concept_id;
  SweepSetting setting;
  LayerStack masks;
};

// Intersects one pair mask per complementary object of `c`.
UniversalCircuit marginalise(const ConceptSpace& space, const Concept& c, std::span<const PairMask> inputs);

// Fused binarise + per-neuron counting for one prompt set at several epsilon
// thresholds at once.
class PromptSetAccumulator {
 public:
  explicit PromptSetAccumulator(std::span<const double> epsilons, bool track_magnitude = false);

  void add(std::span<const float> record);
  std::size_t prompts() const { return prompts_; }
  std::span<const double> epsilons() const { return epsilons_; }
  // Consistency-filtered masks at epsilons()[eps_index].
  LayerStack masks(std::size_t eps_index, double consistency) const;
  // Fixed-point sums of |value| * kMagnitudeScale.
  const std::vector<std::int64_t>& magnitude() const { return magnitude_; }

 private:
  std::vector<double> epsilons_;
  std::vector<float> thresholds_;
  std::vector<std::uint16_t> counts_;
  std::vector<std::int64_t> magnitude_;
  bool track_magnitude_;
  std::size_t prompts_ = 0;
};

// Prompt ids: "obj/<ast>/<builtin>/<n>" and "chk/<object>/<n>".
struct PromptOwner {
  MaskKind kind = MaskKind::pair;  // pair or checker
  std::string id;
};
std::optional<PromptOwner> owner_of(std::string_view prompt_id);

struct SweepOptions {
  std::vector<SweepSetting> grid = default_grid();
  bool checker_masks = true;
  bool universal_circuits = true;
  bool track_magnitude = true;
};

struct NonEmptinessRow {
  std::string concept_id;
  SweepSetting setting;
  std::array<std::size_t, kLayerCount> sizes{};
};

struct SweepResult {
  MaskStore store;
  std::vector<NonEmptinessRow> universal_report;
  // Per setting: (non-empty pair-layer masks, total pair-layer masks).
  std::map<SweepSetting, std::pair<std::size_t, std::size_t>> pair_layer_nonempty;
  std::size_t records_read = 0;
};

class CoverageError : public MaskError {
 public:
  CoverageError(const std::string& what, std::vector<std::string> missing)
      : MaskError(what), missing_(std::move(missing)) {}
  const std::vector<std::string>& missing() const { return missing_; }

 private:
  std::vector<std::string> missing_;
};

SweepResult run_sweep(const ActivationDump& dump, const ConceptSpace& space, const SweepOptions& options = {});

// Universal circuits and the report, from pair masks already in `store`.
void build_universal(MaskStore& store, const ConceptSpace& space, std::span<const SweepSetting> grid,
                     std::vector<NonEmptinessRow>* report = nullptr);

}  // namespace atlas
