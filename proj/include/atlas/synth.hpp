// SPDX-License-Identifier: Apache-2.0
//
// Synthetic activation dumps with planted circuits. A prompt for pair (a, b)
// fires the concept and shared neurons of a and b plus the pair's own
// neurons; a checker prompt for object o fires o's shared and token neurons.
// Everything else fires at background density q.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "atlas/activation_dump.hpp"
#include "atlas/concept_space.hpp"
#include "atlas/layer_mask.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class SynthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlantSpec {
  ConceptSpace space;
  std::map<std::string, LayerStack, std::less<>> concept_neurons;  // object prompts of the concept
  std::map<std::string, LayerStack, std::less<>> shared_neurons;   // object and checker prompts
  std::map<std::string, LayerStack, std::less<>> token_neurons;    // checker prompts only
  std::map<std::string, LayerStack, std::less<>> pair_neurons;     // "<ast>/<builtin>" prompts only
  double background_density = 0;
  double planted_magnitude = 1.0;
  double planted_jitter = 0.05;
  std::uint64_t seed = 0;

  // Throws SynthError. The grid fixes the epsilon bands.
  void validate(std::span<const SweepSetting> grid) const;
};

// Expected masks, identical at every sweep setting.
struct GroundTruth {
  std::map<std::string, LayerStack, std::less<>> pair;
  std::map<std::string, LayerStack, std::less<>> universal;
  std::map<std::string, LayerStack, std::less<>> checker;

  // The truth laid out as a mask store at each setting.
  MaskStore to_store(std::span<const SweepSetting> grid) const;
};

GroundTruth ground_truth(const PlantSpec& spec);

// "obj/<pair>/<NNN>" x n_object per pair, then "chk/<object>/<NNN>" x
// n_checker per testable object.
std::vector<std::string> synthetic_prompt_ids(const ConceptSpace& space, std::size_t n_object,
                                              std::size_t n_checker);

struct PlantOptions {
  std::vector<SweepSetting> grid = default_grid();
  std::string model_id = "synthetic";
  std::string model_revision = "planted";
  std::string tokenizer_id = "none";
};

// Writes the ACSP dump and manifest. Records depend only on the plant seed
// and the prompt id.
GroundTruth plant(const PlantSpec& spec, std::span<const std::string> prompt_ids,
                  const std::filesystem::path& dump_path, const PlantOptions& options = {});

// One activation record; exposed for tests.
void synth_record(const PlantSpec& spec, std::string_view prompt_id, std::span<const double> epsilons,
                  std::span<float> out);

struct RecoveryEntry {
  MaskKind kind = MaskKind::universal;
  std::string id;
  std::size_t layer = 0;
  SweepSetting setting;
  double jaccard = 1.0;
  std::size_t false_negatives = 0;  // planted, not recovered
  std::size_t false_positives = 0;
};

struct RecoveryReport {
  std::vector<RecoveryEntry> entries;
  bool all_exact = true;
  std::size_t false_negatives = 0;
  std::size_t false_positives = 0;
  double min_jaccard = 1.0;
};

// Compares universal, checker and concept-only sets at every setting of
// `grid`. Throws SynthError when the store lacks a key of the truth.
RecoveryReport recovery_report(const MaskStore& store, const GroundTruth& truth, const ConceptSpace& space,
                               std::span<const SweepSetting> grid);

namespace presets {

// Disjoint random sets per concept and layer; every pair-layer mask is
// non-empty through per-pair neurons.
PlantSpec random(const ConceptSpace& space, std::uint64_t seed, double q = 0);

// Background only.
PlantSpec null(const ConceptSpace& space, std::uint64_t seed, double q);

// random() plus a concept-only core shared by the six modular concepts at
// `layer`. Requires all six in the space.
PlantSpec atomicity(const ConceptSpace& space, std::uint64_t seed, std::size_t layer = 3);

// Fixed layout on the full space that reproduces the locked reference
// numbers; see the README for the layout.
PlantSpec reference(const ConceptSpace& space);

std::vector<std::string> names();
PlantSpec by_name(std::string_view name, const ConceptSpace& space, std::uint64_t seed, double q);

}  // namespace presets

}  // namespace atlas
