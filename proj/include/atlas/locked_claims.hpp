// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/decomposition.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

enum class ClaimStatus { pass, fail, missing };
std::string_view to_string(ClaimStatus s);

struct ClaimResult {
  std::string id;
  std::string claim;
  ClaimStatus status = ClaimStatus::missing;
  std::string detail;
};

struct LockedOptions {
  double tolerance = 0.001;  // on ratios
  Aggregation aggregation = Aggregation::mean;
  SweepSetting pair_setting{0.001, 0.8};
  SweepSetting group_setting{0.5, 0.8};
  std::size_t group_layer = 5;
  SweepSetting cluster_setting{0.001, 0.8};
  std::size_t cluster_layer = 3;
  std::size_t cluster_k = 4;
  // Adds the released-artifact sweep row check (not part of the default gate).
  bool released_checks = false;
};

// Each claim is evaluated independently; a claim whose inputs are absent
// from the store is reported as missing rather than failed.
std::vector<ClaimResult> verify_locked(const MaskStore& store, const ConceptSpace& space,
                                       const LockedOptions& options = {});

std::string format_claims(const std::vector<ClaimResult>& results);
bool all_passed(const std::vector<ClaimResult>& results);

}  // namespace atlas
