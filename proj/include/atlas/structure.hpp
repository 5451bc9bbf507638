// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "atlas/concept_space.hpp"
#include "atlas/layer_mask.hpp"
#include "atlas/mask_store.hpp"

namespace atlas {

class StructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 1 - |S & T| / |S | T|. Two empty sets are at distance 0.
double jaccard_distance(const LayerMask& s, const LayerMask& t);
// |S & T| / |S | T|, 1 for two empty sets.
double jaccard_similarity(const LayerMask& s, const LayerMask& t);

class DistanceMatrix {
 public:
  DistanceMatrix(std::vector<std::string> labels, std::vector<double> values);

  static DistanceMatrix jaccard(std::vector<std::string> labels, std::span<const LayerMask> sets);

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * labels_.size() + j]; }
  // Leaves whose set was empty when built with jaccard().
  const std::vector<std::string>& empty_leaves() const { return empty_; }

 private:
  std::vector<std::string> labels_;
  std::vector<double> d_;
  std::vector<std::string> empty_;
};

// Cluster ids follow scipy: leaves are 0..n-1, merge i creates n+i.
struct Merge {
  std::size_t left = 0;  // smaller id
  std::size_t right = 0;
  double height = 0;
  std::size_t size = 0;

  bool operator==(const Merge&) const = default;
};

struct Dendrogram {
  std::vector<std::string> labels;
  std::vector<Merge> merges;

  std::size_t leaves() const { return labels.size(); }
};

// Relative gap under which two candidate merge costs count as tied.
inline constexpr double kLinkageTieTolerance = 1e-12;

// Lance-Williams Ward on squared dissimilarities, heights square-rooted.
// Equal costs go to the lexicographically smallest (left, right) id pair.
Dendrogram ward_linkage(const DistanceMatrix& d);

// Leaf -> cluster id after undoing the k-1 highest merges. Cluster ids are
// numbered by their smallest leaf.
std::vector<std::size_t> cut(const Dendrogram& tree, std::size_t k);

struct AtomicityResult {
  bool single_cluster = false;
  std::size_t clusters = 0;  // distinct clusters among the members
  std::vector<std::size_t> member_clusters;
};

AtomicityResult atomicity_check(const Dendrogram& tree, std::span<const std::size_t> partition,
                                std::span<const std::string> members);

// Concept-only neuron sets for all concepts at one layer and setting. For
// objects without a checker the whole universal circuit is used.
std::vector<LayerMask> concept_only_sets(const MaskStore& store, const ConceptSpace& space, const SweepSetting& s,
                                         std::size_t layer);

std::string dendrogram_json(const Dendrogram& tree, std::span<const std::string> empty_leaves = {});
std::string dendrogram_dot(const Dendrogram& tree);
// "concept<TAB>cluster" lines in leaf order.
std::string partition_tsv(const Dendrogram& tree, std::span<const std::size_t> partition);

}  // namespace atlas
